"""Shared fixtures and random-model generators for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from bamrisk.inference import EvidenceItem
from bamrisk.polytree import Cpt, PolytreeNet


def random_polytree(rng: np.random.Generator, n_nodes: int) -> PolytreeNet:
    """A random polytree with arbitrary-table CPTs.

    A random tree is grown by attachment and every edge is oriented by a coin
    flip, so colliders (multi-parent nodes) appear routinely.  Table rows are
    uniform in (0, 1), which keeps every joint state possible.
    """
    parents: list[list[int]] = [[] for _ in range(n_nodes)]
    for i in range(1, n_nodes):
        j = int(rng.integers(0, i))
        if rng.random() < 0.5:
            parents[i].append(j)
        else:
            parents[j].append(i)
    cpts = []
    for i in range(n_nodes):
        m = len(parents[i])
        if m == 0:
            cpts.append(Cpt.prior(float(rng.uniform(0.01, 0.99))))
        else:
            cpts.append(Cpt.table(rng.uniform(0.01, 0.99, size=1 << m)))
    return PolytreeNet.from_nodes(parents, cpts)


def random_evidence(rng: np.random.Generator, n_nodes: int, rate: float = 0.3) -> list[EvidenceItem]:
    items = []
    for node in range(n_nodes):
        if rng.random() >= rate:
            continue
        mode = rng.integers(3)
        if mode == 0:
            items.append(EvidenceItem.hard_positive(node))
        elif mode == 1:
            items.append(EvidenceItem.hard_negative(node))
        else:
            items.append(EvidenceItem.soft(node, float(rng.uniform(0.05, 0.95))))
    return items


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260809)


@pytest.fixture(scope="session")
def tiny_topology_doc():
    """internet -> A <-> B triangle with one sensored vulnerability each."""
    return {
        "formatVersion": 1,
        "hosts": [
            {"id": "internet", "vulnerabilities": []},
            {
                "id": "A",
                "vulnerabilities": [
                    {
                        "id": "v-A",
                        "av": "Network",
                        "ac": "Low",
                        "pr": "None",
                        "ui": "None",
                        "probability": 0.8,
                        "sensor": {"id": "s-A", "fp": 0.05, "fn": 0.01},
                    }
                ],
            },
            {
                "id": "B",
                "vulnerabilities": [
                    {
                        "id": "v-B",
                        "av": "Network",
                        "ac": "Low",
                        "pr": "None",
                        "ui": "None",
                        "probability": 0.8,
                        "sensor": {"id": "s-B", "fp": 0.05, "fn": 0.01},
                    }
                ],
            },
        ],
        "subnets": [{"id": "net", "hosts": ["A", "B"]}],
        "reachability": [["internet", "A"], ["A", "B"], ["B", "A"]],
        "sourcePriors": {"internet": 0.7, "A": 0.1, "B": 0.1},
    }
