"""Exact marginal inference on boolean polytrees, plus the enumeration oracle.

``infer_marginals`` runs two-pass Pearl propagation (linear in node count
times CPT size); ``brute_force_marginals`` sums the full joint and exists so
every nontrivial expectation in the test suite can be cross-checked against
something that is obviously correct.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import get_kernel

__all__ = [
    "EvidenceItem",
    "Marginals",
    "InferenceError",
    "NonPolytreeError",
    "ContradictoryEvidenceError",
    "ImpossibleEvidenceError",
    "evidence_likelihoods",
    "infer_marginals",
    "brute_force_marginals",
]

HARD_POSITIVE = "hard_positive"
HARD_NEGATIVE = "hard_negative"
SOFT = "soft"

_BRUTE_FORCE_MAX_NODES = 22


class InferenceError(ValueError):
    pass


class NonPolytreeError(InferenceError):
    pass


class ContradictoryEvidenceError(InferenceError):
    pass


class ImpossibleEvidenceError(InferenceError):
    pass


@dataclass(frozen=True)
class EvidenceItem:
    """An observation on one node.

    Soft evidence is virtual (likelihood) evidence: an implicit observation
    with P(obs | positive) = p and P(obs | negative) = 1 - p, so Soft(1) and
    Soft(0) coincide with the hard states and Soft(0.5) is a no-op.
    """

    node: int
    mode: str
    p: float = 1.0

    def __post_init__(self) -> None:
        if self.mode not in (HARD_POSITIVE, HARD_NEGATIVE, SOFT):
            raise InferenceError(f"unknown evidence mode {self.mode!r}")
        if self.mode == SOFT and not 0.0 <= self.p <= 1.0:
            raise InferenceError(f"soft evidence probability out of range: {self.p}")

    @classmethod
    def hard_positive(cls, node: int) -> "EvidenceItem":
        return cls(node, HARD_POSITIVE)

    @classmethod
    def hard_negative(cls, node: int) -> "EvidenceItem":
        return cls(node, HARD_NEGATIVE)

    @classmethod
    def soft(cls, node: int, p: float) -> "EvidenceItem":
        return cls(node, SOFT, p)

    @property
    def likelihood(self) -> tuple[float, float]:
        if self.mode == HARD_POSITIVE:
            return (0.0, 1.0)
        if self.mode == HARD_NEGATIVE:
            return (1.0, 0.0)
        return (1.0 - self.p, self.p)


class Marginals:
    """Posterior probability of the positive state per node."""

    def __init__(self, positive: np.ndarray):
        self.positive = positive

    def __getitem__(self, node: int) -> float:
        return float(self.positive[node])

    def __len__(self) -> int:
        return len(self.positive)

    def as_dict(self) -> dict[int, float]:
        return {i: float(p) for i, p in enumerate(self.positive)}


def evidence_likelihoods(n: int, evidence) -> np.ndarray:
    """Fold an evidence list into a per-node likelihood array.

    Rejects several items on one node: with last-wins semantics the result
    would depend on list order, which the propagation contract forbids.
    """
    L = np.ones((n, 2), dtype=np.float64)
    seen: set[int] = set()
    for item in evidence:
        node = int(item.node)
        if not 0 <= node < n:
            raise InferenceError(f"evidence references unknown node {node}")
        if node in seen:
            raise ContradictoryEvidenceError(f"multiple evidence items on node {node}")
        seen.add(node)
        L[node, 0], L[node, 1] = item.likelihood
    return L


def infer_marginals(net, evidence=(), backend: str | None = None, likelihoods=None) -> Marginals:
    """Exact posterior marginals of every node given the evidence.

    ``likelihoods`` short-circuits evidence folding when the caller already
    holds the (n, 2) likelihood array (the assessment engine does).
    """
    if not net.is_polytree:
        raise NonPolytreeError("inference requires a polytree structure")
    L = evidence_likelihoods(net.n, evidence) if likelihoods is None else likelihoods
    sweep = get_kernel("bp_sweep", backend)
    belief, status = sweep(
        net.pind,
        net.pidx,
        net.ckind,
        net.coff,
        net.cdat,
        net.chptr,
        net.chedge,
        net.order,
        net.skelp,
        net.skele,
        net.skeld,
        L,
        net.max_children,
    )
    if status != 0:
        raise ImpossibleEvidenceError("impossible evidence: the observed state has probability zero")
    return Marginals(belief[:, 1].copy())


def brute_force_marginals(net, evidence=(), likelihoods=None) -> Marginals:
    """Marginals by explicit summation over the full joint distribution.

    Works on any DAG (the polytree property is irrelevant here), which is what
    makes it an independent oracle for the propagation engine.
    """
    n = net.n
    if n > _BRUTE_FORCE_MAX_NODES:
        raise InferenceError(f"brute force supports at most {_BRUTE_FORCE_MAX_NODES} nodes, got {n}")
    L = evidence_likelihoods(n, evidence) if likelihoods is None else likelihoods
    states = np.arange(1 << n, dtype=np.int64)
    joint = np.ones(1 << n, dtype=np.float64)
    for x in range(n):
        m = int(net.pind[x + 1] - net.pind[x])
        combo = np.zeros(1 << n, dtype=np.int64)
        for i in range(m):
            p = int(net.pidx[net.pind[x] + i])
            combo |= ((states >> p) & 1) << i
        rows = _rows_vector(net, x, m, combo)
        bit = ((states >> x) & 1).astype(bool)
        joint *= np.where(bit, rows, 1.0 - rows)
        joint *= np.where(bit, L[x, 1], L[x, 0])
    z = joint.sum()
    if not z > 0.0:
        raise ImpossibleEvidenceError("impossible evidence: the observed state has probability zero")
    positive = np.empty(n, dtype=np.float64)
    for x in range(n):
        bit = ((states >> x) & 1).astype(bool)
        positive[x] = joint[bit].sum() / z
    return Marginals(positive)


def _rows_vector(net, x, m, combo):
    from ._kernels import K_AND, K_OR_LEAK, K_PRIOR, K_SENSOR

    kind = int(net.ckind[x])
    off = int(net.coff[x])
    if kind == K_PRIOR:
        return np.full(len(combo), net.cdat[off])
    if kind == K_OR_LEAK:
        return np.where(combo == 0, net.cdat[off], 1.0)
    if kind == K_AND:
        return np.where(combo == (1 << m) - 1, net.cdat[off], 0.0)
    if kind == K_SENSOR:
        return np.where(combo == 1, 1.0 - net.cdat[off + 1], net.cdat[off])
    return net.cdat[off + combo]
