"""Per-source Bayesian attack trees and the N-tree attack model.

``build_bat`` unrolls the (usually cyclic) TAG into a tree rooted at one
attack source by enumerating every non-backtracking path of at most
``nb_steps`` edges; the path memory lives in each topological node, which is
what breaks cycles without dropping any attacker option.  Condition and
sensor nodes are fresh per step instance, so with a single attack type the
undirected skeleton is a tree and exact propagation stays linear.

``build_bam`` builds one tree per potential source; the trees are independent
and can be built (and later evaluated) in parallel.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._kernels import (
    N_COND,
    N_SENSOR,
    N_SOURCE,
    N_STEP,
    N_TOPO,
    get_kernel,
)
from .params import ModelParams
from .polytree import Cpt, PolytreeNet
from .polytree import validate_polytree as _validate_net
from .tag import TAG

__all__ = [
    "Bat",
    "BAM",
    "BatNode",
    "build_bat",
    "build_bam",
    "node_count_bound",
    "validate_polytree",
    "effective_priors",
]

BAT_FORMAT_VERSION = 1

KIND_NAMES = {
    N_TOPO: "Topological",
    N_STEP: "AttackStep",
    N_COND: "Condition",
    N_SENSOR: "Sensor",
    N_SOURCE: "AttackSource",
}

STATE_LABELS = {
    N_TOPO: ("NotCompromised", "Compromised"),
    N_SOURCE: ("NotCompromised", "Compromised"),
    N_STEP: ("Failed", "Succeeded"),
    N_COND: ("Failed", "Succeeded"),
    N_SENSOR: ("NoAlert", "Alert"),
}


@dataclass(frozen=True)
class BatNode:
    """Object view of one tree node (the arrays stay the source of truth)."""

    id: str
    kind: str
    path_memory: tuple[str, ...]
    state_labels: tuple[str, str]
    cpt: Cpt
    parents: tuple[str, ...]
    back_ref: str


class Bat:
    """One Bayesian attack tree: flat network plus TAG back-references."""

    def __init__(self, net: PolytreeNet, tag: TAG, source: str, kind, terminal, stepref, depth):
        self.net = net
        self.tag = tag
        self.source = source
        self.kind = kind
        self.terminal = terminal
        self.stepref = stepref
        self.depth = depth
        self._sensor_nodes = None
        self._topo_nodes = None

    def __len__(self) -> int:
        return self.net.n

    @property
    def n(self) -> int:
        return self.net.n

    @property
    def is_polytree(self) -> bool:
        return self.net.is_polytree

    @property
    def root(self) -> int:
        return 0

    def sensor_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """(node indices, TAG step gid) of every sensor node."""
        if self._sensor_nodes is None:
            idx = np.nonzero(self.kind == N_SENSOR)[0].astype(np.int64)
            self._sensor_nodes = (idx, self.stepref[idx].astype(np.int64))
        return self._sensor_nodes

    def topo_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """(node indices, terminal TAG node index) of every topological node,
        the attack source included."""
        if self._topo_nodes is None:
            mask = (self.kind == N_TOPO) | (self.kind == N_SOURCE)
            idx = np.nonzero(mask)[0].astype(np.int64)
            self._topo_nodes = (idx, self.terminal[idx].astype(np.int64))
        return self._topo_nodes

    def _context_topo(self, x: int) -> int:
        """The topological node whose path prefixes node x."""
        k = self.kind[x]
        if k == N_TOPO or k == N_SOURCE:
            return x
        if k == N_STEP:
            return int(self.net.skelp[x])
        return self._context_topo(int(self.net.skelp[x]))

    def path_memory(self, x: int) -> tuple[str, ...]:
        """Ordered host ids compromised along the path leading to node x."""
        cur = self._context_topo(x)
        rev = []
        while True:
            rev.append(self.tag.nodes[int(self.terminal[cur])])
            up = int(self.net.skelp[cur])
            if up < 0:
                break
            cur = int(self.net.skelp[up])  # step node -> its source topo node
        return tuple(reversed(rev))

    def node_id(self, x: int) -> str:
        k = self.kind[x]
        path = ">".join(self.path_memory(x))
        if k == N_SOURCE or k == N_TOPO:
            return f"tn:{path}"
        step = self.tag.steps[int(self.stepref[x])]
        prefix = {N_STEP: "as", N_COND: "bcn", N_SENSOR: "bsen"}[int(k)]
        return f"{prefix}[{step.attack_type}]:{path}>{step.target}"

    def node(self, x: int) -> BatNode:
        k = int(self.kind[x])
        if k == N_SOURCE or k == N_TOPO:
            back = self.tag.nodes[int(self.terminal[x])]
        else:
            step = self.tag.steps[int(self.stepref[x])]
            back = f"{step.source}->{step.target}[{step.attack_type}]"
        return BatNode(
            id=self.node_id(x),
            kind=KIND_NAMES[k],
            path_memory=self.path_memory(x),
            state_labels=STATE_LABELS[k],
            cpt=self.net.cpt(x),
            parents=tuple(self.node_id(p) for p in self.net.parents(x)),
            back_ref=back,
        )

    def nodes(self):
        return (self.node(x) for x in range(self.n))

    def topo_path_memories(self) -> set[tuple[str, ...]]:
        idx, _ = self.topo_nodes()
        return {self.path_memory(int(x)) for x in idx}

    def to_dict(self, max_nodes: int = 200_000) -> dict:
        if self.n > max_nodes:
            raise ValueError(f"refusing to export {self.n} nodes (limit {max_nodes})")
        return {
            "formatVersion": BAT_FORMAT_VERSION,
            "source": self.source,
            "nodes": [
                {
                    "id": n.id,
                    "kind": n.kind,
                    "pathMemory": list(n.path_memory),
                    "parents": list(n.parents),
                    "cpt": {"kind": n.cpt.kind, "data": list(n.cpt.data), "rows": n.cpt.rows().tolist()},
                }
                for n in self.nodes()
            ],
        }


def effective_priors(tag: TAG, params: ModelParams, source_priors: dict) -> dict[str, float]:
    """Per-host attack-source priors, defaulted from the model parameters.

    Hosts missing from the topology's prior map fall back to the internet
    prior when literally named ``internet`` and the other-hosts prior
    otherwise.
    """
    out = {}
    for h in tag.nodes:
        if h in source_priors:
            out[h] = float(source_priors[h])
        elif h == "internet":
            out[h] = params.probability_internet
        else:
            out[h] = params.probability_other_hosts
    return out


def build_bat(tag: TAG, source: str, params: ModelParams, priors: dict, backend: str | None = None) -> Bat:
    """Build the attack tree rooted at ``source``.

    Children are expanded in ascending TAG-node order, so the emitted arrays
    (and hence exports) are identical across runs.
    """
    if source not in tag.nodes:
        raise ValueError(f"source {source!r} is not a TAG node")
    if source not in priors:
        raise KeyError(f"no attack-source prior for {source!r}")
    indptr, target, cond_p, has_sen, fp, fn, _gid = tag.flat_adjacency()
    src = tag.node_index(source)

    count = get_kernel("bat_count", backend)
    fill = get_kernel("bat_fill", backend)
    n_nodes, n_edges, n_cdat = count(indptr, target, has_sen, src, params.nb_steps)

    kind = np.empty(n_nodes, dtype=np.int8)
    pind = np.empty(n_nodes + 1, dtype=np.int64)
    pidx = np.empty(n_edges, dtype=np.int32)
    ckind = np.empty(n_nodes, dtype=np.int8)
    coff = np.empty(n_nodes + 1, dtype=np.int64)
    cdat = np.empty(n_cdat, dtype=np.float64)
    terminal = np.empty(n_nodes, dtype=np.int32)
    stepref = np.empty(n_nodes, dtype=np.int32)
    skelp = np.empty(n_nodes, dtype=np.int32)
    skele = np.empty(n_nodes, dtype=np.int64)
    skeld = np.empty(n_nodes, dtype=np.int8)
    depth = np.empty(n_nodes, dtype=np.int16)

    filled, polytree = fill(
        indptr,
        target,
        cond_p,
        has_sen,
        fp,
        fn,
        src,
        float(priors[source]),
        params.nb_steps,
        params.probability_unknown_attack,
        params.probability_new_attack_step,
        kind,
        pind,
        pidx,
        ckind,
        coff,
        cdat,
        terminal,
        stepref,
        skelp,
        skele,
        skeld,
        depth,
    )
    if filled != n_nodes:
        raise AssertionError(f"builder count mismatch: {filled} != {n_nodes}")
    coff[n_nodes] = n_cdat

    net = PolytreeNet.from_arrays(
        pind=pind,
        pidx=pidx,
        ckind=ckind,
        coff=coff,
        cdat=cdat,
        order=np.arange(n_nodes, dtype=np.int32),
        skelp=skelp,
        skele=skele,
        skeld=skeld,
        is_polytree=bool(polytree),
        n_components=1,
    )
    return Bat(net, tag, source, kind, terminal, stepref, depth)


class BAM:
    """The family of attack trees, one per potential attack source."""

    def __init__(self, tag: TAG, params: ModelParams, priors: dict[str, float], bats: list[Bat]):
        self.tag = tag
        self.params = params
        self.priors = priors
        self.bats = bats
        if len(bats) != len(tag.nodes):
            raise ValueError("a BAM carries exactly one tree per TAG node")

    def __len__(self) -> int:
        return len(self.bats)

    def bat(self, source: str) -> Bat:
        return self.bats[self.tag.node_index(source)]

    def node_counts(self) -> list[int]:
        return [b.n for b in self.bats]

    def summary(self) -> dict:
        counts = self.node_counts()
        return {
            "batCount": len(self.bats),
            "totalNodes": int(sum(counts)),
            "maxNodes": int(max(counts, default=0)),
            "nodeCounts": {b.source: b.n for b in self.bats},
            "params": self.params.to_dict(),
        }


def build_bam(
    tag: TAG,
    params: ModelParams,
    source_priors: dict | None = None,
    workers: int = 1,
    backend: str | None = None,
) -> BAM:
    """One tree per TAG node; trees are independent, so builds parallelise."""
    priors = effective_priors(tag, params, source_priors or {})
    sources = list(tag.nodes)
    if workers and workers > 1 and len(sources) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            bats = list(pool.map(lambda s: build_bat(tag, s, params, priors, backend), sources))
    else:
        bats = [build_bat(tag, s, params, priors, backend) for s in sources]
    return BAM(tag, params, priors, bats)


def node_count_bound(n_nodes: int, k: int, nb_steps: int) -> int:
    """Worst-case node count of one tree on a complete graph: 4k * N!/(N-nbSteps)!."""
    if k == 0:
        return 0
    if not 1 <= nb_steps <= n_nodes:
        raise ValueError(f"nb_steps must satisfy 1 <= nb_steps <= N, got {nb_steps} vs N={n_nodes}")
    return 4 * k * math.factorial(n_nodes) // math.factorial(n_nodes - nb_steps)


def validate_polytree(bat_or_net) -> bool:
    """See :func:`bamrisk.polytree.validate_polytree`; accepts trees too."""
    net = bat_or_net.net if isinstance(bat_or_net, Bat) else bat_or_net
    return _validate_net(net)


def dump_bat(bat: Bat, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(bat.to_dict(), fh, indent=2)
        fh.write("\n")
