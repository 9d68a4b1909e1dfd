"""Flat polytree Bayesian networks over boolean variables.

A :class:`PolytreeNet` stores structure and CPTs in the array layout the
kernels consume.  CPTs come in five families; the OR/AND gate families keep a
compact parameter form whose rows evaluate identically to the explicit table
(the kernels expand rows on the fly up to 10 parents and switch to the closed
form only above that).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ._kernels import K_AND, K_OR_LEAK, K_PRIOR, K_SENSOR, K_TABLE, _row_p

__all__ = ["Cpt", "PolytreeNet", "cpt_topological", "cpt_attack_step", "cpt_sensor"]

_MAX_TABLE_PARENTS = 20


@dataclass(frozen=True)
class Cpt:
    """A conditional probability table over boolean parents.

    ``data`` holds explicit row probabilities for the ``table`` family (row
    index = sum of parent_state_i << i) and the family parameters otherwise.
    """

    kind: int
    num_parents: int
    data: tuple[float, ...]

    def __post_init__(self) -> None:
        for v in self.data:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"CPT entry out of range: {v}")

    @classmethod
    def prior(cls, p: float) -> "Cpt":
        return cls(K_PRIOR, 0, (float(p),))

    @classmethod
    def table(cls, values) -> "Cpt":
        values = tuple(float(v) for v in values)
        m = (len(values) - 1).bit_length()
        if len(values) != 1 << m or m > _MAX_TABLE_PARENTS:
            raise ValueError(f"table length {len(values)} is not a supported power of two")
        if m == 0:
            return cls.prior(values[0])
        return cls(K_TABLE, m, values)

    @classmethod
    def or_leak(cls, num_parents: int, leak: float) -> "Cpt":
        if num_parents < 1:
            raise ValueError("noisy-OR needs at least one parent")
        return cls(K_OR_LEAK, num_parents, (float(leak),))

    @classmethod
    def and_gate(cls, num_parents: int, factor: float) -> "Cpt":
        if num_parents < 1:
            raise ValueError("AND gate needs at least one parent")
        return cls(K_AND, num_parents, (float(factor),))

    @classmethod
    def sensor(cls, false_positive: float, false_negative: float) -> "Cpt":
        return cls(K_SENSOR, 1, (float(false_positive), float(false_negative)))

    def row(self, combo: int) -> float:
        """P(positive | parent combo); bit i of combo is parent i's state."""
        if not 0 <= combo < (1 << self.num_parents):
            raise IndexError(f"combo {combo} out of range for {self.num_parents} parents")
        data = np.asarray(self.data, dtype=np.float64)
        return float(_row_p(self.kind, data, 0, self.num_parents, combo))

    def rows(self) -> np.ndarray:
        """The full table, positive-state probability per parent combination."""
        if self.num_parents > _MAX_TABLE_PARENTS:
            raise ValueError("table too large to materialise")
        return np.array([self.row(c) for c in range(1 << self.num_parents)])


def cpt_topological(num_attack_step_parents: int, pua: float) -> Cpt:
    """Noisy-OR with leak: any succeeded step compromises the node, and an
    unknown attack may still compromise it when all known steps failed."""
    if num_attack_step_parents < 1:
        raise ValueError("a non-source topological node always has step parents")
    if not 0.0 <= pua <= 1.0:
        raise ValueError("pua out of range")
    return Cpt.or_leak(num_attack_step_parents, pua)


def cpt_attack_step(num_condition_parents: int, pnas: float) -> Cpt:
    """AND of the source node and all conditions, damped by the propagation
    probability: the step succeeds with probability pnas only when the source
    is compromised and every condition holds."""
    if num_condition_parents < 0:
        raise ValueError("condition count must be non-negative")
    if not 0.0 <= pnas <= 1.0:
        raise ValueError("pnas out of range")
    return Cpt.and_gate(1 + num_condition_parents, pnas)


def cpt_sensor(fp: float, fn: float) -> Cpt:
    """Binary detection channel: P(alert | succeeded) = 1 - fn, P(alert | failed) = fp."""
    if not 0.0 <= fp <= 1.0 or not 0.0 <= fn <= 1.0:
        raise ValueError("sensor rates out of range")
    return Cpt.sensor(fp, fn)


class PolytreeNet:
    """Boolean Bayesian network in flat-array form with a rooted skeleton.

    ``from_nodes`` is the convenience constructor for test-scale networks;
    the attack-tree builder emits the arrays (including the schedule)
    directly and uses ``from_arrays``.
    """

    def __init__(
        self,
        pind,
        pidx,
        ckind,
        coff,
        cdat,
        order,
        skelp,
        skele,
        skeld,
        is_polytree: bool,
        n_components: int,
    ):
        self.pind = pind
        self.pidx = pidx
        self.ckind = ckind
        self.coff = coff
        self.cdat = cdat
        self.order = order
        self.skelp = skelp
        self.skele = skele
        self.skeld = skeld
        self.is_polytree = is_polytree
        self.n_components = n_components
        self.n = len(pind) - 1
        # Child CSR: edge ids grouped by parent, in emission order.
        if len(pidx):
            perm = np.argsort(pidx, kind="stable").astype(np.int64)
            counts = np.bincount(pidx, minlength=self.n)
        else:
            perm = np.zeros(0, dtype=np.int64)
            counts = np.zeros(self.n, dtype=np.int64)
        self.chedge = perm
        self.chptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.chptr[1:])
        self.max_children = int(counts.max()) if self.n else 0

    def __len__(self) -> int:
        return self.n

    @property
    def n_edges(self) -> int:
        return len(self.pidx)

    def parents(self, x: int) -> list[int]:
        return [int(p) for p in self.pidx[self.pind[x] : self.pind[x + 1]]]

    def cpt(self, x: int) -> Cpt:
        m = int(self.pind[x + 1] - self.pind[x])
        kind = int(self.ckind[x])
        lo = int(self.coff[x])
        hi = int(self.coff[x + 1]) if x + 1 < len(self.coff) else lo + 1
        data = tuple(float(v) for v in self.cdat[lo:hi])
        if kind == K_PRIOR:
            return Cpt.prior(data[0])
        return Cpt(kind, m, data)

    @classmethod
    def from_arrays(cls, **kwargs) -> "PolytreeNet":
        return cls(**kwargs)

    @classmethod
    def from_nodes(cls, parents: list[list[int]], cpts: list[Cpt]) -> "PolytreeNet":
        """Build a network from per-node parent lists and CPTs (test scale)."""
        n = len(parents)
        if len(cpts) != n:
            raise ValueError("parents and cpts must have equal length")
        pind = np.zeros(n + 1, dtype=np.int64)
        for x, ps in enumerate(parents):
            m = len(ps)
            if cpts[x].num_parents != m:
                raise ValueError(f"node {x}: CPT expects {cpts[x].num_parents} parents, got {m}")
            pind[x + 1] = pind[x] + m
        pidx = np.empty(pind[-1], dtype=np.int32)
        pos = 0
        for ps in parents:
            for p in ps:
                if not 0 <= p < n:
                    raise ValueError(f"parent index {p} out of range")
                pidx[pos] = p
                pos += 1
        ckind = np.empty(n, dtype=np.int8)
        chunks = []
        for x, c in enumerate(cpts):
            ckind[x] = c.kind
            chunks.append(np.asarray(c.data, dtype=np.float64))
        coff = np.zeros(n + 1, dtype=np.int64)
        total = 0
        for x, chunk in enumerate(chunks):
            coff[x] = total
            total += len(chunk)
        coff[n] = total
        cdat = np.concatenate(chunks) if chunks else np.zeros(0)
        order, skelp, skele, skeld, is_polytree, n_components = _schedule(n, pind, pidx)
        return cls(pind, pidx, ckind, coff, cdat, order, skelp, skele, skeld, is_polytree, n_components)


def _schedule(n, pind, pidx):
    """Root the undirected skeleton per component, BFS order, detect cycles."""
    children: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for x in range(n):
        for e in range(pind[x], pind[x + 1]):
            children[int(pidx[e])].append((x, int(e)))

    order = np.empty(n, dtype=np.int32)
    skelp = np.full(n, -1, dtype=np.int32)
    skele = np.full(n, -1, dtype=np.int64)
    skeld = np.zeros(n, dtype=np.int8)
    seen = np.zeros(n, dtype=bool)
    pos = 0
    n_components = 0
    for root in range(n):
        if seen[root]:
            continue
        n_components += 1
        seen[root] = True
        queue = deque([root])
        while queue:
            x = queue.popleft()
            order[pos] = x
            pos += 1
            for e in range(pind[x], pind[x + 1]):
                u = int(pidx[e])
                if not seen[u]:
                    seen[u] = True
                    skelp[u] = x
                    skele[u] = e  # edge sits in x's slots; x is u's BN-child
                    skeld[u] = 0
                    queue.append(u)
            for u, e in children[x]:
                if not seen[u]:
                    seen[u] = True
                    skelp[u] = x
                    skele[u] = e  # u's own parent slot pointing at x
                    skeld[u] = 1
                    queue.append(u)
    is_polytree = len(pidx) == n - n_components
    return order, skelp, skele, skeld, is_polytree, n_components


def validate_polytree(net) -> bool:
    """True iff the directed graph is acyclic and its skeleton is a forest.

    Any directed cycle closes an undirected one, so a forest skeleton implies
    both conditions; parallel edges count as a two-edge cycle.
    """
    pind = net.pind
    pidx = net.pidx
    n = len(pind) - 1
    src = np.empty(len(pidx), dtype=np.int64)
    for x in range(n):
        src[pind[x] : pind[x + 1]] = x
    from ._kernels import get_kernel

    return bool(get_kernel("forest_check", "python")(n, src, pidx.astype(np.int64)))
