"""Topological attack graph (TAG) generation and attack-step grouping.

The TAG has one node per host and one edge per (source, target, attack type)
triple.  Raw steps — one per exploitable vulnerability per reachable pair —
are merged by :func:`group_attack_steps` into a single step whose condition is
the OR of the member conditions and whose sensor fires when any member sensor
fires.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .topology import AttackVector, Topology, cvss_exploit_probability

__all__ = [
    "Condition",
    "GroupedSensor",
    "AttackStep",
    "TAG",
    "REMOTE_EXPLOIT",
    "generate_tag",
    "group_attack_steps",
]

TAG_FORMAT_VERSION = 1

#: The single built-in attack type; the grouping and build machinery is
#: generic over type names so synthetic multi-type graphs stay expressible.
REMOTE_EXPLOIT = "RemoteExploit"

# Attack vectors that allow exploitation over a network reachability pair.
_REMOTE_VECTORS = (AttackVector.NETWORK, AttackVector.ADJACENT)


@dataclass(frozen=True)
class Condition:
    """A fact required for an attack step, with its success probability."""

    description: str
    probability: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"condition probability out of range: {self.probability}")


@dataclass(frozen=True)
class GroupedSensor:
    """The OR of the member sensors of a grouped attack step.

    A grouped miss needs every member to miss, so the combined false-negative
    rate is the product; a combined false alert happens when any member
    misfires, so false positives combine as a noisy-OR.
    """

    member_sensor_ids: tuple[str, ...]
    false_positive: float
    false_negative: float

    def __post_init__(self) -> None:
        if not self.member_sensor_ids:
            raise ValueError("grouped sensor needs at least one member")
        if not 0.0 <= self.false_positive <= 1.0 or not 0.0 <= self.false_negative <= 1.0:
            raise ValueError("grouped sensor rates out of range")


@dataclass(frozen=True)
class AttackStep:
    source: str
    target: str
    attack_type: str = REMOTE_EXPLOIT
    condition: Condition = field(default_factory=lambda: Condition("", 1.0))
    sensor: GroupedSensor | None = None
    member_vuln_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.member_vuln_ids:
            raise ValueError("attack step needs at least one member vulnerability")

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.source, self.target, self.attack_type)


class TAG:
    """Topological attack graph over host ids, with grouped steps."""

    def __init__(self, nodes: list[str], steps: list[AttackStep]):
        self.nodes: list[str] = sorted(nodes)
        self._index = {h: i for i, h in enumerate(self.nodes)}
        for s in steps:
            if s.source not in self._index or s.target not in self._index:
                raise ValueError(f"step {s.key} references unknown node")
        keys = [s.key for s in steps]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (source, target, type) step after grouping")
        # Stable global order: by source, then target, then type; this makes
        # builds reproducible and doubles as the per-source adjacency order.
        self.steps: list[AttackStep] = sorted(
            steps, key=lambda s: (self._index[s.source], self._index[s.target], s.attack_type)
        )
        self._adjacency = None

    def __len__(self) -> int:
        return len(self.nodes)

    def node_index(self, host_id: str) -> int:
        return self._index[host_id]

    @property
    def k_max_types(self) -> int:
        """Maximum number of step types between any ordered node pair."""
        counts: dict[tuple[str, str], int] = {}
        for s in self.steps:
            pair = (s.source, s.target)
            counts[pair] = counts.get(pair, 0) + 1
        return max(counts.values(), default=0)

    def steps_with_sensors(self) -> list[int]:
        return [i for i, s in enumerate(self.steps) if s.sensor is not None]

    def steps_for_member_sensor(self, sensor_id: str) -> list[int]:
        return [
            i
            for i, s in enumerate(self.steps)
            if s.sensor is not None and sensor_id in s.sensor.member_sensor_ids
        ]

    def step_index(self, source: str, target: str, attack_type: str = REMOTE_EXPLOIT) -> int:
        for i, s in enumerate(self.steps):
            if s.key == (source, target, attack_type):
                return i
        raise KeyError((source, target, attack_type))

    def flat_adjacency(self):
        """Arrays the BAT build kernels consume (cached).

        Returns (indptr, target, cond_p, has_sensor, fp, fn, step_gid) where
        ``indptr`` slices the step arrays per source node and steps are in
        (target, type) order within each slice.
        """
        if self._adjacency is None:
            n = len(self.nodes)
            counts = np.zeros(n + 1, dtype=np.int64)
            for s in self.steps:
                counts[self._index[s.source] + 1] += 1
            indptr = np.cumsum(counts)
            m = len(self.steps)
            target = np.empty(m, dtype=np.int32)
            cond_p = np.empty(m, dtype=np.float64)
            has_sensor = np.zeros(m, dtype=np.int8)
            fp = np.zeros(m, dtype=np.float64)
            fn = np.zeros(m, dtype=np.float64)
            step_gid = np.arange(m, dtype=np.int32)
            for gid, s in enumerate(self.steps):
                target[gid] = self._index[s.target]
                cond_p[gid] = s.condition.probability
                if s.sensor is not None:
                    has_sensor[gid] = 1
                    fp[gid] = s.sensor.false_positive
                    fn[gid] = s.sensor.false_negative
            self._adjacency = (indptr, target, cond_p, has_sensor, fp, fn, step_gid)
        return self._adjacency

    def to_dict(self) -> dict:
        return {
            "formatVersion": TAG_FORMAT_VERSION,
            "nodes": list(self.nodes),
            "steps": [
                {
                    "source": s.source,
                    "target": s.target,
                    "type": s.attack_type,
                    "conditionP": s.condition.probability,
                    "sensor": (
                        {
                            "members": list(s.sensor.member_sensor_ids),
                            "fp": s.sensor.false_positive,
                            "fn": s.sensor.false_negative,
                        }
                        if s.sensor is not None
                        else None
                    ),
                    "members": list(s.member_vuln_ids),
                }
                for s in self.steps
            ],
        }

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def group_attack_steps(raw: list[AttackStep]) -> list[AttackStep]:
    """Merge steps sharing (source, target, type) into one step each.

    The grouped condition probability is ``1 - prod(1 - p_i)`` under member
    independence; singleton groups pass through unchanged so grouping is
    idempotent bit for bit.
    """
    groups: dict[tuple[str, str, str], list[AttackStep]] = {}
    order: list[tuple[str, str, str]] = []
    for step in raw:
        if step.key not in groups:
            groups[step.key] = []
            order.append(step.key)
        groups[step.key].append(step)

    grouped: list[AttackStep] = []
    for key in order:
        members = groups[key]
        if len(members) == 1:
            grouped.append(members[0])
            continue
        miss = 1.0
        for m in members:
            miss *= 1.0 - m.condition.probability
        vuln_ids = tuple(v for m in members for v in m.member_vuln_ids)
        sensored = [m.sensor for m in members if m.sensor is not None]
        sensor = None
        if sensored:
            fn = 1.0
            fp_miss = 1.0
            sensor_ids: list[str] = []
            for s in sensored:
                fn *= s.false_negative
                fp_miss *= 1.0 - s.false_positive
                sensor_ids.extend(s.member_sensor_ids)
            sensor = GroupedSensor(tuple(sensor_ids), 1.0 - fp_miss, fn)
        source, target, attack_type = key
        grouped.append(
            AttackStep(
                source=source,
                target=target,
                attack_type=attack_type,
                condition=Condition(
                    f"at least one of {len(vuln_ids)} vulnerabilities exploited on {target}",
                    1.0 - miss,
                ),
                sensor=sensor,
                member_vuln_ids=vuln_ids,
            )
        )
    return grouped


def generate_tag(topology: Topology) -> TAG:
    """Build the TAG for a topology.

    For every reachability pair (s, t) and every vulnerability on t whose
    attack vector is remote-capable (Network or Adjacent), a raw RemoteExploit
    step s -> t is created and then grouped.  Local/Physical vulnerabilities
    never produce steps.
    """
    raw: list[AttackStep] = []
    hosts = {h.id: h for h in topology.hosts}
    for src, dst in sorted(topology.reachability):
        for v in hosts[dst].vulnerabilities:
            if v.attack_vector not in _REMOTE_VECTORS:
                continue
            sensor = None
            if v.sensor is not None:
                sensor = GroupedSensor((v.sensor.id,), v.sensor.false_positive, v.sensor.false_negative)
            raw.append(
                AttackStep(
                    source=src,
                    target=dst,
                    attack_type=REMOTE_EXPLOIT,
                    condition=Condition(
                        f"vulnerability {v.id} exploited on {dst}",
                        cvss_exploit_probability(v),
                    ),
                    sensor=sensor,
                    member_vuln_ids=(v.id,),
                )
            )
    return TAG(nodes=topology.host_ids, steps=group_attack_steps(raw))


def tag_from_dict(document: dict) -> TAG:
    """Inverse of :meth:`TAG.to_dict` (used by golden-file tests and the CLI)."""
    if document.get("formatVersion") != TAG_FORMAT_VERSION:
        raise ValueError(f"unsupported TAG formatVersion {document.get('formatVersion')!r}")
    steps = []
    for s in document["steps"]:
        sensor = None
        if s.get("sensor") is not None:
            sensor = GroupedSensor(tuple(s["sensor"]["members"]), s["sensor"]["fp"], s["sensor"]["fn"])
        steps.append(
            AttackStep(
                source=s["source"],
                target=s["target"],
                attack_type=s.get("type", REMOTE_EXPLOIT),
                condition=Condition("", s["conditionP"]),
                sensor=sensor,
                member_vuln_ids=tuple(s.get("members", ("?",))),
            )
        )
    return TAG(nodes=list(document["nodes"]), steps=steps)
