"""Dynamic risk assessment: evidence state over the attack model plus ranking.

Security events land on the model as evidence: a sensor event touches every
instance of that sensor's attack step across all trees, a host event touches
every topological node whose terminal asset is that host.  ``assess`` runs
per-tree inference (optionally fanned out over a thread pool), consolidates
each asset's compromise probability as the maximum over all its instances,
and ranks assets.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .batbuild import BAM, Bat, build_bam
from .inference import (
    HARD_NEGATIVE,
    HARD_POSITIVE,
    SOFT,
    ImpossibleEvidenceError,
    infer_marginals,
)
from .params import ModelParams
from .tag import TAG, generate_tag
from .topology import Topology

__all__ = [
    "SecurityEvent",
    "RiskReport",
    "RiskEngine",
    "EngineError",
    "UnknownSubjectError",
    "AssessmentError",
    "risk_level",
    "RISK_LEVELS",
]

REPORT_FORMAT_VERSION = 1

SENSOR_ALERT = "SensorAlert"
SENSOR_SILENT = "SensorSilent"
HOST_COMPROMISED = "HostCompromised"
HOST_HEALTHY = "HostHealthy"

_SENSOR_KINDS = (SENSOR_ALERT, SENSOR_SILENT)
_HOST_KINDS = (HOST_COMPROMISED, HOST_HEALTHY)

RISK_LEVELS = ("NotSignificant", "Low", "Medium", "High")


class EngineError(ValueError):
    pass


class UnknownSubjectError(EngineError):
    pass


class AssessmentError(EngineError):
    pass


def risk_level(p: float) -> str:
    """Risk band for a compromise probability; boundaries are inclusive below."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    if p <= 0.25:
        return "NotSignificant"
    if p <= 0.5:
        return "Low"
    if p <= 0.75:
        return "Medium"
    return "High"


@dataclass(frozen=True)
class SecurityEvent:
    """One security observation.

    ``subject_id`` names a sensor (for sensor kinds) or a host.  Sensor events
    may carry ``source``/``target`` to pin the observation to one attack step;
    without them the event fans out to every step whose grouped sensor
    contains the subject.  ``confidence`` turns the hard state into soft
    evidence: c is the likelihood of the observation given the positive state
    for positive kinds, and given the negative state for negative kinds, so
    confidence 1.0 is exactly the hard state.
    """

    kind: str
    subject_id: str
    confidence: float | None = None
    timestamp: float | str | None = None
    source: str | None = None
    target: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in _SENSOR_KINDS + _HOST_KINDS:
            raise EngineError(f"unknown event kind {self.kind!r}")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise EngineError(f"confidence out of range: {self.confidence}")
        if (self.source is None) != (self.target is None):
            raise EngineError("source and target must be given together")
        if self.source is not None and self.kind not in _SENSOR_KINDS:
            raise EngineError("step scoping applies to sensor events only")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "subjectId": self.subject_id}
        if self.confidence is not None:
            out["confidence"] = self.confidence
        if self.timestamp is not None:
            out["timestamp"] = self.timestamp
        if self.source is not None:
            out["source"] = self.source
            out["target"] = self.target
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "SecurityEvent":
        try:
            return cls(
                kind=raw["kind"],
                subject_id=raw["subjectId"],
                confidence=raw.get("confidence"),
                timestamp=raw.get("timestamp"),
                source=raw.get("source"),
                target=raw.get("target"),
            )
        except KeyError as exc:
            raise EngineError(f"event missing required field {exc.args[0]!r}") from exc


@dataclass(frozen=True)
class RiskReport:
    """Consolidated per-asset compromise probabilities and ranking."""

    per_asset: dict
    ranking: tuple[str, ...]
    levels: dict
    best_path: dict

    def to_dict(self) -> dict:
        return {
            "formatVersion": REPORT_FORMAT_VERSION,
            "perAsset": {h: self.per_asset[h] for h in sorted(self.per_asset)},
            "ranking": list(self.ranking),
            "riskLevel": {h: self.levels[h] for h in sorted(self.levels)},
            "bestPath": {h: list(self.best_path[h]) for h in sorted(self.best_path)},
        }

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


# Internal evidence modes per instance: (l_negative, l_positive) likelihoods.
def _mode_likelihood(kind: str, confidence: float | None) -> tuple[float, float]:
    positive = kind in (SENSOR_ALERT, HOST_COMPROMISED)
    if confidence is None:
        return (0.0, 1.0) if positive else (1.0, 0.0)
    c = float(confidence)
    return (1.0 - c, c) if positive else (c, 1.0 - c)


class RiskEngine:
    """Holds topology, model and the committed event log; answers assessments.

    Mutations (``apply_event``, ``remove_event``) are expected to be called
    from one writer; ``assess`` only reads shared state plus its own arrays,
    so concurrent assessments are safe.
    """

    def __init__(
        self,
        topology: Topology,
        params: ModelParams | None = None,
        *,
        workers: int | None = None,
        auto_silent: bool = True,
        backend: str | None = None,
        tag: TAG | None = None,
    ):
        self.topology = topology
        self.params = params or ModelParams()
        self.auto_silent = auto_silent
        self.backend = backend
        self.workers = workers if workers is not None else min(8, os.cpu_count() or 1)
        self.tag = tag if tag is not None else generate_tag(topology)
        self.bam: BAM = build_bam(
            self.tag,
            self.params,
            topology.source_priors,
            workers=self.workers,
            backend=backend,
        )
        self._known_sensors = topology.sensor_ids()
        self._hosts = list(self.tag.nodes)
        self._host_index = {h: i for i, h in enumerate(self._hosts)}
        self._sensored_gids = self.tag.steps_with_sensors()
        self._member_to_gids: dict[str, list[int]] = {}
        for gid in self._sensored_gids:
            for member in self.tag.steps[gid].sensor.member_sensor_ids:
                self._member_to_gids.setdefault(member, []).append(gid)
        self.events: list[tuple[int, SecurityEvent]] = []
        self._next_event_id = 1

    # -- event log ---------------------------------------------------------

    def apply_event(self, event: SecurityEvent) -> int:
        """Validate and append an event; returns its log id."""
        self._resolve(event)  # raises on unknown/unresolvable subjects
        event_id = self._next_event_id
        self._next_event_id += 1
        self.events.append((event_id, event))
        return event_id

    def remove_event(self, event_id: int) -> SecurityEvent:
        for i, (eid, ev) in enumerate(self.events):
            if eid == event_id:
                del self.events[i]
                return ev
        raise UnknownSubjectError(f"no committed event with id {event_id}")

    def _resolve(self, event: SecurityEvent) -> list[int]:
        """Resolve a sensor event to TAG step ids (host events return [])."""
        if event.kind in _HOST_KINDS:
            if event.subject_id not in self._host_index:
                raise UnknownSubjectError(f"unknown host {event.subject_id!r}")
            return []
        if event.subject_id not in self._known_sensors:
            raise UnknownSubjectError(f"unknown sensor {event.subject_id!r}")
        if event.source is not None:
            gids = [
                gid
                for gid in self._member_to_gids.get(event.subject_id, ())
                if self.tag.steps[gid].source == event.source and self.tag.steps[gid].target == event.target
            ]
            if not gids:
                raise UnknownSubjectError(
                    f"sensor {event.subject_id!r} has no instance on step {event.source}->{event.target}"
                )
            return gids
        gids = self._member_to_gids.get(event.subject_id, [])
        if not gids and event.kind == SENSOR_ALERT:
            raise UnknownSubjectError(
                f"sensor {event.subject_id!r} exists but has no attack-step instances"
            )
        return gids

    # -- assessment --------------------------------------------------------

    def _evidence_maps(self, extra_events=()):
        """Fold the log (plus hypotheticals) into per-step and per-host likelihoods."""
        n_steps = len(self.tag.steps)
        n_hosts = len(self._hosts)
        step_l = np.ones((n_steps, 2), dtype=np.float64)
        host_l = np.ones((n_hosts, 2), dtype=np.float64)
        if self.auto_silent:
            for gid in self._sensored_gids:
                step_l[gid] = (1.0, 0.0)
        for _, event in list(self.events) + [(None, e) for e in extra_events]:
            like = _mode_likelihood(event.kind, event.confidence)
            if event.kind in _SENSOR_KINDS:
                for gid in self._resolve(event):
                    step_l[gid] = like
            else:
                host_l[self._host_index[event.subject_id]] = like
        return step_l, host_l

    def _assess_bat(self, bat: Bat, step_l, host_l):
        n_tag = len(self._hosts)
        L = np.ones((bat.n, 2), dtype=np.float64)
        sen_nodes, sen_gids = bat.sensor_nodes()
        if len(sen_nodes):
            L[sen_nodes, 0] = step_l[sen_gids, 0]
            L[sen_nodes, 1] = step_l[sen_gids, 1]
        topo_nodes, topo_terms = bat.topo_nodes()
        L[topo_nodes, 0] = host_l[topo_terms, 0]
        L[topo_nodes, 1] = host_l[topo_terms, 1]
        try:
            marginals = infer_marginals(bat.net, likelihoods=L, backend=self.backend)
        except ImpossibleEvidenceError as exc:
            raise AssessmentError(f"impossible evidence in tree for source {bat.source!r}") from exc
        bel = marginals.positive[topo_nodes]
        best = np.full(n_tag, -1.0)
        np.maximum.at(best, topo_terms, bel)
        best_node = np.full(n_tag, bat.n, dtype=np.int64)
        hit = bel >= best[topo_terms]
        np.minimum.at(best_node, topo_terms[hit], topo_nodes[hit])
        return best, best_node

    def assess(self, extra_events=()) -> RiskReport:
        """Consolidated risk report for the committed log plus ``extra_events``.

        Hypothetical events are evaluated against a snapshot; nothing is
        committed.
        """
        step_l, host_l = self._evidence_maps(extra_events)
        bats = self.bam.bats
        if self.workers > 1 and len(bats) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(lambda b: self._assess_bat(b, step_l, host_l), bats))
        else:
            results = [self._assess_bat(b, step_l, host_l) for b in bats]

        n_tag = len(self._hosts)
        best = np.full(n_tag, -1.0)
        best_bat = np.full(n_tag, -1, dtype=np.int64)
        best_node = np.zeros(n_tag, dtype=np.int64)
        for bi, (bmax, bnode) in enumerate(results):
            better = bmax > best
            best[better] = bmax[better]
            best_bat[better] = bi
            best_node[better] = bnode[better]

        per_asset = {h: float(best[i]) for i, h in enumerate(self._hosts)}
        ranking = tuple(sorted(self._hosts, key=lambda h: (-per_asset[h], h)))
        levels = {h: risk_level(per_asset[h]) for h in self._hosts}
        best_path = {}
        for i, h in enumerate(self._hosts):
            bat = bats[best_bat[i]]
            best_path[h] = bat.path_memory(int(best_node[i]))
        return RiskReport(per_asset=per_asset, ranking=ranking, levels=levels, best_path=best_path)

    def explain(self, source: str) -> dict:
        """Per-asset best instance within one tree: probability, path and the
        node marginals along that path (used by the console's drill-down)."""
        bat = self.bam.bat(source)
        step_l, host_l = self._evidence_maps()
        best, best_node = self._assess_bat(bat, step_l, host_l)
        L = np.ones((bat.n, 2), dtype=np.float64)
        sen_nodes, sen_gids = bat.sensor_nodes()
        if len(sen_nodes):
            L[sen_nodes] = step_l[sen_gids]
        topo_nodes, topo_terms = bat.topo_nodes()
        L[topo_nodes] = host_l[topo_terms]
        marginals = infer_marginals(bat.net, likelihoods=L, backend=self.backend)
        out = {}
        for i, h in enumerate(self._hosts):
            if best[i] < 0.0:
                continue
            node = int(best_node[i])
            hops = []
            cur = node
            while True:
                hops.append(
                    {
                        "node": bat.node_id(cur),
                        "host": self.tag.nodes[int(bat.terminal[cur])],
                        "probability": float(marginals[cur]),
                    }
                )
                up = int(bat.net.skelp[cur])
                if up < 0:
                    break
                hops.append(
                    {
                        "node": bat.node_id(up),
                        "step": bat.node(up).back_ref,
                        "probability": float(marginals[up]),
                    }
                )
                cur = int(bat.net.skelp[up])
            out[h] = {
                "probability": float(best[i]),
                "path": list(bat.path_memory(node)),
                "hops": list(reversed(hops)),
            }
        return out


def load_events(path) -> list[SecurityEvent]:
    """Read newline-delimited JSON events, sorted by timestamp (stable)."""
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EngineError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                events.append(SecurityEvent.from_dict(raw))
            except EngineError as exc:
                raise EngineError(f"{path}:{lineno}: {exc}") from exc
    return sort_events(events)


def sort_events(events) -> list[SecurityEvent]:
    """Order by timestamp, ties by original position.

    Numeric timestamps order numerically and ISO-8601 strings
    lexicographically (which is chronological); events without a timestamp
    keep their position at the end.
    """

    def sort_key(pair):
        i, e = pair
        t = e.timestamp
        if t is None or isinstance(t, bool):
            return (1, "", i)
        if isinstance(t, (int, float)):
            return (0, f"{float(t):024.6f}", i)
        return (0, str(t), i)

    return [e for _, e in sorted(enumerate(events), key=sort_key)]
