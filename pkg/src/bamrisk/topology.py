"""Network topology model: hosts, vulnerabilities, sensors, reachability.

A topology document is the single input everything else is derived from.
``parse_topology`` validates a JSON-compatible mapping against the schema and
returns an immutable :class:`Topology`; ``cvss_exploit_probability`` maps CVSS
v3 exploitability metrics to a success probability.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

__all__ = [
    "AttackVector",
    "AttackComplexity",
    "PrivilegesRequired",
    "UserInteraction",
    "SensorSpec",
    "Vulnerability",
    "HostSpec",
    "Topology",
    "TopologyError",
    "parse_topology",
    "load_topology",
    "cvss_exploit_probability",
]

TOPOLOGY_FORMAT_VERSION = 1


class TopologyError(ValueError):
    """Raised when a topology document violates the schema or an invariant."""


class AttackVector(enum.Enum):
    NETWORK = "Network"
    ADJACENT = "Adjacent"
    LOCAL = "Local"
    PHYSICAL = "Physical"


class AttackComplexity(enum.Enum):
    LOW = "Low"
    HIGH = "High"


class PrivilegesRequired(enum.Enum):
    NONE = "None"
    LOW = "Low"
    HIGH = "High"


class UserInteraction(enum.Enum):
    NONE = "None"
    REQUIRED = "Required"


# CVSS v3 exploitability coefficients.
_AC_COEF = {AttackComplexity.LOW: 0.77, AttackComplexity.HIGH: 0.44}
_PR_COEF = {PrivilegesRequired.NONE: 0.85, PrivilegesRequired.LOW: 0.62, PrivilegesRequired.HIGH: 0.27}
_UI_COEF = {UserInteraction.NONE: 0.85, UserInteraction.REQUIRED: 0.62}
# Product of the easiest metric values; normalising by it maps AC:L/PR:N/UI:N to 1.0.
_EASIEST = _AC_COEF[AttackComplexity.LOW] * _PR_COEF[PrivilegesRequired.NONE] * _UI_COEF[UserInteraction.NONE]

_ABBREV = {
    AttackVector: {"N": "Network", "A": "Adjacent", "L": "Local", "P": "Physical"},
    AttackComplexity: {"L": "Low", "H": "High"},
    PrivilegesRequired: {"N": "None", "L": "Low", "H": "High"},
    UserInteraction: {"N": "None", "R": "Required"},
}


def _parse_enum(cls, raw, path: str):
    if isinstance(raw, str):
        name = _ABBREV[cls].get(raw.upper(), raw.capitalize() if raw else raw)
        for member in cls:
            if member.value == name:
                return member
    raise TopologyError(f"{path}: invalid {cls.__name__} value {raw!r}")


@dataclass(frozen=True)
class SensorSpec:
    """A detector attached to a vulnerability, with its error rates."""

    id: str
    false_positive: float
    false_negative: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.false_positive <= 1.0:
            raise TopologyError(f"sensor {self.id!r}: falsePositive out of range")
        if not 0.0 <= self.false_negative <= 1.0:
            raise TopologyError(f"sensor {self.id!r}: falseNegative out of range")


@dataclass(frozen=True)
class Vulnerability:
    id: str
    attack_vector: AttackVector
    attack_complexity: AttackComplexity
    privileges_required: PrivilegesRequired
    user_interaction: UserInteraction
    explicit_probability: float | None = None
    sensor: SensorSpec | None = None

    def __post_init__(self) -> None:
        p = self.explicit_probability
        if p is not None and not 0.0 <= p <= 1.0:
            raise TopologyError(f"vulnerability {self.id!r}: probability out of range")


@dataclass(frozen=True)
class HostSpec:
    id: str
    vulnerabilities: tuple[Vulnerability, ...] = ()
    services: tuple[tuple[int, str], ...] = ()
    multiplicity: int = 1

    def __post_init__(self) -> None:
        seen = set()
        for v in self.vulnerabilities:
            if v.id in seen:
                raise TopologyError(f"host {self.id!r}: duplicate vulnerability id {v.id!r}")
            seen.add(v.id)


@dataclass(frozen=True)
class Topology:
    """Validated network description: hosts, subnets, reachability, priors."""

    hosts: tuple[HostSpec, ...]
    subnets: tuple[tuple[str, tuple[str, ...]], ...] = ()
    reachability: frozenset[tuple[str, str]] = frozenset()
    source_priors: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        ids = [h.id for h in self.hosts]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise TopologyError(f"duplicate host id {dup!r}")
        known = set(ids)
        for src, dst in self.reachability:
            if src not in known:
                raise TopologyError(f"reachability: unknown host {src!r}")
            if dst not in known:
                raise TopologyError(f"reachability: unknown host {dst!r}")
            if src == dst:
                raise TopologyError(f"reachability: self pair {src!r}")
        for host, p in self.source_priors.items():
            if host not in known:
                raise TopologyError(f"sourcePriors: unknown host {host!r}")
            if not isinstance(p, (int, float)) or not 0.0 <= float(p) <= 1.0:
                raise TopologyError(f"sourcePriors[{host!r}]: prior out of range")
        for name, members in self.subnets:
            for m in members:
                if m not in known:
                    raise TopologyError(f"subnet {name!r}: unknown host {m!r}")

    @property
    def host_ids(self) -> list[str]:
        return [h.id for h in self.hosts]

    def host(self, host_id: str) -> HostSpec:
        for h in self.hosts:
            if h.id == host_id:
                return h
        raise KeyError(host_id)

    def sensor_ids(self) -> set[str]:
        return {
            v.sensor.id for h in self.hosts for v in h.vulnerabilities if v.sensor is not None
        }

    def to_dict(self) -> dict:
        return {
            "formatVersion": TOPOLOGY_FORMAT_VERSION,
            "hosts": [
                {
                    "id": h.id,
                    "vulnerabilities": [
                        {
                            "id": v.id,
                            "av": v.attack_vector.value,
                            "ac": v.attack_complexity.value,
                            "pr": v.privileges_required.value,
                            "ui": v.user_interaction.value,
                            **({"probability": v.explicit_probability} if v.explicit_probability is not None else {}),
                            **(
                                {"sensor": {"id": v.sensor.id, "fp": v.sensor.false_positive, "fn": v.sensor.false_negative}}
                                if v.sensor is not None
                                else {}
                            ),
                        }
                        for v in h.vulnerabilities
                    ],
                    **({"services": [list(s) for s in h.services]} if h.services else {}),
                    **({"multiplicity": h.multiplicity} if h.multiplicity != 1 else {}),
                }
                for h in self.hosts
            ],
            "subnets": [{"id": name, "hosts": list(members)} for name, members in self.subnets],
            "reachability": sorted([list(pair) for pair in self.reachability]),
            "sourcePriors": dict(sorted(self.source_priors.items())),
        }


def cvss_exploit_probability(v: Vulnerability) -> float:
    """Success probability of exploiting ``v``.

    An explicit per-vulnerability probability wins; otherwise the CVSS v3
    exploitability coefficients for AC/PR/UI are multiplied and normalised so
    the easiest vector (AC:L, PR:N, UI:N) maps to exactly 1.0.
    """
    if v.explicit_probability is not None:
        return float(v.explicit_probability)
    product = (
        _AC_COEF[v.attack_complexity]
        * _PR_COEF[v.privileges_required]
        * _UI_COEF[v.user_interaction]
    )
    return product / _EASIEST


def _require(mapping, key, path: str, types, type_name: str):
    if key not in mapping:
        raise TopologyError(f"{path}: missing required field {key!r}")
    value = mapping[key]
    if not isinstance(value, types) or isinstance(value, bool):
        raise TopologyError(f"{path}.{key}: expected {type_name}")
    return value


def _parse_sensor(raw, path: str) -> SensorSpec:
    if not isinstance(raw, dict):
        raise TopologyError(f"{path}: expected object")
    sid = _require(raw, "id", path, str, "string")
    fp = _require(raw, "fp", path, (int, float), "number")
    fn = _require(raw, "fn", path, (int, float), "number")
    if not 0.0 <= fp <= 1.0:
        raise TopologyError(f"{path}.fp: rate out of range")
    if not 0.0 <= fn <= 1.0:
        raise TopologyError(f"{path}.fn: rate out of range")
    return SensorSpec(sid, float(fp), float(fn))


def _parse_vulnerability(raw, path: str) -> Vulnerability:
    if not isinstance(raw, dict):
        raise TopologyError(f"{path}: expected object")
    vid = _require(raw, "id", path, str, "string")
    av = _parse_enum(AttackVector, _require(raw, "av", path, str, "string"), f"{path}.av")
    ac = _parse_enum(AttackComplexity, _require(raw, "ac", path, str, "string"), f"{path}.ac")
    pr = _parse_enum(PrivilegesRequired, _require(raw, "pr", path, str, "string"), f"{path}.pr")
    ui = _parse_enum(UserInteraction, _require(raw, "ui", path, str, "string"), f"{path}.ui")
    prob = raw.get("probability")
    if prob is not None:
        if not isinstance(prob, (int, float)) or isinstance(prob, bool) or not 0.0 <= prob <= 1.0:
            raise TopologyError(f"{path}.probability: out of range")
        prob = float(prob)
    sensor = _parse_sensor(raw["sensor"], f"{path}.sensor") if raw.get("sensor") is not None else None
    return Vulnerability(vid, av, ac, pr, ui, prob, sensor)


def parse_topology(document: dict | str) -> Topology:
    """Parse and validate a topology document (mapping or JSON text)."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise TopologyError(f"invalid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise TopologyError("topology: expected top-level object")
    version = document.get("formatVersion")
    if version != TOPOLOGY_FORMAT_VERSION:
        raise TopologyError(
            f"formatVersion: expected {TOPOLOGY_FORMAT_VERSION}, got {version!r}"
        )

    hosts_raw = _require(document, "hosts", "topology", list, "array")
    hosts = []
    for i, hraw in enumerate(hosts_raw):
        path = f"hosts[{i}]"
        if not isinstance(hraw, dict):
            raise TopologyError(f"{path}: expected object")
        hid = _require(hraw, "id", path, str, "string")
        vulns = []
        for j, vraw in enumerate(hraw.get("vulnerabilities", [])):
            vulns.append(_parse_vulnerability(vraw, f"{path}.vulnerabilities[{j}]"))
        services = []
        for j, sraw in enumerate(hraw.get("services", [])):
            if (
                not isinstance(sraw, (list, tuple))
                or len(sraw) != 2
                or not isinstance(sraw[0], int)
                or not isinstance(sraw[1], str)
            ):
                raise TopologyError(f"{path}.services[{j}]: expected [port, name]")
            services.append((sraw[0], sraw[1]))
        multiplicity = hraw.get("multiplicity", 1)
        if not isinstance(multiplicity, int) or multiplicity < 1:
            raise TopologyError(f"{path}.multiplicity: expected positive integer")
        hosts.append(HostSpec(hid, tuple(vulns), tuple(services), multiplicity))

    subnets = []
    for i, sraw in enumerate(document.get("subnets", [])):
        path = f"subnets[{i}]"
        if not isinstance(sraw, dict):
            raise TopologyError(f"{path}: expected object")
        name = _require(sraw, "id", path, str, "string")
        members = _require(sraw, "hosts", path, list, "array")
        subnets.append((name, tuple(members)))

    reach = set()
    for i, pair in enumerate(document.get("reachability", [])):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise TopologyError(f"reachability[{i}]: expected [source, target]")
        reach.add((pair[0], pair[1]))

    priors_raw = document.get("sourcePriors", {})
    if not isinstance(priors_raw, dict):
        raise TopologyError("sourcePriors: expected object")
    for host, p in priors_raw.items():
        if not isinstance(p, (int, float)) or isinstance(p, bool) or not 0.0 <= p <= 1.0:
            raise TopologyError(f"sourcePriors[{host!r}]: prior out of range")

    return Topology(
        hosts=tuple(hosts),
        subnets=tuple(subnets),
        reachability=frozenset(reach),
        source_priors={k: float(v) for k, v in priors_raw.items()},
    )


def load_topology(path) -> Topology:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_topology(fh.read())
