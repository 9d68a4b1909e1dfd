"""Random topologies, attack scenarios, and the evaluation experiments.

Generated networks follow a defense-in-depth layout: full mesh inside each
subnet, and every host of a subnet reaches every host of each deeper subnet;
an internet node reaches the first subnet.  On top of that the module drives
four experiments: the six-scenario use case, accuracy separation under
perfect detection, build/assess benchmarks, and the parameter sensitivity
sweep.

Rank stability in the sensitivity sweep is measured tie-tolerantly: the
correlation is 1.0 iff no host pair strictly ordered at the defaults strictly
reverses at the variant.  Plain rank coefficients are unusable here because
the analog topology holds several hosts at exactly their prior (forming and
dissolving exact ties as parameters move), and degenerate settings such as a
zero false-positive rate collapse entire scenarios onto shared values; tie
churn is not a priority change for an operator.  The raw Spearman coefficient
is still reported alongside.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _scipy_stats

from .engine import RiskEngine, SecurityEvent
from .params import ModelParams
from .tag import generate_tag
from .topology import Topology, parse_topology
from .usecase import run_use_case

__all__ = [
    "TopologyGenSpec",
    "Scenario",
    "AccuracyReport",
    "PerfReport",
    "SensitivityReport",
    "random_topology",
    "random_scenario",
    "scenario_alert_events",
    "evaluate_accuracy",
    "benchmark",
    "sensitivity_sweep",
    "run_use_case",
    "TABLE_RANGES",
    "DEFAULT_GRIDS",
    "rank_correlation",
]


@dataclass(frozen=True)
class TopologyGenSpec:
    """Generator knobs; a given seed always yields the same topology."""

    n_hosts: int
    n_subnets: int = 7
    vulns_per_host: int = 30
    seed: int = 0
    inter_subnet_rule: str = "defense-in-depth"

    def __post_init__(self) -> None:
        if self.n_hosts < 0 or self.n_subnets < 1 or self.vulns_per_host < 0:
            raise ValueError("counts must be non-negative (subnets positive)")
        if self.inter_subnet_rule != "defense-in-depth":
            raise ValueError(f"unknown inter-subnet rule {self.inter_subnet_rule!r}")


_AV = ("Network", "Adjacent", "Local", "Physical")
_AC = ("Low", "High")
_PR = ("None", "Low", "High")
_UI = ("None", "Required")


def random_topology(spec: TopologyGenSpec, params: ModelParams | None = None) -> Topology:
    """Deterministic random topology with per-vulnerability sensors.

    CVSS metrics are drawn uniformly; sensor rates and source priors come
    from the model parameters.
    """
    params = params or ModelParams()
    rng = np.random.default_rng(spec.seed)
    if spec.n_hosts == 0:
        return parse_topology({"formatVersion": 1, "hosts": [], "subnets": [], "reachability": [], "sourcePriors": {}})
    host_ids = [f"h{i:03d}" for i in range(spec.n_hosts)]
    blocks = np.array_split(np.arange(spec.n_hosts), spec.n_subnets)

    hosts = [{"id": "internet", "vulnerabilities": []}]
    for h in host_ids:
        vulns = []
        for k in range(spec.vulns_per_host):
            vulns.append(
                {
                    "id": f"{h}-v{k:02d}",
                    "av": _AV[rng.integers(len(_AV))],
                    "ac": _AC[rng.integers(len(_AC))],
                    "pr": _PR[rng.integers(len(_PR))],
                    "ui": _UI[rng.integers(len(_UI))],
                    "sensor": {
                        "id": f"{h}-v{k:02d}-sen",
                        "fp": params.false_positive,
                        "fn": params.false_negative,
                    },
                }
            )
        hosts.append({"id": h, "vulnerabilities": vulns})

    reach = set()
    for si, block in enumerate(blocks):
        members = [host_ids[i] for i in block]
        for a in members:
            for b in members:
                if a != b:
                    reach.add((a, b))
        for deeper in blocks[si + 1 :]:
            for a in members:
                for i in deeper:
                    reach.add((a, host_ids[i]))
    first = next((b for b in blocks if len(b)), None)
    if first is not None:
        for i in first:
            reach.add(("internet", host_ids[i]))

    priors = {"internet": params.probability_internet}
    priors.update({h: params.probability_other_hosts for h in host_ids})
    return parse_topology(
        {
            "formatVersion": 1,
            "hosts": hosts,
            "subnets": [
                {"id": f"s{si + 1}", "hosts": [host_ids[i] for i in block]}
                for si, block in enumerate(blocks)
            ],
            "reachability": sorted([list(p) for p in reach]),
            "sourcePriors": priors,
        }
    )


@dataclass(frozen=True)
class Scenario:
    """An attacker walk with per-step detection states and its ground truth."""

    steps: tuple[tuple[str, str, str], ...]  # (attacker, victim, member sensor id)
    detection: tuple[str, ...]  # per step: "alert" | "silent" | "none"
    ground_truth: frozenset[str]


def random_scenario(topology: Topology, rng, n_steps: int = 7, start: str = "internet") -> Scenario:
    """A random non-backtracking attack path of up to ``n_steps`` steps.

    The walk starts at ``start`` and only crosses edges that exist in the TAG
    (the victim carries at least one remotely exploitable vulnerability); it
    stops early when no unvisited victim is reachable.
    """
    tag = generate_tag(topology)
    out: dict[str, list] = {}
    for s in tag.steps:
        out.setdefault(s.source, []).append(s)
    cur = start
    visited = {cur}
    steps = []
    for _ in range(n_steps):
        options = [s for s in out.get(cur, ()) if s.target not in visited]
        if not options:
            break
        step = options[rng.integers(len(options))]
        sensor_member = step.sensor.member_sensor_ids[int(rng.integers(len(step.sensor.member_sensor_ids)))]
        steps.append((step.source, step.target, sensor_member))
        visited.add(step.target)
        cur = step.target
    return Scenario(
        steps=tuple(steps),
        detection=tuple("alert" for _ in steps),
        ground_truth=frozenset(visited),
    )


def scenario_alert_events(scenario: Scenario) -> list[SecurityEvent]:
    """Step-scoped sensor events realising the scenario's detection plan."""
    events = []
    for i, ((src, dst, sensor), state) in enumerate(zip(scenario.steps, scenario.detection)):
        if state == "none":
            continue
        kind = "SensorAlert" if state == "alert" else "SensorSilent"
        events.append(SecurityEvent(kind=kind, subject_id=sensor, timestamp=i, source=src, target=dst))
    return events


# -- accuracy ---------------------------------------------------------------


@dataclass(frozen=True)
class AccuracyReport:
    runs: tuple[dict, ...]
    min_compromised: float
    max_healthy: float
    separable: bool
    mean_min_compromised: float
    std_min_compromised: float
    mean_max_healthy: float
    std_max_healthy: float

    def to_dict(self) -> dict:
        return {
            "runs": list(self.runs),
            "minCompromisedProb": self.min_compromised,
            "maxHealthyProb": self.max_healthy,
            "separable": self.separable,
            "stats": {
                "minCompromised": {"mean": self.mean_min_compromised, "std": self.std_min_compromised},
                "maxHealthy": {"mean": self.mean_max_healthy, "std": self.std_max_healthy},
            },
        }


def evaluate_accuracy(
    spec: TopologyGenSpec,
    n_scenarios: int = 10,
    params: ModelParams | None = None,
    *,
    host_range: tuple[int, int] | None = None,
    workers: int | None = None,
    backend: str | None = None,
) -> AccuracyReport:
    """Separation of known-compromised from healthy hosts under perfect detection.

    Sensors are generated with zero false-positive/negative rates and the
    scenario alerts exactly its attack path, so the only error left is the
    model's own.  Each run reports the minimum probability over ground-truth
    compromised hosts and the maximum over healthy ones.
    """
    params = params or ModelParams()
    perfect = params.with_overrides(false_positive=0.0, false_negative=0.0)
    runs = []
    if host_range is not None and n_scenarios > 0:
        lo, hi = host_range
        sizes = np.linspace(lo, hi, n_scenarios).round().astype(int)
    else:
        sizes = np.full(max(n_scenarios, 0), spec.n_hosts, dtype=int)
    for i in range(n_scenarios):
        run_spec = TopologyGenSpec(
            n_hosts=int(sizes[i]),
            n_subnets=spec.n_subnets,
            vulns_per_host=spec.vulns_per_host,
            seed=spec.seed + i,
        )
        topology = random_topology(run_spec, perfect)
        rng = np.random.default_rng(run_spec.seed + 1_000_003)
        scenario = random_scenario(topology, rng)
        engine = RiskEngine(topology, perfect, workers=workers, backend=backend)
        report = engine.assess(extra_events=scenario_alert_events(scenario))
        compromised = sorted(scenario.ground_truth)
        healthy = [h for h in report.per_asset if h not in scenario.ground_truth]
        min_c = min(report.per_asset[h] for h in compromised)
        max_h = max((report.per_asset[h] for h in healthy), default=0.0)
        runs.append(
            {
                "nHosts": int(sizes[i]),
                "steps": len(scenario.steps),
                "minCompromised": min_c,
                "maxHealthy": max_h,
                "separable": min_c > 0.5 > max_h,
            }
        )
    if not runs:
        return AccuracyReport((), 1.0, 0.0, True, float("nan"), float("nan"), float("nan"), float("nan"))
    mins = np.array([r["minCompromised"] for r in runs])
    maxs = np.array([r["maxHealthy"] for r in runs])
    return AccuracyReport(
        runs=tuple(runs),
        min_compromised=float(mins.min()),
        max_healthy=float(maxs.max()),
        separable=bool(all(r["separable"] for r in runs)),
        mean_min_compromised=float(mins.mean()),
        std_min_compromised=float(mins.std()),
        mean_max_healthy=float(maxs.mean()),
        std_max_healthy=float(maxs.std()),
    )


# -- performance -------------------------------------------------------------


@dataclass(frozen=True)
class PerfReport:
    n_hosts: int
    total_vulns: int
    bat_node_counts: tuple[int, ...]
    build_seconds: float
    infer_seconds: float
    worker_count: int
    backend: str

    @property
    def total_nodes(self) -> int:
        return int(sum(self.bat_node_counts))

    def to_dict(self) -> dict:
        return {
            "nHosts": self.n_hosts,
            "totalVulns": self.total_vulns,
            "batNodeCounts": list(self.bat_node_counts),
            "totalNodes": self.total_nodes,
            "maxBatNodes": max(self.bat_node_counts, default=0),
            "buildSeconds": self.build_seconds,
            "inferSeconds": self.infer_seconds,
            "workerCount": self.worker_count,
            "backend": self.backend,
        }


def benchmark(
    specs,
    params: ModelParams | None = None,
    *,
    workers_list=(1,),
    backend: str | None = None,
) -> list[PerfReport]:
    """Wall-clock build and assessment times with a 7-step scenario applied."""
    from ._backend import resolve_backend

    params = params or ModelParams()
    reports = []
    for spec in specs:
        topology = random_topology(spec, params)
        total_vulns = sum(len(h.vulnerabilities) for h in topology.hosts)
        rng = np.random.default_rng(spec.seed + 1_000_003)
        scenario = random_scenario(topology, rng)
        events = scenario_alert_events(scenario)
        for workers in workers_list:
            t0 = time.perf_counter()
            engine = RiskEngine(topology, params, workers=workers, backend=backend)
            t1 = time.perf_counter()
            engine.assess(extra_events=events)
            t2 = time.perf_counter()
            reports.append(
                PerfReport(
                    n_hosts=spec.n_hosts,
                    total_vulns=total_vulns,
                    bat_node_counts=tuple(engine.bam.node_counts()),
                    build_seconds=t1 - t0,
                    infer_seconds=t2 - t1,
                    worker_count=workers,
                    backend=resolve_backend(backend),
                )
            )
            del engine
    return reports


def perf_csv(reports) -> str:
    lines = ["nHosts,workers,backend,buildSeconds,inferSeconds,totalNodes,maxBatNodes"]
    for r in reports:
        lines.append(
            f"{r.n_hosts},{r.worker_count},{r.backend},{r.build_seconds:.6f},"
            f"{r.infer_seconds:.6f},{r.total_nodes},{max(r.bat_node_counts, default=0)}"
        )
    return "\n".join(lines) + "\n"


# -- sensitivity --------------------------------------------------------------

#: Parameter variation ranges considered realistic for the sweep.
TABLE_RANGES = {
    "falseNegative": (0.0, 0.3),
    "falsePositive": (0.0, 0.3),
    "nbSteps": (1, 4),
    "probabilityInternet": (0.0, 1.0),
    "probabilityOtherHosts": (0.0, 1.0),
    "probabilityUnknownAttack": (0.0, 0.15),
    "probabilityNewAttackStep": (0.0, 1.0),
}

DEFAULT_GRIDS = {
    "falseNegative": (0.0, 0.05, 0.1, 0.2, 0.3),
    "falsePositive": (0.0, 0.01, 0.05, 0.1, 0.2, 0.3),
    "nbSteps": (1, 2, 3, 4),
    "probabilityInternet": (0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0),
    "probabilityOtherHosts": (0.0, 0.05, 0.1, 0.3, 0.5, 0.8, 1.0),
    "probabilityUnknownAttack": (0.0, 0.001, 0.01, 0.05, 0.1, 0.15),
    "probabilityNewAttackStep": (0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0),
}

_PARAM_FIELDS = {
    "falseNegative": "false_negative",
    "falsePositive": "false_positive",
    "nbSteps": "nb_steps",
    "probabilityInternet": "probability_internet",
    "probabilityOtherHosts": "probability_other_hosts",
    "probabilityUnknownAttack": "probability_unknown_attack",
    "probabilityNewAttackStep": "probability_new_attack_step",
}


def rank_correlation(base, variant) -> tuple[float, float]:
    """(tie-tolerant correlation, raw Spearman) between two probability vectors.

    The first value is 1.0 iff no strictly ordered pair strictly reverses,
    otherwise the raw Spearman coefficient (0.0 when that is undefined).
    """
    base = np.asarray(base, dtype=float)
    variant = np.asarray(variant, dtype=float)
    n = len(base)
    inversion = False
    for i in range(n):
        for j in range(i + 1, n):
            d_base = base[i] - base[j]
            d_var = variant[i] - variant[j]
            if d_base * d_var < 0.0:
                inversion = True
                break
        if inversion:
            break
    if np.ptp(base) == 0.0 or np.ptp(variant) == 0.0:
        raw = 1.0 if (np.ptp(base) == 0.0 and np.ptp(variant) == 0.0) else float("nan")
    else:
        raw = float(_scipy_stats.spearmanr(base, variant).statistic)
    if not inversion:
        return 1.0, raw
    return (0.0 if np.isnan(raw) else raw), raw


@dataclass(frozen=True)
class SensitivityReport:
    baseline: dict
    rows: tuple[dict, ...] = field(default_factory=tuple)

    def per_parameter(self) -> dict:
        """Worst rank correlation and rank-change flag per parameter."""
        out: dict[str, dict] = {}
        for row in self.rows:
            p = out.setdefault(
                row["parameter"],
                {"minRankCorrelation": 1.0, "rankChanged": False, "maxProbDelta": 0.0},
            )
            p["minRankCorrelation"] = min(p["minRankCorrelation"], row["rankCorrelation"])
            p["rankChanged"] = p["rankChanged"] or row["rankChanged"]
            p["maxProbDelta"] = max(p["maxProbDelta"], row["maxProbDelta"])
        return out

    def to_dict(self) -> dict:
        return {"baseline": self.baseline, "rows": list(self.rows), "perParameter": self.per_parameter()}


def sensitivity_sweep(
    grids: dict | None = None,
    params: ModelParams | None = None,
    *,
    workers: int | None = None,
    backend: str | None = None,
) -> SensitivityReport:
    """Re-run the six use-case scenarios across per-parameter grids.

    For every grid point the consolidated probabilities are compared with the
    default setting per scenario: tie-tolerant rank correlation, raw
    Spearman, and the largest probability shift.  The internet is excluded
    from rank comparisons (its prior is the swept quantity in one of the
    parameters and its rank is structurally pinned).
    """
    params = params or ModelParams()
    grids = dict(DEFAULT_GRIDS) if grids is None else dict(grids)
    for name, grid in grids.items():
        if name not in TABLE_RANGES:
            raise ValueError(f"unknown parameter {name!r}")
        lo, hi = TABLE_RANGES[name]
        for v in grid:
            if not lo <= v <= hi:
                raise ValueError(f"grid for {name} out of range: {v} not in [{lo}, {hi}]")

    base_reports = run_use_case(params, workers=workers, backend=backend)
    hosts = [h for h in sorted(base_reports[1].per_asset) if h != "internet"]
    baseline = {
        sid: {h: base_reports[sid].per_asset[h] for h in sorted(base_reports[sid].per_asset)}
        for sid in base_reports
    }

    rows = []
    for name, grid in sorted(grids.items()):
        field_name = _PARAM_FIELDS[name]
        for value in grid:
            variant_params = params.with_overrides(**{field_name: value})
            reports = run_use_case(variant_params, workers=workers, backend=backend)
            for sid, report in reports.items():
                base_vec = np.array([base_reports[sid].per_asset[h] for h in hosts])
                var_vec = np.array([report.per_asset[h] for h in hosts])
                corr, raw = rank_correlation(base_vec, var_vec)
                rows.append(
                    {
                        "parameter": name,
                        "value": value,
                        "scenario": sid,
                        "rankCorrelation": corr,
                        "spearman": raw,
                        "rankChanged": corr < 1.0,
                        "maxProbDelta": float(np.abs(var_vec - base_vec).max()),
                        "perAsset": {h: float(v) for h, v in zip(hosts, var_vec)},
                    }
                )
    return SensitivityReport(baseline=baseline, rows=tuple(rows))
