"""Built-in validation topology and its six detection scenarios.

An ingress firewall K fronts a LAN (hosts E..J); public servers live in a DMZ
(A..D).  Host A is exposed to the internet and can attack G..J, which in turn
can attack A, C and D.  Every DMZ/LAN host carries one network-exploitable
vulnerability (success probability 0.8) watched by a sensor, so the attack
chain internet -> A -> G -> D and its detections drive the scenarios:

=========  =========  ======  ======
scenario   I->A       A->G    G->D
=========  =========  ======  ======
1          silent     silent  silent
2          alert      silent  silent
3          alert      alert   silent
4          alert      alert   alert
5          alert      (none)  alert
6          alert      silent  alert
=========  =========  ======  ======

Scenario 5 models a step without detection coverage, scenario 6 a missed
detection.  All other sensors stay silent in every scenario.
"""

from __future__ import annotations

from .engine import RiskEngine, RiskReport, SecurityEvent
from .params import ModelParams
from .topology import Topology, parse_topology

__all__ = ["usecase_topology", "scenario_events", "run_use_case", "SCENARIO_IDS", "CHAIN"]

SCENARIO_IDS = (1, 2, 3, 4, 5, 6)

_DMZ = ("A", "B", "C", "D")
_LAN = ("E", "F", "G", "H", "I", "J")

#: The three-step attack chain the scenarios detect, as (source, target).
CHAIN = (("internet", "A"), ("A", "G"), ("G", "D"))

# Per scenario, the detection state of each chain step.
_ALERT, _SILENT, _NO_SENSOR = "alert", "silent", "none"
_PLANS = {
    1: (_SILENT, _SILENT, _SILENT),
    2: (_ALERT, _SILENT, _SILENT),
    3: (_ALERT, _ALERT, _SILENT),
    4: (_ALERT, _ALERT, _ALERT),
    5: (_ALERT, _NO_SENSOR, _ALERT),
    6: (_ALERT, _SILENT, _ALERT),
}


def sensor_id(host: str) -> str:
    return f"ids-{host}"


def usecase_topology(params: ModelParams | None = None) -> Topology:
    """The 12-node analog (internet, firewall K, DMZ A-D, LAN E-J)."""
    params = params or ModelParams()
    hosts = [{"id": "internet", "vulnerabilities": []}, {"id": "K", "vulnerabilities": []}]
    for h in _DMZ + _LAN:
        hosts.append(
            {
                "id": h,
                "vulnerabilities": [
                    {
                        "id": f"CVE-{h}",
                        "av": "Network",
                        "ac": "Low",
                        "pr": "None",
                        "ui": "None",
                        "probability": 0.8,
                        "sensor": {
                            "id": sensor_id(h),
                            "fp": params.false_positive,
                            "fn": params.false_negative,
                        },
                    }
                ],
            }
        )
    reach = [["internet", "A"]]
    reach += [["A", t] for t in ("G", "H", "I", "J")]
    reach += [[s, t] for s in ("G", "H", "I", "J") for t in ("A", "C", "D")]
    priors = {"internet": params.probability_internet}
    for h in _DMZ + _LAN + ("K",):
        priors[h] = params.probability_other_hosts
    return parse_topology(
        {
            "formatVersion": 1,
            "hosts": hosts,
            "subnets": [
                {"id": "external", "hosts": ["internet"]},
                {"id": "perimeter", "hosts": ["K"]},
                {"id": "dmz", "hosts": list(_DMZ)},
                {"id": "lan", "hosts": list(_LAN)},
            ],
            "reachability": reach,
            "sourcePriors": priors,
        }
    )


def scenario_events(scenario: int, engine: RiskEngine) -> list[SecurityEvent]:
    """Explicit per-step sensor states for one scenario.

    Every sensored step gets an explicit state (the engine is expected to run
    with auto-silent off): chain steps follow the plan, everything else is
    silent.  A "none" plan entry leaves that step unobserved.
    """
    plan = _PLANS[scenario]
    chain_state = {pair: plan[i] for i, pair in enumerate(CHAIN)}
    events = []
    ts = 0
    for gid in engine.tag.steps_with_sensors():
        step = engine.tag.steps[gid]
        state = chain_state.get((step.source, step.target), _SILENT)
        if state == _NO_SENSOR:
            continue
        kind = "SensorAlert" if state == _ALERT else "SensorSilent"
        events.append(
            SecurityEvent(
                kind=kind,
                subject_id=step.sensor.member_sensor_ids[0],
                timestamp=ts,
                source=step.source,
                target=step.target,
            )
        )
        ts += 1
    return events


def run_use_case(
    params: ModelParams | None = None,
    *,
    workers: int | None = None,
    backend: str | None = None,
    scenarios=SCENARIO_IDS,
    engine: RiskEngine | None = None,
) -> dict[int, RiskReport]:
    """Assess the six Table-style detection scenarios; returns reports by id."""
    params = params or ModelParams()
    if engine is None:
        engine = RiskEngine(
            usecase_topology(params),
            params,
            workers=workers,
            auto_silent=False,
            backend=backend,
        )
    reports = {}
    for sid in scenarios:
        reports[sid] = engine.assess(extra_events=scenario_events(sid, engine))
    return reports
