"""Bayesian attack-model risk assessment toolkit."""

from ._backend import default_backend
from .batbuild import BAM, Bat, build_bam, build_bat, node_count_bound, validate_polytree
from .engine import RiskEngine, RiskReport, SecurityEvent, risk_level
from .inference import EvidenceItem, Marginals, brute_force_marginals, infer_marginals
from .params import DEFAULT_PARAMS, ModelParams
from .polytree import Cpt, PolytreeNet, cpt_attack_step, cpt_sensor, cpt_topological
from .tag import TAG, AttackStep, Condition, GroupedSensor, generate_tag, group_attack_steps
from .topology import (
    HostSpec,
    SensorSpec,
    Topology,
    TopologyError,
    Vulnerability,
    cvss_exploit_probability,
    load_topology,
    parse_topology,
)

__version__ = "0.1.0"

__all__ = [
    "BAM",
    "Bat",
    "Cpt",
    "DEFAULT_PARAMS",
    "EvidenceItem",
    "GroupedSensor",
    "HostSpec",
    "Marginals",
    "ModelParams",
    "PolytreeNet",
    "RiskEngine",
    "RiskReport",
    "SecurityEvent",
    "SensorSpec",
    "TAG",
    "AttackStep",
    "Condition",
    "Topology",
    "TopologyError",
    "Vulnerability",
    "brute_force_marginals",
    "build_bam",
    "build_bat",
    "cpt_attack_step",
    "cpt_sensor",
    "cpt_topological",
    "cvss_exploit_probability",
    "default_backend",
    "generate_tag",
    "group_attack_steps",
    "infer_marginals",
    "load_topology",
    "node_count_bound",
    "parse_topology",
    "risk_level",
    "validate_polytree",
]
