"""Model-wide probabilistic parameters and their defaults."""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class ModelParams:
    """Tunable parameters of the Bayesian attack model.

    The defaults describe a well-monitored system: unknown (0-day) attacks
    are rare, sensors are decent, and most attacks come in from the internet.
    """

    probability_unknown_attack: float = 0.001
    probability_new_attack_step: float = 0.3
    nb_steps: int = 3
    false_positive: float = 0.05
    false_negative: float = 0.01
    probability_internet: float = 0.7
    probability_other_hosts: float = 0.1

    def __post_init__(self) -> None:
        for name in (
            "probability_unknown_attack",
            "probability_new_attack_step",
            "false_positive",
            "false_negative",
            "probability_internet",
            "probability_other_hosts",
        ):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not 0.0 <= float(value) <= 1.0:
                raise ValueError(f"{name} must be a probability in [0, 1], got {value!r}")
        if not isinstance(self.nb_steps, int) or self.nb_steps < 1:
            raise ValueError(f"nb_steps must be an integer >= 1, got {self.nb_steps!r}")

    def with_overrides(self, **kwargs) -> "ModelParams":
        """Return a copy with the given fields replaced (validated)."""
        return replace(self, **kwargs)

    def to_dict(self) -> dict:
        return {
            "probabilityUnknownAttack": self.probability_unknown_attack,
            "probabilityNewAttackStep": self.probability_new_attack_step,
            "nbSteps": self.nb_steps,
            "falsePositive": self.false_positive,
            "falseNegative": self.false_negative,
            "probabilityInternet": self.probability_internet,
            "probabilityOtherHosts": self.probability_other_hosts,
        }


DEFAULT_PARAMS = ModelParams()
