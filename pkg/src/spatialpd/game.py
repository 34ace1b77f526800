"""Strategies, the one-shot payoff matrix and game parameters."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import InvalidParameterError

DEGREE = 4
DEFAULT_FERMI_NOISE = 0.0625


class Strategy(enum.IntEnum):
    """Cell strategy. The integer values are the on-lattice encoding."""

    DEFECT = 0
    COOPERATE = 1

    @property
    def symbol(self) -> str:
        return "C" if self is Strategy.COOPERATE else "D"


C = Strategy.COOPERATE
D = Strategy.DEFECT


class Rule(enum.Enum):
    MONTE_CARLO = "mc"
    UNCONDITIONAL_IMITATION = "ui"
    REPLICATOR = "replicator"
    FERMI = "fermi"

    @classmethod
    def parse(cls, text: str) -> "Rule":
        key = text.strip().lower().replace("-", "_")
        aliases = {
            "mc": cls.MONTE_CARLO,
            "monte_carlo": cls.MONTE_CARLO,
            "ui": cls.UNCONDITIONAL_IMITATION,
            "unconditional_imitation": cls.UNCONDITIONAL_IMITATION,
            "rd": cls.REPLICATOR,
            "replicator": cls.REPLICATOR,
            "replicator_dynamics": cls.REPLICATOR,
            "fermi": cls.FERMI,
        }
        try:
            return aliases[key]
        except KeyError:
            raise InvalidParameterError(
                f"unknown update rule {text!r}; expected one of mc, ui, replicator, fermi"
            ) from None


def check_temptation(b: float) -> float:
    b = float(b)
    if not (1.0 < b <= 2.0):
        raise InvalidParameterError(f"temptation b={b} outside (1, 2]")
    return b


@dataclass(frozen=True)
class GameParams:
    """Temptation, neighbourhood degree and the update rule.

    ``lam`` is the Fermi noise and is ignored by the other rules.
    """

    b: float
    rule: Rule = Rule.MONTE_CARLO
    lam: float = DEFAULT_FERMI_NOISE
    degree: int = DEGREE

    def __post_init__(self):
        object.__setattr__(self, "b", check_temptation(self.b))
        if not isinstance(self.rule, Rule):
            object.__setattr__(self, "rule", Rule.parse(str(self.rule)))
        if self.degree != DEGREE:
            raise InvalidParameterError(f"only the 4-neighbour grid is supported, got d={self.degree}")
        if self.rule is Rule.FERMI and not self.lam > 0:
            raise InvalidParameterError(f"Fermi noise must be positive, got {self.lam}")

    def with_b(self, b: float) -> "GameParams":
        return GameParams(b=b, rule=self.rule, lam=self.lam, degree=self.degree)

    def with_rule(self, rule: Rule) -> "GameParams":
        return GameParams(b=self.b, rule=rule, lam=self.lam, degree=self.degree)


def pairwise_payoff(mine: Strategy, theirs: Strategy, b: float) -> float:
    """Row player's payoff: C/C -> 1, D/C -> b, anything against D -> 0."""
    if theirs == D:
        return 0.0
    return 1.0 if mine == C else float(b)
