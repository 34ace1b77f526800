"""Strategy-update rules and the synchronous round step.

Each rule is expressed two ways:

* scalar functions for a single focal cell (``mc_transition_distribution``,
  ``ui_next_strategy``, ``replicator_switch_prob``, ``fermi_switch_prob``);
* :func:`cooperation_probability`, a vectorised form giving the probability
  that a cell cooperates next round.

Because all cells decide independently from the same pre-step state, the
second form is all a synchronous step needs: one uniform per cell decides
the new strategy. For replicator and Fermi the random choice of a single
neighbour is marginalised out, which leaves the per-cell law unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import expit

from .errors import InvalidInputError, InvalidParameterError
from .game import DEGREE, GameParams, Rule, Strategy
from .lattice import Lattice, compute_payoffs, neighbor_table

SELF = "self"

Source = Union[str, int]


@dataclass(frozen=True)
class TransitionDistribution:
    """Probabilities of copying each source; neighbour sources are slot indices 0..3."""

    entries: tuple[tuple[Source, float], ...]

    def __post_init__(self):
        total = 0.0
        for source, p in self.entries:
            if source != SELF and not (isinstance(source, int) and 0 <= source < DEGREE):
                raise InvalidInputError(f"invalid transition source {source!r}")
            if p < 0:
                raise InvalidInputError(f"negative probability {p} for {source!r}")
            total += p
        if abs(total - 1.0) > 1e-12:
            raise InvalidInputError(f"transition probabilities sum to {total!r}, not 1")

    def probability(self, source: Source) -> float:
        return sum(p for s, p in self.entries if s == source)

    @property
    def keep(self) -> float:
        return self.probability(SELF)

    def cooperation_probability(self, own: Strategy, neighbor_strategies: Sequence[Strategy]) -> float:
        """Probability that the copied strategy is C."""
        total = 0.0
        for source, p in self.entries:
            s = own if source == SELF else neighbor_strategies[source]
            if s == Strategy.COOPERATE:
                total += p
        return total


def mc_eligibility(u_i: float, u_k: float) -> int:
    """1 if neighbour ``k`` may be imitated (its payoff is at least ``u_i``)."""
    return 0 if u_i > u_k else 1


def mc_transition_distribution(u_0: float, neighbor_payoffs: Sequence[float]) -> TransitionDistribution:
    """Roulette over self and every neighbour earning at least as much as self."""
    if len(neighbor_payoffs) != DEGREE:
        raise InvalidInputError(f"expected {DEGREE} neighbour payoffs, got {len(neighbor_payoffs)}")
    if u_0 < 0 or any(u < 0 for u in neighbor_payoffs):
        raise InvalidInputError("payoffs must be non-negative")
    eligible = [mc_eligibility(u_0, u) * u for u in neighbor_payoffs]
    denominator = u_0 + sum(eligible)
    if denominator == 0.0:
        return TransitionDistribution(((SELF, 1.0),) + tuple((k, 0.0) for k in range(DEGREE)))
    keep = u_0 / denominator
    rest = [w / denominator for w in eligible]
    entries = [(SELF, keep)] + [(k, p) for k, p in enumerate(rest)]
    # the largest entry (>= 1/5) absorbs rounding so the sum is exactly 1
    drift = 1.0 - math.fsum(p for _, p in entries)
    if drift:
        i = max(range(len(entries)), key=lambda j: entries[j][1])
        entries[i] = (entries[i][0], entries[i][1] + drift)
    return TransitionDistribution(tuple(entries))


def ui_next_strategy(
    self_strategy: Strategy,
    u_0: float,
    neighbor_strategies: Sequence[Strategy],
    neighbor_payoffs: Sequence[float],
    rng: np.random.Generator,
) -> Strategy:
    """Copy the best-earning neighbour if it strictly beats self.

    Ties among the best neighbours are broken uniformly; a neighbour merely
    equal to self never displaces it.
    """
    best = max(neighbor_payoffs)
    if best <= u_0:
        return Strategy(self_strategy)
    winners = [k for k, u in enumerate(neighbor_payoffs) if u == best]
    pick = winners[int(rng.integers(len(winners)))] if len(winners) > 1 else winners[0]
    return Strategy(neighbor_strategies[pick])


def replicator_switch_prob(u_i: float, u_j: float, b: float, k_i: int = DEGREE, k_j: int = DEGREE) -> float:
    """Probability of copying a better-earning neighbour ``j``.

    The payoff gap is normalised by ``b`` (the spread of the payoff matrix)
    times the larger degree. Only defined for ``u_j > u_i``.
    """
    if not u_j > u_i:
        raise InvalidInputError(f"replicator switch requires u_j > u_i, got u_i={u_i}, u_j={u_j}")
    p = (u_j - u_i) / (b * max(k_i, k_j))
    return min(max(p, 0.0), 1.0)


def fermi_switch_prob(u_i: float, u_j: float, lam: float) -> float:
    if not lam > 0:
        raise InvalidParameterError(f"Fermi noise must be positive, got {lam}")
    x = (u_i - u_j) / lam
    if x >= 0:
        e = math.exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(x))


# -- vectorised form ----------------------------------------------------------


def _sum4(a: np.ndarray) -> np.ndarray:
    # fixed summation order so every caller gets bit-identical results
    return ((a[..., 0] + a[..., 1]) + a[..., 2]) + a[..., 3]


def cooperation_probability(
    own_s: np.ndarray,
    own_u: np.ndarray,
    nbr_s: np.ndarray,
    nbr_u: np.ndarray,
    params: GameParams,
) -> np.ndarray:
    """Probability that each focal cell cooperates after the update.

    ``nbr_s`` and ``nbr_u`` carry the four neighbours on their last axis.
    """
    own_s = np.asarray(own_s, dtype=float)
    own_u = np.asarray(own_u, dtype=float)
    nbr_s = np.asarray(nbr_s, dtype=float)
    nbr_u = np.asarray(nbr_u, dtype=float)
    u0 = own_u[..., None]
    rule = params.rule

    if rule is Rule.MONTE_CARLO:
        weight = np.where(nbr_u >= u0, nbr_u, 0.0)
        denominator = own_u + _sum4(weight)
        numerator = own_s * own_u + _sum4(weight * nbr_s)
        safe = np.where(denominator > 0, denominator, 1.0)
        return np.where(denominator > 0, numerator / safe, own_s)

    if rule is Rule.UNCONDITIONAL_IMITATION:
        best = nbr_u.max(axis=-1)
        at_best = (nbr_u == best[..., None]).astype(float)
        share = _sum4(at_best * nbr_s) / _sum4(at_best)
        return np.where(best > own_u, share, own_s)

    gap = nbr_u - u0
    if rule is Rule.REPLICATOR:
        switch = np.where(gap > 0, np.clip(gap / (params.b * DEGREE), 0.0, 1.0), 0.0)
    elif rule is Rule.FERMI:
        switch = expit(gap / params.lam)
    else:  # pragma: no cover
        raise InvalidParameterError(f"unsupported rule {rule}")
    # a uniformly chosen neighbour; only ones holding the other strategy matter
    flip = _sum4(switch * (nbr_s != own_s[..., None])) / DEGREE
    return np.where(own_s == 1, 1.0 - flip, flip)


def next_cooperation_probability(lattice: Lattice, params: GameParams) -> np.ndarray:
    """Per-cell probability of cooperating in the next round."""
    table = neighbor_table(lattice.side)
    payoffs = compute_payoffs(lattice, params).returns
    cells = lattice.cells
    return cooperation_probability(cells, payoffs, cells[table], payoffs[table], params)


def step(lattice: Lattice, params: GameParams, rng: np.random.Generator) -> Lattice:
    """Advance one round synchronously.

    Consumes exactly ``L**2`` uniforms from ``rng`` in row-major cell order.
    """
    p = next_cooperation_probability(lattice, params)
    u = rng.random(lattice.size)
    return Lattice(lattice.side, (u < p).astype(np.uint8))
