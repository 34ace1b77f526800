"""Replicate runner, initial-condition scenarios and parameter sweeps.

Seeding: replicate ``r`` of a run with master seed ``s`` uses
``numpy.random.SeedSequence(entropy=s, spawn_key=(r,))`` feeding a PCG64
generator. That generator first draws the initial lattice (Bernoulli
patterns only) and then drives every round of the dynamics, so a
``(config, seed)`` pair fixes every output on any machine.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .engine import simulate
from .errors import InvalidFractionError, InvalidParameterError, InvalidPatternError, InvalidSizeError
from .game import GameParams, Rule, check_temptation
from .lattice import MIN_SIDE, Bernoulli, CooperatorBlock, DefectorBlock, Lattice, Pattern, compute_payoffs, new_lattice

DEFAULT_ROUNDS = 2000
DEFAULT_EQ_WINDOW = 200
FIG2_SNAPSHOT_ROUNDS = (0, 20, 100, 200, 400, 600, 800, 1000)


@dataclass(frozen=True)
class RunConfig:
    side: int
    params: GameParams
    pattern: Pattern
    rounds: int = DEFAULT_ROUNDS
    replicates: int = 1
    seed: int = 0
    eq_window: int = DEFAULT_EQ_WINDOW
    snapshot_rounds: tuple[int, ...] = ()

    def __post_init__(self):
        if self.side < MIN_SIDE:
            raise InvalidSizeError(f"lattice side must be >= {MIN_SIDE}, got {self.side}")
        if self.replicates < 1:
            raise InvalidParameterError(f"replicates must be >= 1, got {self.replicates}")
        if self.rounds < 1:
            raise InvalidParameterError(f"rounds must be >= 1, got {self.rounds}")
        if not 1 <= self.eq_window < self.rounds:
            raise InvalidParameterError(
                f"eq_window must satisfy 1 <= eq_window < rounds, got {self.eq_window} vs {self.rounds}"
            )
        if self.seed < 0:
            raise InvalidParameterError(f"seed must be non-negative, got {self.seed}")
        if isinstance(self.pattern, (CooperatorBlock, DefectorBlock)) and not 1 <= self.pattern.width <= self.side:
            raise InvalidPatternError(f"block width {self.pattern.width} must lie in [1, {self.side}]")
        object.__setattr__(self, "snapshot_rounds", tuple(sorted(set(int(t) for t in self.snapshot_rounds))))


@dataclass(frozen=True, eq=False)
class ReplicateResult:
    rho: float
    density: np.ndarray
    return_c: float  # nan when no cooperator survives
    return_d: float  # nan when no defector survives
    final: Lattice
    snapshots: dict[int, Lattice]


@dataclass(frozen=True, eq=False)
class EquilibriumStats:
    rho_mean: float
    rho_stddev: float
    series_mean: np.ndarray
    avg_return_C: float
    avg_return_D: float
    replicate_rho: np.ndarray
    eq_window: int
    snapshots: dict[int, Lattice] = field(default_factory=dict)
    final_lattices: tuple[Lattice, ...] = ()

    @property
    def replicates(self) -> int:
        return len(self.replicate_rho)

    @property
    def rho_sem(self) -> float:
        n = self.replicates
        return self.rho_stddev / math.sqrt(n) if n > 1 else 0.0

    @property
    def drift(self) -> float:
        return window_drift(self.series_mean, self.eq_window)


def window_drift(series: np.ndarray, window: int) -> float:
    """Change across the trailing window implied by its least-squares slope."""
    y = np.asarray(series[-window:], dtype=float)
    if len(y) < 2:
        return 0.0
    t = np.arange(len(y), dtype=float)
    slope = np.polyfit(t, y, 1)[0]
    return abs(slope) * (len(y) - 1)


def replicate_seed(master: int, replicate: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master, spawn_key=(replicate,))


def strategy_mean_returns(lattice: Lattice, params: GameParams) -> tuple[float, float]:
    payoffs = compute_payoffs(lattice, params).returns
    coop = lattice.cells == 1
    rc = float(payoffs[coop].mean()) if coop.any() else math.nan
    rd = float(payoffs[~coop].mean()) if (~coop).any() else math.nan
    return rc, rd


def run_replicate(config: RunConfig, replicate: int) -> ReplicateResult:
    rng = np.random.Generator(np.random.PCG64(replicate_seed(config.seed, replicate)))
    lattice = new_lattice(config.side, config.pattern, rng)
    traj = simulate(lattice, config.params, config.rounds, rng, config.snapshot_rounds)
    density = traj.density
    rc, rd = strategy_mean_returns(traj.final, config.params)
    return ReplicateResult(
        rho=float(density[-config.eq_window :].mean()),
        density=density,
        return_c=rc,
        return_d=rd,
        final=traj.final,
        snapshots=traj.snapshots,
    )


def default_threads() -> int:
    return os.cpu_count() or 1


def _nanmean(values: Sequence[float]) -> float:
    arr = np.asarray(values, dtype=float)
    arr = arr[~np.isnan(arr)]
    return float(arr.mean()) if arr.size else math.nan


def run_replicates(config: RunConfig, threads: Optional[int] = None, keep_finals: bool = False) -> EquilibriumStats:
    """Run every replicate of ``config`` and aggregate in replicate order.

    Snapshots are kept for replicate 0 only; final lattices of all
    replicates only when ``keep_finals`` is set.
    """
    threads = threads or default_threads()
    indices = range(config.replicates)
    if threads > 1 and config.replicates > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda r: run_replicate(config, r), indices))
    else:
        results = [run_replicate(config, r) for r in indices]

    rhos = np.array([r.rho for r in results])
    series = np.mean(np.stack([r.density for r in results]), axis=0)
    return EquilibriumStats(
        rho_mean=float(rhos.mean()),
        rho_stddev=float(rhos.std(ddof=1)) if len(rhos) > 1 else 0.0,
        series_mean=series,
        avg_return_C=_nanmean([r.return_c for r in results]),
        avg_return_D=_nanmean([r.return_d for r in results]),
        replicate_rho=rhos,
        eq_window=config.eq_window,
        snapshots=results[0].snapshots,
        final_lattices=tuple(r.final for r in results) if keep_finals else (),
    )


# -- scenarios ----------------------------------------------------------------


def invasion_scenario(side: int, target_fraction: float) -> tuple[DefectorBlock, float]:
    """Centred defector block covering roughly ``target_fraction`` of an all-C lattice.

    Returns the pattern and the fraction it actually covers.
    """
    if not 0.0 < target_fraction < 1.0:
        raise InvalidFractionError(f"target fraction {target_fraction} outside (0, 1)")
    width = int(round(side * math.sqrt(target_fraction)))
    if not 1 <= width <= side:
        raise InvalidFractionError(
            f"fraction {target_fraction} gives block width {width} on a side-{side} lattice"
        )
    return DefectorBlock(width), width * width / (side * side)


def cluster_scenario(side: int, width: int = 4) -> CooperatorBlock:
    if not 1 <= width <= side:
        raise InvalidPatternError(f"cluster width {width} must lie in [1, {side}]")
    return CooperatorBlock(width)


# -- sweeps -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SweepRow:
    b: float
    rho_mean: float
    rho_stddev: float
    avg_return_C: float
    avg_return_D: float
    stats: EquilibriumStats


def sweep_b(base: RunConfig, b_values: Iterable[float], threads: Optional[int] = None) -> list[SweepRow]:
    values = sorted(float(b) for b in b_values)
    for b in values:
        check_temptation(b)
    rows = []
    for b in values:
        stats = run_replicates(replace(base, params=base.params.with_b(b)), threads)
        rows.append(SweepRow(b, stats.rho_mean, stats.rho_stddev, stats.avg_return_C, stats.avg_return_D, stats))
    return rows


def temptation_grid(start: float = 1.02, stop: float = 1.40, step: float = 0.02) -> list[float]:
    n = int(round((stop - start) / step))
    return [round(start + k * step, 10) for k in range(n + 1)]


@dataclass(frozen=True, eq=False)
class Rho0Row:
    rho0: float
    series_mean: np.ndarray
    rho_mean: float
    stats: EquilibriumStats


def sweep_rho0(base: RunConfig, rho0_values: Iterable[float], threads: Optional[int] = None) -> list[Rho0Row]:
    values = [float(v) for v in rho0_values]
    for v in values:
        if not 0.0 < v <= 1.0:
            raise InvalidParameterError(f"initial density {v} outside (0, 1]")
    rows = []
    for v in values:
        stats = run_replicates(replace(base, pattern=Bernoulli(v)), threads)
        rows.append(Rho0Row(v, stats.series_mean, stats.rho_mean, stats))
    return rows


@dataclass(frozen=True, eq=False)
class PopulationRow:
    population: int
    rho_mean: float
    stats: EquilibriumStats


def sweep_population(base: RunConfig, side_values: Iterable[int], threads: Optional[int] = None) -> list[PopulationRow]:
    sides = [int(s) for s in side_values]
    for s in sides:
        if s < MIN_SIDE:
            raise InvalidSizeError(f"lattice side must be >= {MIN_SIDE}, got {s}")
    rows = []
    for s in sides:
        stats = run_replicates(replace(base, side=s), threads)
        rows.append(PopulationRow(s * s, stats.rho_mean, stats))
    return rows


@dataclass(frozen=True, eq=False)
class RuleRow:
    rule: Rule
    rho_mean: float
    stats: EquilibriumStats


RULE_ORDER = (Rule.MONTE_CARLO, Rule.UNCONDITIONAL_IMITATION, Rule.REPLICATOR, Rule.FERMI)


def compare_rules(base: RunConfig, threads: Optional[int] = None) -> list[RuleRow]:
    """All four rules from identical initial lattices (same master seed)."""
    rows = []
    for rule in RULE_ORDER:
        stats = run_replicates(replace(base, params=base.params.with_rule(rule)), threads)
        rows.append(RuleRow(rule, stats.rho_mean, stats))
    return rows
