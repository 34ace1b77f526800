from dataclasses import replace

import numpy as np
import pytest

from spatialpd.errors import InvalidFractionError, InvalidParameterError, InvalidPatternError, InvalidSizeError
from spatialpd.experiments import (
    RunConfig,
    cluster_scenario,
    compare_rules,
    invasion_scenario,
    replicate_seed,
    run_replicates,
    sweep_b,
    sweep_population,
    sweep_rho0,
    temptation_grid,
    window_drift,
)
from spatialpd.game import GameParams, Rule
from spatialpd.lattice import Bernoulli, CooperatorBlock, DefectorBlock, new_lattice

SMALL = RunConfig(side=24, params=GameParams(1.1), pattern=Bernoulli(0.5), rounds=300, replicates=6, seed=11, eq_window=50)


@pytest.mark.parametrize(
    "kw",
    [dict(replicates=0), dict(eq_window=300), dict(eq_window=0), dict(side=2), dict(seed=-1), dict(pattern=DefectorBlock(30))],
)
def test_run_config_validation(kw):
    with pytest.raises((InvalidParameterError, InvalidSizeError, InvalidPatternError)):
        replace(SMALL, **kw)


def test_all_defect_start_gives_zero():
    stats = run_replicates(replace(SMALL, pattern=Bernoulli(0.0)))
    assert stats.rho_mean == 0.0
    assert np.all(stats.series_mean == 0)
    assert np.isnan(stats.avg_return_C) and stats.avg_return_D == 0


def test_all_cooperate_start_gives_one():
    stats = run_replicates(replace(SMALL, pattern=Bernoulli(1.0)))
    assert stats.rho_mean == 1.0 and stats.avg_return_C == 4.0 and np.isnan(stats.avg_return_D)


def test_stats_shape_and_ranges():
    stats = run_replicates(SMALL)
    assert len(stats.series_mean) == SMALL.rounds + 1
    assert stats.replicates == 6
    assert 0 <= stats.rho_mean <= 1 and stats.rho_stddev >= 0
    assert 0 <= stats.avg_return_C <= 4 * 1.1 and 0 <= stats.avg_return_D <= 4 * 1.1
    assert stats.rho_mean == pytest.approx(stats.replicate_rho.mean())


def test_equilibrium_is_trailing_window_mean():
    one = replace(SMALL, replicates=1)
    stats = run_replicates(one)
    assert stats.rho_mean == pytest.approx(stats.series_mean[-50:].mean(), abs=1e-15)


def test_bit_identical_reruns():
    a = run_replicates(SMALL)
    b = run_replicates(SMALL)
    assert a.rho_mean == b.rho_mean and a.rho_stddev == b.rho_stddev
    assert np.array_equal(a.series_mean, b.series_mean)
    assert a.avg_return_C == b.avg_return_C and a.avg_return_D == b.avg_return_D


def test_thread_count_does_not_change_results():
    a = run_replicates(SMALL, threads=1)
    b = run_replicates(SMALL, threads=3)
    assert np.array_equal(a.replicate_rho, b.replicate_rho)
    assert np.array_equal(a.series_mean, b.series_mean)


def test_seed_changes_results():
    assert run_replicates(SMALL).rho_mean != run_replicates(replace(SMALL, seed=12)).rho_mean


def test_replicate_seed_mixing_is_stable():
    # documented fan-out: SeedSequence(entropy=master, spawn_key=(r,))
    ss = replicate_seed(7, 3)
    assert ss.entropy == 7 and ss.spawn_key == (3,)
    assert np.array_equal(ss.generate_state(2), np.random.SeedSequence(7).spawn(4)[3].generate_state(2))


def test_snapshots_kept_for_first_replicate():
    stats = run_replicates(replace(SMALL, snapshot_rounds=(0, 100)))
    assert sorted(stats.snapshots) == [0, 100]
    assert stats.snapshots[0].side == 24


def test_window_drift():
    assert window_drift(np.full(100, 0.3), 50) < 1e-14
    assert window_drift(np.linspace(0, 1, 101), 11) == pytest.approx(0.1)


@pytest.mark.parametrize(
    "frac, width, actual",
    [(0.04, 20, 0.04), (0.11, 33, 0.1089), (0.0625, 25, 0.0625)],
)
def test_invasion_scenario(frac, width, actual):
    pattern, got = invasion_scenario(100, frac)
    assert pattern == DefectorBlock(width)
    assert got == pytest.approx(actual, abs=1e-12)
    assert (new_lattice(100, pattern).cells == 0).sum() == width * width


@pytest.mark.parametrize("frac", [0.0, 1.0, 1e-6])
def test_invasion_scenario_invalid(frac):
    with pytest.raises(InvalidFractionError):
        invasion_scenario(100, frac)


def test_cluster_scenario():
    lat = new_lattice(100, cluster_scenario(100, 4))
    assert lat.cells.sum() == 16 and lat.cells.mean() == 0.0016
    assert new_lattice(3, cluster_scenario(3, 3)).cells.all()
    with pytest.raises(InvalidPatternError):
        cluster_scenario(10, 11)
    with pytest.raises(InvalidPatternError):
        cluster_scenario(10, 0)


def test_cluster_spreads():
    cfg = RunConfig(60, GameParams(1.1), cluster_scenario(60, 4), rounds=600, replicates=4, seed=1, eq_window=100)
    stats = run_replicates(cfg)
    assert stats.series_mean[0] == pytest.approx(16 / 3600)
    assert stats.rho_mean > 0.2


def test_sweep_b_orders_and_validates():
    rows = sweep_b(replace(SMALL, replicates=2), [1.3, 1.05])
    assert [r.b for r in rows] == [1.05, 1.3]
    with pytest.raises(InvalidParameterError):
        sweep_b(SMALL, [1.1, 2.5])


def test_temptation_grid():
    grid = temptation_grid()
    assert len(grid) == 20 and grid[0] == 1.02 and grid[-1] == 1.4
    assert np.allclose(np.diff(grid), 0.02)


def test_sweep_rho0():
    rows = sweep_rho0(replace(SMALL, replicates=2), [0.5, 1.0])
    assert rows[1].rho_mean == 1.0
    assert len(rows[0].series_mean) == SMALL.rounds + 1
    with pytest.raises(InvalidParameterError):
        sweep_rho0(SMALL, [0.0])


def test_sweep_population():
    rows = sweep_population(replace(SMALL, replicates=2, pattern=Bernoulli(0.0)), [3, 8])
    assert [(r.population, r.rho_mean) for r in rows] == [(9, 0.0), (64, 0.0)]
    with pytest.raises(InvalidSizeError):
        sweep_population(SMALL, [2])


def test_compare_rules_all_defect():
    rows = compare_rules(replace(SMALL, pattern=Bernoulli(0.0), replicates=2))
    assert {r.rule for r in rows} == set(Rule)
    assert all(r.rho_mean == 0 for r in rows)


def test_compare_rules_shares_initial_lattices():
    rows = compare_rules(replace(SMALL, replicates=2, rounds=60, eq_window=10))
    starts = {r.stats.series_mean[0] for r in rows}
    assert len(starts) == 1
