"""Spatial prisoner's dilemma on a periodic square lattice.

The Monte Carlo update rule (payoff-proportional roulette over self and the
neighbours doing at least as well) alongside unconditional imitation,
replicator and Fermi rules, plus the mean-field prediction, replicate
experiments and curve fitting of the density-versus-temptation data.
"""

__version__ = "0.1.0"

from .game import C, D, DEGREE, GameParams, Rule, Strategy, pairwise_payoff
from .lattice import (
    Bernoulli,
    CooperatorBlock,
    DefectorBlock,
    Lattice,
    PayoffField,
    compute_payoffs,
    cooperator_density,
    neighbors,
    new_lattice,
)
from .rules import (
    TransitionDistribution,
    fermi_switch_prob,
    mc_eligibility,
    mc_transition_distribution,
    replicator_switch_prob,
    step,
    ui_next_strategy,
)
from .engine import simulate
from .meanfield import mf_avg_payoffs, mf_derivative, mf_integrate
from .experiments import (
    EquilibriumStats,
    RunConfig,
    cluster_scenario,
    compare_rules,
    invasion_scenario,
    run_replicates,
    sweep_b,
    sweep_population,
    sweep_rho0,
)
from .fitting import FitResult, PowerLaw, Quadratic, Trig, compare_fits, evaluate_model, fit_model, goodness_of_fit, rmse
