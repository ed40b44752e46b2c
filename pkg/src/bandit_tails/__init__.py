"""Stochastic multi-armed bandit policies and regret-tail experiments."""

from .env import (
    Bernoulli,
    Dirac,
    DistributionError,
    Environment,
    EnvironmentClass,
    FiniteSupport,
    UniformInterval,
    episode_seed,
    ks_distance,
    parse_distribution,
)
from .oracle import ExactLaw, OracleBudgetError, exact_distribution
from .policies import GCL, GCLB, UCB1, UCBH, GCLStar, GCLStarKL, PolicyError, PolicyState, parse_policy, select_arm
from .simulate import EpisodeResult, SampleSet, run_episode, run_horizons, run_monte_carlo
from .stats import (
    TailRate,
    decay_fit,
    f_regret_check,
    f_tail_check,
    mean_ci,
    smoothed_pmf,
    tail_curve,
)

__version__ = "0.1.0"

__all__ = [
    "Bernoulli",
    "Dirac",
    "DistributionError",
    "Environment",
    "EnvironmentClass",
    "EpisodeResult",
    "ExactLaw",
    "FiniteSupport",
    "GCL",
    "GCLB",
    "GCLStar",
    "GCLStarKL",
    "OracleBudgetError",
    "PolicyError",
    "PolicyState",
    "SampleSet",
    "TailRate",
    "UCB1",
    "UCBH",
    "UniformInterval",
    "decay_fit",
    "episode_seed",
    "exact_distribution",
    "f_regret_check",
    "f_tail_check",
    "ks_distance",
    "mean_ci",
    "parse_distribution",
    "parse_policy",
    "run_episode",
    "run_horizons",
    "run_monte_carlo",
    "select_arm",
    "smoothed_pmf",
    "tail_curve",
]
