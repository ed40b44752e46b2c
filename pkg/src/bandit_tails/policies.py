"""Index policies: UCB1(rho), UCB-H(rho), GCL, GCL-B, GCL* and KL-GCL*.

Every policy draws each arm once (arm ``t - 1`` at round ``t <= K``), then
plays the argmax of a UCB index or the argmin of a confidence-level index.
Ties go to the lowest arm index. Arms are 0-indexed.

This module is the readable reference implementation; the Monte Carlo
kernels in :mod:`bandit_tails._kernels` mirror it operation for operation
and are tested for identical trajectories.
"""

from __future__ import annotations

import bisect
import logging
import math
import re
from dataclasses import dataclass, field, replace

from .env import ArmDistribution, EnvironmentClass, density_ratio_zero, ks_distance

log = logging.getLogger(__name__)


class PolicyError(ValueError):
    pass


# -- configurations ----------------------------------------------------------


@dataclass(frozen=True)
class UCB1:
    rho: float = 2.0

    def __post_init__(self) -> None:
        if not self.rho >= 0.0:
            raise PolicyError(f"rho must be nonnegative, got {self.rho!r}")

    anytime = True

    @property
    def literal(self) -> str:
        return f"ucb1({self.rho!r})"


@dataclass(frozen=True)
class UCBH:
    """UCB with the horizon ``n`` in place of the round in the exploration term."""

    rho: float = 2.0
    horizon: int | None = None

    def __post_init__(self) -> None:
        if not self.rho >= 0.0:
            raise PolicyError(f"rho must be nonnegative, got {self.rho!r}")
        if self.horizon is not None and self.horizon < 1:
            raise PolicyError("horizon must be a positive integer")

    anytime = False

    def with_horizon(self, n: int) -> "UCBH":
        return replace(self, horizon=int(n))

    @property
    def literal(self) -> str:
        return f"ucbh({self.rho!r})"


@dataclass(frozen=True)
class GCL:
    cls: EnvironmentClass

    anytime = True
    literal = "gcl"


@dataclass(frozen=True)
class GCLB:
    cls: EnvironmentClass

    def __post_init__(self) -> None:
        if not self.cls.all_bernoulli:
            raise PolicyError("gclb needs an all-Bernoulli environment class")
        params = [a.p for m in self.cls.members for a in m.arms]
        # parameters must avoid 0 (or, symmetrically, avoid 1)
        if min(params) <= 0.0 and max(params) >= 1.0:
            raise PolicyError("gclb needs all parameters in [gamma, 1] or [0, gamma] with 0 < gamma < 1")

    anytime = True
    literal = "gclb"

    def winning_means(self, k: int) -> tuple[float, ...]:
        return tuple(self.cls.members[i].arms[k].p for i in self.cls.winning(k))


@dataclass(frozen=True)
class GCLStar:
    mu_star: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.mu_star <= 1.0:
            raise PolicyError("mu_star must lie in [0, 1]")

    anytime = True

    @property
    def literal(self) -> str:
        return f"gclstar({self.mu_star!r})"


@dataclass(frozen=True)
class GCLStarKL:
    mu_star: float

    def __post_init__(self) -> None:
        if not 0.0 < self.mu_star < 1.0:
            raise PolicyError("the KL index needs mu_star in (0, 1)")

    anytime = True

    @property
    def literal(self) -> str:
        return f"gclstar_kl({self.mu_star!r})"


PolicyConfig = UCB1 | UCBH | GCL | GCLB | GCLStar | GCLStarKL

_NUM = r"\s*(\d+(?:\.\d*)?|\.\d+)\s*"


def parse_policy(text: str, cls: EnvironmentClass | None = None) -> PolicyConfig:
    """Parse a policy literal; ``gcl``/``gclb`` take their class from ``cls``."""
    s = text.strip().lower()
    for name, ctor in (("ucb1", UCB1), ("ucbh", UCBH), ("gclstar_kl", GCLStarKL), ("gclstar", GCLStar)):
        if m := re.fullmatch(rf"{name}\({_NUM}\)", s):
            return ctor(float(m.group(1)))
    if s in ("gcl", "gclb"):
        if cls is None:
            raise PolicyError(f"policy {s!r} needs an environment class")
        return GCL(cls) if s == "gcl" else GCLB(cls)
    raise PolicyError(f"unrecognised policy literal {text!r}")


# -- state -------------------------------------------------------------------


@dataclass
class PolicyState:
    """Per-episode mutable statistics.

    ``counts[k]`` is T_k(t-1), ``sums[k]`` the reward sum of arm k. Sorted
    observations are kept only when ``keep_obs`` is set (needed by GCL).
    ``active`` holds the indices of class members surviving GCL's
    elimination step, or ``None`` before it has run.
    """

    n_arms: int
    keep_obs: bool = False
    counts: list[int] = field(default_factory=list)
    sums: list[float] = field(default_factory=list)
    obs: list[list[float]] = field(default_factory=list)
    first_obs: list[float | None] = field(default_factory=list)
    active: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if not self.counts:
            self.counts = [0] * self.n_arms
            self.sums = [0.0] * self.n_arms
            self.obs = [[] for _ in range(self.n_arms)]
            self.first_obs = [None] * self.n_arms

    @classmethod
    def for_config(cls, n_arms: int, config: PolicyConfig) -> "PolicyState":
        return cls(n_arms, keep_obs=isinstance(config, GCL))

    @property
    def round(self) -> int:
        """The round t about to be played."""
        return sum(self.counts) + 1

    def mean(self, k: int) -> float:
        return self.sums[k] / self.counts[k]

    def update(self, arm: int, reward: float) -> None:
        if self.counts[arm] == 0:
            self.first_obs[arm] = reward
        self.counts[arm] += 1
        self.sums[arm] += reward
        if self.keep_obs:
            bisect.insort(self.obs[arm], reward)


# -- indexes -----------------------------------------------------------------


def ucb_index(xhat: float, pulls: int, tau: int, rho: float) -> float:
    return xhat + math.sqrt(rho * math.log(tau) / pulls)


def bern_kl(p: float, q: float) -> float:
    """Kullback-Leibler divergence between Bernoulli(p) and Bernoulli(q)."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"bern_kl needs q in (0, 1), got {q!r}")
    out = 0.0
    if p > 0.0:
        out += p * math.log(p / q)
    if p < 1.0:
        out += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return out


def gclstar_index(k: int, state: PolicyState, mu_star: float) -> float:
    d = mu_star - state.mean(k)
    if d <= 0.0:
        return 0.0
    return state.counts[k] * (d * d)


def gclstar_kl_index(k: int, state: PolicyState, mu_star: float) -> float:
    return state.counts[k] * bern_kl(min(state.mean(k), mu_star), mu_star)


def gclb_index(k: int, state: PolicyState, cls: EnvironmentClass) -> float:
    win = cls.winning(k)
    if not win:
        return math.inf
    x = state.mean(k)
    best = math.inf
    for i in win:
        d = cls.members[i].arms[k].p - x
        best = min(best, d * d)
    return state.counts[k] * best


def gcl_index(k: int, state: PolicyState, cls: EnvironmentClass) -> float:
    """Pull count times the squared KS distance to the nearest active winner."""
    active = range(len(cls.members)) if state.active is None else state.active
    cands: dict[ArmDistribution, None] = {}
    for i in active:
        m = cls.members[i]
        if m.best_arm == k:
            cands[m.arms[k]] = None
    if not cands:
        return math.inf
    d = min(ks_distance(state.obs[k], nu) for nu in cands)
    return state.counts[k] * (d * d)


def eliminate(cls: EnvironmentClass, first_obs: list[float]) -> tuple[int, ...]:
    """Members surviving GCL's one-shot elimination on first observations.

    A member is removed when some other member makes one arm's first payoff
    infinitely more likely. If nothing survives the full class is kept.
    """
    keep = []
    for i, theta in enumerate(cls.members):
        removed = any(
            density_ratio_zero(theta.arms[l], other.arms[l], first_obs[l])
            for other in cls.members
            for l in range(cls.n_arms)
        )
        if not removed:
            keep.append(i)
    if not keep:
        log.warning("GCL elimination removed every environment; keeping the full class")
        return tuple(range(len(cls.members)))
    return tuple(keep)


def _argmax(values: list[float]) -> int:
    best, arm = values[0], 0
    for k in range(1, len(values)):
        if values[k] > best:
            best, arm = values[k], k
    return arm


def _argmin(values: list[float]) -> int:
    best, arm = values[0], 0
    for k in range(1, len(values)):
        if values[k] < best:
            best, arm = values[k], k
    return arm


def indexes(state: PolicyState, config: PolicyConfig) -> list[float]:
    """All arm indexes at the current round (after initialisation)."""
    K, t = state.n_arms, state.round
    if isinstance(config, UCB1):
        return [ucb_index(state.mean(k), state.counts[k], t, config.rho) for k in range(K)]
    if isinstance(config, UCBH):
        if config.horizon is None:
            raise PolicyError("ucbh needs a horizon")
        return [ucb_index(state.mean(k), state.counts[k], config.horizon, config.rho) for k in range(K)]
    if isinstance(config, GCLStar):
        return [gclstar_index(k, state, config.mu_star) for k in range(K)]
    if isinstance(config, GCLStarKL):
        return [gclstar_kl_index(k, state, config.mu_star) for k in range(K)]
    if isinstance(config, GCLB):
        return [gclb_index(k, state, config.cls) for k in range(K)]
    if isinstance(config, GCL):
        return [gcl_index(k, state, config.cls) for k in range(K)]
    raise TypeError(f"unknown policy config {config!r}")


def select_arm(state: PolicyState, config: PolicyConfig) -> int:
    """Arm to play at round ``state.round``.

    For GCL the elimination step runs (and is stored on ``state``) the first
    time this is called after initialisation.
    """
    t = state.round
    if isinstance(config, UCBH) and config.horizon is not None and t > config.horizon:
        raise PolicyError(f"ucbh played beyond its horizon {config.horizon}")
    if t <= state.n_arms:
        return t - 1
    if isinstance(config, GCL) and state.active is None:
        state.active = eliminate(config.cls, state.first_obs)
    vals = indexes(state, config)
    if isinstance(config, (UCB1, UCBH)):
        return _argmax(vals)
    return _argmin(vals)
