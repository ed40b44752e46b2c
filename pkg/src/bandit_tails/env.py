"""Reward distributions on [0, 1], environments and finite environment classes.

Every distribution belongs to a closed set of families (Bernoulli, Dirac,
uniform on an interval, finite support) so that means, CDFs, sup-norm
distances and density ratios are computed exactly rather than approximated.

Rewards are generated from counter-based streams: the ``s``-th draw of arm
``k`` in replication ``r`` is a pure function of ``(base_seed, r, k, s)``.
The mixing scheme (splitmix64) is part of the output contract:

    episode_seed(base, r) = mix64(mix64(base) + (r + 1) * GOLDEN)
    stream_key(seed, k)   = mix64(seed ^ ((k + 1) * ARM_MULT))
    uniform(key, s)       = (mix64(key + s * GOLDEN) >> 11) * 2**-53,  s >= 1

with all arithmetic modulo 2**64. A uniform ``u`` is mapped to a reward by
the family's quantile rule (see :meth:`ArmDistribution.from_uniform`).
"""

from __future__ import annotations

import bisect
import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
ARM_MULT = 0xD1B54A32D192ED03
TOL = 1e-12


class DistributionError(ValueError):
    """Invalid distribution parameters or literal."""


# -- stream mixing -----------------------------------------------------------


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def episode_seed(base_seed: int, replication: int) -> int:
    return mix64(mix64(base_seed) + (replication + 1) * GOLDEN)


def stream_key(seed: int, arm: int) -> int:
    return mix64(seed ^ (((arm + 1) * ARM_MULT) & MASK64))


def uniform(key: int, s: int) -> float:
    """The ``s``-th (1-based) uniform of the stream identified by ``key``."""
    return (mix64(key + s * GOLDEN) >> 11) * (1.0 / 9007199254740992.0)


# -- distributions -----------------------------------------------------------


def _check_unit(x: float, what: str) -> float:
    x = float(x)
    if not (0.0 <= x <= 1.0) or math.isnan(x):
        raise DistributionError(f"{what} must lie in [0, 1], got {x!r}")
    return x


def _fmt(x: float) -> str:
    return repr(float(x))


class ArmDistribution:
    """Common interface of the four reward families."""

    def mean(self) -> float:
        raise NotImplementedError

    def cdf(self, x: float) -> float:
        """Right-continuous P(X <= x)."""
        raise NotImplementedError

    def cdf_left(self, x: float) -> float:
        """Left limit P(X < x)."""
        raise NotImplementedError

    def atoms(self) -> tuple[tuple[float, float], ...]:
        """Point masses as ``(location, mass)`` pairs with positive mass."""
        return ()

    def density(self, x: float) -> float:
        """Lebesgue density of the continuous part at ``x``."""
        return 0.0

    def breakpoints(self) -> tuple[float, ...]:
        """Points where the CDF is not affine (atoms and interval endpoints)."""
        return tuple(x for x, _ in self.atoms())

    def in_support(self, x: float) -> bool:
        raise NotImplementedError

    def from_uniform(self, u: float) -> float:
        raise NotImplementedError

    def literal(self) -> str:
        raise NotImplementedError

    def atom_mass(self, x: float) -> float:
        for loc, w in self.atoms():
            if loc == x:
                return w
        return 0.0

    def cdf_array(self, xs: np.ndarray) -> np.ndarray:
        return np.array([self.cdf(float(x)) for x in xs])

    def cdf_left_array(self, xs: np.ndarray) -> np.ndarray:
        return np.array([self.cdf_left(float(x)) for x in xs])

    def __str__(self) -> str:
        return self.literal()


@dataclass(frozen=True)
class Bernoulli(ArmDistribution):
    p: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", _check_unit(self.p, "Bernoulli parameter"))

    def mean(self) -> float:
        return self.p

    def cdf(self, x: float) -> float:
        if x < 0.0:
            return 0.0
        if x < 1.0:
            return 1.0 - self.p
        return 1.0

    def cdf_left(self, x: float) -> float:
        if x <= 0.0:
            return 0.0
        if x <= 1.0:
            return 1.0 - self.p
        return 1.0

    def atoms(self) -> tuple[tuple[float, float], ...]:
        out = []
        if self.p < 1.0:
            out.append((0.0, 1.0 - self.p))
        if self.p > 0.0:
            out.append((1.0, self.p))
        return tuple(out)

    def in_support(self, x: float) -> bool:
        return self.atom_mass(x) > 0.0

    def from_uniform(self, u: float) -> float:
        return 1.0 if u < self.p else 0.0

    def literal(self) -> str:
        return f"ber({_fmt(self.p)})"


@dataclass(frozen=True)
class Dirac(ArmDistribution):
    x: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", _check_unit(self.x, "Dirac location"))

    def mean(self) -> float:
        return self.x

    def cdf(self, x: float) -> float:
        return 1.0 if x >= self.x else 0.0

    def cdf_left(self, x: float) -> float:
        return 1.0 if x > self.x else 0.0

    def atoms(self) -> tuple[tuple[float, float], ...]:
        return ((self.x, 1.0),)

    def in_support(self, x: float) -> bool:
        return x == self.x

    def from_uniform(self, u: float) -> float:
        return self.x

    def literal(self) -> str:
        return f"dirac({_fmt(self.x)})"


@dataclass(frozen=True)
class UniformInterval(ArmDistribution):
    a: float
    b: float

    def __post_init__(self) -> None:
        a = _check_unit(self.a, "interval endpoint")
        b = _check_unit(self.b, "interval endpoint")
        if not a < b:
            raise DistributionError(
                f"uniform interval needs a < b (use dirac for a point), got ({a}, {b})"
            )
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def mean(self) -> float:
        return 0.5 * (self.a + self.b)

    def cdf(self, x: float) -> float:
        if x <= self.a:
            return 0.0
        if x >= self.b:
            return 1.0
        return (x - self.a) / (self.b - self.a)

    cdf_left = cdf

    def density(self, x: float) -> float:
        return 1.0 / (self.b - self.a) if self.a <= x <= self.b else 0.0

    def breakpoints(self) -> tuple[float, ...]:
        return (self.a, self.b)

    def in_support(self, x: float) -> bool:
        return self.a <= x <= self.b

    def from_uniform(self, u: float) -> float:
        return self.a + (self.b - self.a) * u

    def literal(self) -> str:
        return f"unif({_fmt(self.a)},{_fmt(self.b)})"

    def cdf_array(self, xs: np.ndarray) -> np.ndarray:
        return np.clip((np.asarray(xs, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)

    cdf_left_array = cdf_array


@dataclass(frozen=True)
class FiniteSupport(ArmDistribution):
    points: tuple[tuple[float, float], ...]
    _cum: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        pts = tuple((_check_unit(x, "support point"), float(w)) for x, w in self.points)
        if not pts:
            raise DistributionError("finite support needs at least one point")
        xs = [x for x, _ in pts]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise DistributionError("finite support points must be strictly increasing")
        if any(not w > 0.0 for _, w in pts):
            raise DistributionError("finite support weights must be positive")
        total = math.fsum(w for _, w in pts)
        if abs(total - 1.0) > TOL:
            raise DistributionError(f"finite support weights sum to {total!r}, not 1")
        cum, acc = [], 0.0
        for _, w in pts:
            acc += w
            cum.append(acc)
        cum[-1] = 1.0
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_cum", tuple(cum))

    def mean(self) -> float:
        return math.fsum(x * w for x, w in self.points)

    def cdf(self, x: float) -> float:
        i = bisect.bisect_right([p for p, _ in self.points], x)
        return 0.0 if i == 0 else self._cum[i - 1]

    def cdf_left(self, x: float) -> float:
        i = bisect.bisect_left([p for p, _ in self.points], x)
        return 0.0 if i == 0 else self._cum[i - 1]

    def atoms(self) -> tuple[tuple[float, float], ...]:
        return self.points

    def in_support(self, x: float) -> bool:
        return self.atom_mass(x) > 0.0

    def from_uniform(self, u: float) -> float:
        i = min(bisect.bisect_right(self._cum, u), len(self.points) - 1)
        return self.points[i][0]

    @property
    def cumulative(self) -> tuple[float, ...]:
        return self._cum

    def literal(self) -> str:
        body = ",".join(f"{_fmt(x)}:{_fmt(w)}" for x, w in self.points)
        return f"finite({body})"


def mean(dist: ArmDistribution) -> float:
    return dist.mean()


def cdf(dist: ArmDistribution, x: float) -> float:
    return dist.cdf(x)


def density_ratio_zero(nu: ArmDistribution, nu_tilde: ArmDistribution, x: float) -> bool:
    """Whether the Radon-Nikodym derivative d(nu)/d(nu_tilde) vanishes at ``x``.

    Off the support of ``nu_tilde`` the ratio is taken to be +inf. At an atom
    of ``nu_tilde`` the ratio is the ratio of point masses. Where ``nu_tilde``
    has a positive density, an atom of ``nu`` makes the ratio +inf and
    otherwise the densities are compared.
    """
    for d in (nu, nu_tilde):
        if not isinstance(d, (Bernoulli, Dirac, UniformInterval, FiniteSupport)):
            raise TypeError(f"unsupported distribution family: {type(d).__name__}")
    if not nu_tilde.in_support(x):
        return False
    if nu_tilde.atom_mass(x) > 0.0:
        return nu.atom_mass(x) == 0.0
    if nu.atom_mass(x) > 0.0:
        return False
    return nu.density(x) == 0.0


def _sup_distance(breaks: np.ndarray, f, f_left, g, g_left) -> float:
    """Sup over [0, 1] of |f - g| for CDFs affine between ``breaks``."""
    pts = np.unique(np.concatenate([breaks, [0.0, 1.0]]))
    right = np.abs(f(pts) - g(pts))
    left = np.abs(f_left(pts) - g_left(pts))
    return float(max(right.max(), left.max()))


def cdf_distance(nu: ArmDistribution, nu_tilde: ArmDistribution) -> float:
    """Exact sup-norm distance between two CDFs on [0, 1]."""
    breaks = np.array(nu.breakpoints() + nu_tilde.breakpoints(), dtype=float)
    return _sup_distance(
        breaks, nu.cdf_array, nu.cdf_left_array, nu_tilde.cdf_array, nu_tilde.cdf_left_array
    )


def ks_distance(sorted_obs: Sequence[float] | np.ndarray, dist: ArmDistribution) -> float:
    """Exact sup over [0, 1] of |empirical CDF - F| for sorted observations."""
    obs = np.asarray(sorted_obs, dtype=float)
    if obs.size == 0:
        raise ValueError("ks_distance needs at least one observation")
    m = obs.size

    def emp(xs):
        return np.searchsorted(obs, xs, side="right") / m

    def emp_left(xs):
        return np.searchsorted(obs, xs, side="left") / m

    breaks = np.concatenate([obs, np.array(dist.breakpoints(), dtype=float)])
    return _sup_distance(breaks, emp, emp_left, dist.cdf_array, dist.cdf_left_array)


class RewardStream:
    """Indexed i.i.d. rewards X_{k,1}, X_{k,2}, ... of one arm.

    ``stream[s]`` is the ``s``-th draw (1-based); it depends only on the
    episode seed, the arm index and ``s``, never on access order.
    """

    def __init__(self, dist: ArmDistribution, seed: int, arm: int):
        self.dist = dist
        self.arm = arm
        self.key = stream_key(seed, arm)

    def __getitem__(self, s: int) -> float:
        if s < 1:
            raise IndexError("reward streams are 1-indexed")
        return self.dist.from_uniform(uniform(self.key, s))

    def take(self, count: int, start: int = 1) -> list[float]:
        return [self[s] for s in range(start, start + count)]


# -- literals ----------------------------------------------------------------

_NUM = r"\s*(\d+(?:\.\d*)?|\.\d+)\s*"
_LIT = {
    "ber": re.compile(rf"ber\({_NUM}\)$", re.I),
    "dirac": re.compile(rf"dirac\({_NUM}\)$", re.I),
    "unif": re.compile(rf"unif\({_NUM},{_NUM}\)$", re.I),
    "finite": re.compile(r"finite\((.*)\)$", re.I),
}
_PAIR = re.compile(rf"{_NUM}:{_NUM}$")


def parse_distribution(text: str) -> ArmDistribution:
    """Parse ``ber(p)``, ``dirac(x)``, ``unif(a,b)`` or ``finite(x1:w1,...)``."""
    s = text.strip()
    if m := _LIT["ber"].match(s):
        return Bernoulli(float(m.group(1)))
    if m := _LIT["dirac"].match(s):
        return Dirac(float(m.group(1)))
    if m := _LIT["unif"].match(s):
        return UniformInterval(float(m.group(1)), float(m.group(2)))
    if m := _LIT["finite"].match(s):
        pairs = []
        for part in m.group(1).split(","):
            pm = _PAIR.match(part.strip())
            if not pm:
                raise DistributionError(f"bad finite-support entry {part!r} in {text!r}")
            pairs.append((float(pm.group(1)), float(pm.group(2))))
        return FiniteSupport(tuple(pairs))
    raise DistributionError(f"unrecognised distribution literal {text!r}")


def split_top_level(text: str, sep: str = ",") -> list[str]:
    """Split on ``sep`` outside parentheses."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


# -- environments ------------------------------------------------------------


@dataclass(frozen=True)
class GapInfo:
    best_arm: int
    best_mean: float
    gaps: tuple[float, ...]
    min_gap: float
    degenerate: bool


@dataclass(frozen=True)
class Environment:
    """A K-tuple of reward distributions (arms are 0-indexed)."""

    arms: tuple[ArmDistribution, ...]

    def __post_init__(self) -> None:
        arms = tuple(self.arms)
        if len(arms) < 2:
            raise ValueError("an environment needs at least two arms")
        for a in arms:
            if not isinstance(a, ArmDistribution):
                raise TypeError(f"not an arm distribution: {a!r}")
        object.__setattr__(self, "arms", arms)

    @classmethod
    def parse(cls, spec: str | Iterable[str]) -> "Environment":
        """Arm literals separated by commas or by ``|`` (the env_id form)."""
        if isinstance(spec, str):
            items = split_top_level(spec, "|" if "|" in spec else ",")
        else:
            items = list(spec)
        return cls(tuple(parse_distribution(s) for s in items))

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def means(self) -> tuple[float, ...]:
        return tuple(a.mean() for a in self.arms)

    def gap_info(self) -> GapInfo:
        return gaps(self)

    @property
    def best_arm(self) -> int:
        return gaps(self).best_arm

    @property
    def best_mean(self) -> float:
        return gaps(self).best_mean

    @property
    def gaps(self) -> tuple[float, ...]:
        return gaps(self).gaps

    @property
    def env_id(self) -> str:
        return "|".join(a.literal() for a in self.arms)

    def __str__(self) -> str:
        return self.env_id


def gaps(env: Environment) -> GapInfo:
    """Best arm (lowest index among ties), best mean, per-arm gaps and min gap."""
    mus = env.means
    top = max(mus)
    best = next(k for k, m in enumerate(mus) if m >= top - TOL)
    deltas = tuple(0.0 if top - m <= TOL else top - m for m in mus)
    min_gap = min(d for k, d in enumerate(deltas) if k != best)
    return GapInfo(best, top, deltas, min_gap, min_gap == 0.0)


@dataclass(frozen=True)
class EnvironmentClass:
    """A finite set of environments with a common number of arms."""

    members: tuple[Environment, ...]

    def __post_init__(self) -> None:
        members = tuple(self.members)
        if not members:
            raise ValueError("an environment class needs at least one member")
        ks = {m.n_arms for m in members}
        if len(ks) != 1:
            raise ValueError(f"class members disagree on the number of arms: {sorted(ks)}")
        object.__setattr__(self, "members", members)

    @classmethod
    def parse(cls, specs: Iterable[str | Iterable[str]]) -> "EnvironmentClass":
        return cls(tuple(Environment.parse(s) for s in specs))

    @classmethod
    def permutations(cls, env: Environment) -> "EnvironmentClass":
        """All distinct arm orderings of ``env``, starting with ``env`` itself."""
        seen: dict[Environment, None] = {}
        for order in itertools.permutations(range(env.n_arms)):
            seen[Environment(tuple(env.arms[i] for i in order))] = None
        return cls(tuple(seen))

    @property
    def n_arms(self) -> int:
        return self.members[0].n_arms

    def winning(self, k: int) -> tuple[int, ...]:
        """Indices of members in which arm ``k`` is the best arm."""
        return tuple(i for i, m in enumerate(self.members) if m.best_arm == k)

    def __contains__(self, env: object) -> bool:
        return env in self.members

    @property
    def all_bernoulli(self) -> bool:
        return all(isinstance(a, Bernoulli) for m in self.members for a in m.arms)

    @property
    def gamma(self) -> float:
        """Smallest Bernoulli parameter over all members and arms."""
        if not self.all_bernoulli:
            raise ValueError("gamma is defined for all-Bernoulli classes only")
        return min(a.p for m in self.members for a in m.arms)

    def mean_gap(self, env: Environment, k: int) -> float:
        """d_k: distance from arm k's mean to its nearest winning mean (inf if none)."""
        win = self.winning(k)
        if not win:
            return math.inf
        mu = env.arms[k].mean()
        return min(abs(mu - self.members[i].arms[k].mean()) for i in win)

    def cdf_gap(self, env: Environment, k: int) -> float:
        """delta_k: sup-norm distance from arm k's CDF to its nearest winning CDF."""
        win = self.winning(k)
        if not win:
            return math.inf
        return min(cdf_distance(env.arms[k], self.members[i].arms[k]) for i in win)

    def literal(self) -> list[str]:
        return [m.env_id for m in self.members]
