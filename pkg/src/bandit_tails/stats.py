"""Summary statistics over Monte Carlo samples: expected regret, tails,
smoothed pmfs, f-upper-tail checks and decay fits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels as K_
from .env import ArmDistribution, Environment
from .simulate import SampleSet, _encode

Z95 = 1.96


def binomial_se(p: float | np.ndarray, reps: int) -> float | np.ndarray:
    return np.sqrt(np.asarray(p) * (1.0 - np.asarray(p)) / reps)


def mean_ci(samples: Sequence[float] | np.ndarray) -> tuple[float, float]:
    """Sample mean and 95% normal-approximation half-width."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("mean_ci needs at least two samples")
    if x.min() == x.max():
        return float(x[0]), 0.0
    return float(x.mean()), float(Z95 * x.std(ddof=1) / math.sqrt(x.size))


def combined_se(a: np.ndarray, b: np.ndarray) -> float:
    """Standard error of mean(a) - mean(b) for independent samples."""
    return math.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size)


@dataclass(frozen=True)
class TailCurve:
    thresholds: np.ndarray
    p_hat: np.ndarray
    se: np.ndarray
    reps: int


def tail_curve(samples: Sequence[float] | np.ndarray, thresholds: Sequence[float] | np.ndarray) -> TailCurve:
    """Empirical survival P(X >= x) at each threshold."""
    x = np.sort(np.asarray(samples, dtype=float))
    th = np.asarray(thresholds, dtype=float)
    if np.any(np.diff(th) < 0):
        raise ValueError("thresholds must be ascending")
    p = (x.size - np.searchsorted(x, th, side="left")) / x.size
    return TailCurve(th, p, binomial_se(p, x.size), x.size)


@dataclass(frozen=True)
class SmoothedPmf:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    spike: float | None = None

    @property
    def is_spike(self) -> bool:
        return self.spike is not None


def smoothed_pmf(samples, bandwidth: float | str = "auto", grid_size: int = 512) -> SmoothedPmf:
    """Gaussian kernel density on an even grid over [min - 3h, max + 3h].

    The density is rescaled so its trapezoid integral over the grid is 1.
    Constant samples yield a spike marker instead of a density.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("smoothed_pmf needs at least two samples")
    sd = x.std(ddof=1)
    if sd == 0.0:
        return SmoothedPmf(np.array([x[0]]), np.array([1.0]), 0.0, spike=float(x[0]))
    if bandwidth == "auto":
        h = 1.06 * sd * x.size ** (-0.2)
    else:
        h = float(bandwidth)
        if not h > 0.0:
            raise ValueError("bandwidth must be positive")
    grid = np.linspace(x.min() - 3 * h, x.max() + 3 * h, grid_size)
    vals, weights = np.unique(x, return_counts=True)
    dens = np.zeros(grid_size)
    for lo in range(0, vals.size, 256):
        v, w = vals[lo:lo + 256], weights[lo:lo + 256]
        z = (grid[:, None] - v[None, :]) / h
        dens += (np.exp(-0.5 * z * z) * w).sum(axis=1)
    dens /= x.size * h * math.sqrt(2 * math.pi)
    dens /= np.trapezoid(dens, grid)
    return SmoothedPmf(grid, dens, h)


def local_maxima(pmf: SmoothedPmf) -> np.ndarray:
    d = pmf.density
    idx = [i for i in range(1, d.size - 1) if d[i] > d[i - 1] and d[i] >= d[i + 1]]
    return pmf.grid[idx]


# -- f-upper-tail checks -----------------------------------------------------


@dataclass(frozen=True)
class TailRate:
    """The rate f in C~/f(n): ``power`` is n**param, ``polylog`` is (ln n)**param."""

    kind: str
    param: float

    def __post_init__(self) -> None:
        if self.kind not in ("power", "polylog"):
            raise ValueError(f"unknown rate family {self.kind!r}")

    def __call__(self, n: float) -> float:
        if self.kind == "power":
            return float(n) ** self.param
        return math.log(n) ** self.param


@dataclass(frozen=True)
class FTailRow:
    n: int
    arm: int
    threshold: float
    exceedance: float
    se: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class FTailReport:
    rows: tuple[FTailRow, ...]
    C: float
    C_tilde: float
    rate: TailRate

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def _nondegenerate(env: Environment):
    info = env.gap_info()
    if info.degenerate:
        raise ValueError("f-tail checks exclude environments with two optimal arms")
    return info


def f_tail_check(ss: SampleSet, env: Environment, C: float, C_tilde: float, rate: TailRate) -> FTailReport:
    """Compare P(T_k(n) >= C ln n / gap_k^2) with C~/f(n) for each suboptimal arm."""
    info = _nondegenerate(env)
    rows = []
    for n in ss.checkpoints:
        if n < 2:
            continue
        bound = C_tilde / rate(n)
        for k in range(env.n_arms):
            if k == info.best_arm:
                continue
            thr = C * math.log(n) / info.gaps[k] ** 2
            p = float(np.mean(ss.pulls(n, k) >= thr))
            se = float(binomial_se(p, ss.reps))
            rows.append(FTailRow(n, k, thr, p, se, bound, p <= bound + 2 * se))
    return FTailReport(tuple(rows), C, C_tilde, rate)


def f_regret_check(ss: SampleSet, env: Environment, C: float, C_tilde: float, rate: TailRate) -> FTailReport:
    """Regret clause: P(R_n >= C ln n / gap) against C~/f(n); ``arm`` is -1."""
    info = _nondegenerate(env)
    rows = []
    for n in ss.checkpoints:
        if n < 2:
            continue
        thr = C * math.log(n) / info.min_gap
        reg = ss.regret_at(n)
        p = np.count_nonzero(reg >= thr) / reg.size
        se = float(binomial_se(p, ss.reps))
        bound = C_tilde / rate(n)
        rows.append(FTailRow(n, -1, thr, p, se, bound, p <= bound + 2 * se))
    return FTailReport(tuple(rows), C, C_tilde, rate)


def f_tail_sweep(ss: SampleSet, env: Environment, Cs: Sequence[float], C_tildes: Sequence[float], rate: TailRate) -> list[FTailReport]:
    return [f_tail_check(ss, env, c, ct, rate) for c in Cs for ct in C_tildes]


@dataclass(frozen=True)
class BoundRow:
    n: int
    arm: int
    gap: float
    threshold: float
    exceedance: float
    se: float
    bound: float
    passed: bool


def deviation_bound(ss: SampleSet, gaps: Sequence[float], best_arm: int, beta: float, n_sigma: float = 3.0) -> list[BoundRow]:
    """P(T_k(n) > 2(beta+1) ln n / gap_k^2 + 1) against 2K / n**beta.

    A zero gap makes the threshold infinite, so the event is empty.
    """
    K = len(gaps)
    out = []
    for n in ss.checkpoints:
        bound = 2 * K / n**beta
        for k, g in enumerate(gaps):
            if k == best_arm:
                continue
            thr = math.inf if g == 0.0 else 2 * (beta + 1) * math.log(n) / g**2 + 1
            p = float(np.mean(ss.pulls(n, k) > thr))
            se = float(binomial_se(p, ss.reps))
            out.append(BoundRow(n, k, g, thr, p, se, bound, p <= bound + n_sigma * se))
    return out


def hoeffding_event_frequency(dist: ArmDistribution, n: int, beta: float, reps: int, base_seed: int = 0) -> tuple[float, float]:
    """Frequency of some s <= n with s (mean_s - mu)^2 >= (beta+1)/2 ln n.

    Draws come from arm 0's stream of replication r. Returns ``(p_hat, se)``.
    """
    arrays = _encode([dist])
    level = (beta + 1) / 2 * math.log(n)
    hits = K_.deviation_hits(np.uint64(base_seed), reps, n, dist.mean(), level, *[a[0] for a in arrays])
    p = hits / reps
    return p, float(binomial_se(p, reps))


# -- decay fits --------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    polylog_r2: float
    polynomial_r2: float
    polylog_slope: float
    polynomial_slope: float
    no_decay: bool

    @property
    def better(self) -> str:
        return "polylog" if self.polylog_r2 > self.polynomial_r2 else "polynomial"

    @property
    def margin(self) -> float:
        return abs(self.polylog_r2 - self.polynomial_r2)


def _linfit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    slope, icpt = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + icpt)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = math.nan if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), r2


def decay_fit(ns: Sequence[float], probs: Sequence[float]) -> DecayFit:
    """Least-squares fits of ln P against ln ln n (polylog) and ln n (polynomial).

    Only points with a nonzero estimate enter the fits; at least four are
    needed.
    """
    n = np.asarray(ns, dtype=float)
    p = np.asarray(probs, dtype=float)
    keep = p > 0
    if not keep.any():
        raise ValueError("tail below Monte Carlo resolution")
    if keep.sum() < 4:
        raise ValueError(f"decay_fit needs at least 4 nonzero estimates, got {int(keep.sum())}")
    n, y = n[keep], np.log(p[keep])
    s_pl, r_pl = _linfit(np.log(np.log(n)), y)
    s_po, r_po = _linfit(np.log(n), y)
    return DecayFit(r_pl, r_po, s_pl, s_po, no_decay=s_po > -1e-3)


def loglog_slope(ns: Sequence[float], values: Sequence[float]) -> float:
    """Slope of ln(value) against ln(n)."""
    return float(np.polyfit(np.log(ns), np.log(values), 1)[0])
