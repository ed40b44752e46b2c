"""Single episodes and replicated Monte Carlo runs.

Regret follows the realized definition: the reward the best arm's own
stream would have paid over rounds 1..n minus the rewards actually
collected. The best arm has a single stream, so the counterfactual sum and
the policy's real pulls of that arm read the same draws.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels as K_
from .env import (
    Bernoulli,
    Dirac,
    Environment,
    EnvironmentClass,
    FiniteSupport,
    RewardStream,
    UniformInterval,
    episode_seed,
)
from .policies import (
    GCL,
    GCLB,
    UCB1,
    UCBH,
    GCLStar,
    GCLStarKL,
    PolicyConfig,
    PolicyError,
    PolicyState,
    eliminate,
    select_arm,
)


@dataclass(frozen=True)
class EpisodeResult:
    checkpoints: tuple[int, ...]
    counts: tuple[tuple[int, ...], ...]
    regret: tuple[float, ...]
    pseudo_regret: tuple[float, ...]
    seed: int
    arms: tuple[int, ...] = ()


@dataclass(frozen=True)
class SampleSet:
    """Replicated results; axis 0 is the replication, axis 1 the checkpoint."""

    policy: str
    env_id: str
    checkpoints: tuple[int, ...]
    counts: np.ndarray  # (R, C, K) int64
    regret: np.ndarray  # (R, C)
    pseudo_regret: np.ndarray  # (R, C)
    base_seed: int

    @property
    def reps(self) -> int:
        return self.regret.shape[0]

    def column(self, n: int) -> int:
        try:
            return self.checkpoints.index(n)
        except ValueError:
            raise KeyError(f"checkpoint {n} not in {self.checkpoints}") from None

    def pulls(self, n: int, arm: int) -> np.ndarray:
        return self.counts[:, self.column(n), arm]

    def regret_at(self, n: int) -> np.ndarray:
        return self.regret[:, self.column(n)]

    def pseudo_regret_at(self, n: int) -> np.ndarray:
        return self.pseudo_regret[:, self.column(n)]

    def sha256(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.policy}\n{self.env_id}\n{self.checkpoints}\n{self.base_seed}\n".encode())
        for arr in (self.counts.astype("<i8"), self.regret.astype("<f8"), self.pseudo_regret.astype("<f8")):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


def _check_checkpoints(env: Environment, config: PolicyConfig, checkpoints: Sequence[int]) -> tuple[tuple[int, ...], PolicyConfig]:
    ckpts = tuple(int(n) for n in checkpoints)
    if not ckpts:
        raise ValueError("at least one checkpoint is required")
    if any(b < a for a, b in zip(ckpts, ckpts[1:])):
        raise ValueError("checkpoints must be nondecreasing")
    if ckpts[0] < env.n_arms:
        raise ValueError(f"checkpoint {ckpts[0]} is below the number of arms {env.n_arms}")
    if isinstance(config, UCBH):
        if len(set(ckpts)) > 1:
            raise PolicyError("horizon policies are evaluated at a single checkpoint; rerun per horizon")
        if config.horizon is None:
            config = config.with_horizon(ckpts[-1])
        elif config.horizon != ckpts[-1]:
            raise PolicyError(f"ucbh horizon {config.horizon} differs from checkpoint {ckpts[-1]}")
    return ckpts, config


def run_episode(env: Environment, config: PolicyConfig, checkpoints: Sequence[int], seed: int) -> EpisodeResult:
    """Play one episode with the reference policy implementation.

    ``seed`` is the episode seed; replication ``r`` of a Monte Carlo run
    with base seed ``b`` uses ``episode_seed(b, r)``.
    """
    ckpts, config = _check_checkpoints(env, config, checkpoints)
    K = env.n_arms
    info = env.gap_info()
    streams = [RewardStream(d, seed, k) for k, d in enumerate(env.arms)]
    b = info.best_arm
    state = PolicyState.for_config(K, config)
    collected = 0.0
    counts, regret, pseudo, arms = [], [], [], []
    c = 0
    for t in range(1, ckpts[-1] + 1):
        a = select_arm(state, config)
        x = streams[a][state.counts[a] + 1]
        state.update(a, x)
        arms.append(a)
        collected += x
        while c < len(ckpts) and ckpts[c] == t:
            # counterfactual best-arm sum: its own pulls, then the unread draws
            extra = 0.0
            for s in range(state.counts[b] + 1, t + 1):
                extra += streams[b][s]
            cf = state.sums[b] + extra
            ps = 0.0
            for k in range(K):
                ps += info.gaps[k] * state.counts[k]
            counts.append(tuple(state.counts))
            regret.append(cf - collected)
            pseudo.append(ps)
            c += 1
    return EpisodeResult(ckpts, tuple(counts), tuple(regret), tuple(pseudo), seed, tuple(arms))


# -- compiled path -----------------------------------------------------------


def _encode(dists: Sequence) -> tuple[np.ndarray, ...]:
    width = max([len(d.points) for d in dists if isinstance(d, FiniteSupport)] + [1])
    n = len(dists)
    kinds = np.zeros(n, dtype=np.int64)
    p1 = np.zeros(n)
    p2 = np.zeros(n)
    fx = np.zeros((n, width))
    fc = np.ones((n, width))
    fm = np.zeros(n, dtype=np.int64)
    for i, d in enumerate(dists):
        if isinstance(d, Bernoulli):
            kinds[i], p1[i] = K_.BER, d.p
        elif isinstance(d, Dirac):
            kinds[i], p1[i] = K_.DIRAC, d.x
        elif isinstance(d, UniformInterval):
            kinds[i], p1[i], p2[i] = K_.UNIF, d.a, d.b
        elif isinstance(d, FiniteSupport):
            kinds[i] = K_.FINITE
            m = len(d.points)
            fx[i, :m] = [x for x, _ in d.points]
            fc[i, :m] = d.cumulative
            fm[i] = m
        else:
            raise TypeError(f"unsupported distribution {d!r}")
    return kinds, p1, p2, fx, fc, fm


def _breakpoints(d) -> list[float]:
    return sorted(set(d.breakpoints()) | {0.0, 1.0})


def _encode_class(cls: EnvironmentClass | None, n_arms: int):
    if cls is None:
        return (
            np.zeros((1, n_arms), dtype=np.int64), np.zeros((1, n_arms)), np.zeros((1, n_arms)),
            np.zeros((1, n_arms, 1)), np.ones((1, n_arms, 1)), np.zeros((1, n_arms), dtype=np.int64),
            np.zeros((1, n_arms, 1)), np.zeros((1, n_arms), dtype=np.int64),
            np.full(1, -1, dtype=np.int64),
        )
    M = len(cls.members)
    dists = [a for m in cls.members for a in m.arms]
    kinds, p1, p2, fx, fc, fm = _encode(dists)
    w = fx.shape[1]
    bps = [_breakpoints(d) for d in dists]
    width = max(len(b) for b in bps)
    bp = np.zeros((len(dists), width))
    nb = np.zeros(len(dists), dtype=np.int64)
    for i, b in enumerate(bps):
        bp[i, : len(b)] = b
        nb[i] = len(b)
    return (
        kinds.reshape(M, n_arms), p1.reshape(M, n_arms), p2.reshape(M, n_arms),
        fx.reshape(M, n_arms, w), fc.reshape(M, n_arms, w), fm.reshape(M, n_arms),
        bp.reshape(M, n_arms, width), nb.reshape(M, n_arms),
        np.array([m.best_arm for m in cls.members], dtype=np.int64),
    )


def first_draws(env: Environment, base_seed: int, r0: int, nrep: int) -> np.ndarray:
    """X_{k,1} for every arm of replications ``r0 .. r0 + nrep - 1``."""
    return K_.first_draws(np.uint64(base_seed), r0, nrep, *_encode(env.arms))


def _active_masks(env: Environment, cls: EnvironmentClass, base_seed: int, r0: int, nrep: int) -> np.ndarray:
    firsts = first_draws(env, base_seed, r0, nrep)
    mask = np.zeros((nrep, len(cls.members)), dtype=np.bool_)
    cache: dict[tuple[float, ...], tuple[int, ...]] = {}
    for j in range(nrep):
        key = tuple(firsts[j].tolist())
        if key not in cache:
            cache[key] = eliminate(cls, list(key))
        mask[j, list(cache[key])] = True
    return mask


def run_monte_carlo(
    env: Environment,
    config: PolicyConfig,
    checkpoints: Sequence[int],
    reps: int,
    base_seed: int = 0,
    workers: int = 1,
    block: int | None = None,
) -> SampleSet:
    """Replicate episodes; the result does not depend on ``workers`` or ``block``."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if not 0 <= base_seed < 2**64:
        raise ValueError("base seed must be an unsigned 64-bit integer")
    ckpts, config = _check_checkpoints(env, config, checkpoints)
    Kn = env.n_arms
    info = env.gap_info()
    arms = _encode(env.arms)
    gaps = np.array(info.gaps)
    rho = tau = mu_star = 0.0
    win = np.zeros((Kn, 1))
    nwin = np.zeros(Kn, dtype=np.int64)
    cls = None
    if isinstance(config, UCB1):
        code, rho = K_.UCB1, config.rho
    elif isinstance(config, UCBH):
        code, rho, tau = K_.UCBH, config.rho, float(config.horizon)
    elif isinstance(config, GCLStar):
        code, mu_star = K_.GCLSTAR, config.mu_star
    elif isinstance(config, GCLStarKL):
        code, mu_star = K_.GCLSTAR_KL, config.mu_star
    elif isinstance(config, GCLB):
        code = K_.GCLB
        means = [config.winning_means(k) for k in range(Kn)]
        win = np.zeros((Kn, max(1, max(len(m) for m in means))))
        for k, m in enumerate(means):
            win[k, : len(m)] = m
            nwin[k] = len(m)
    elif isinstance(config, GCL):
        code, cls = K_.GCL, config.cls
        if cls.n_arms != Kn:
            raise ValueError("class and environment disagree on the number of arms")
    else:
        raise TypeError(f"unknown policy config {config!r}")
    cls_arrays = _encode_class(cls, Kn)

    C = len(ckpts)
    counts = np.zeros((reps, C, Kn), dtype=np.int64)
    regret = np.zeros((reps, C))
    pseudo = np.zeros((reps, C))
    ck = np.array(ckpts, dtype=np.int64)
    base = np.uint64(base_seed)

    if block is None:
        block = max(1, min(4096, math.ceil(reps / max(1, 4 * workers))))

    def job(r0: int) -> None:
        nrep = min(block, reps - r0)
        if cls is not None:
            active = _active_masks(env, cls, base_seed, r0, nrep)
        else:
            active = np.zeros((nrep, 1), dtype=np.bool_)
        K_.run_block(
            base, r0, nrep, *arms, gaps, info.best_arm,
            code, rho, tau, mu_star, win, nwin, *cls_arrays, active,
            ck, counts[r0:r0 + nrep], regret[r0:r0 + nrep], pseudo[r0:r0 + nrep],
        )

    starts = range(0, reps, block)
    if workers <= 1:
        for r0 in starts:
            job(r0)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(job, starts))
    return SampleSet(config.literal, env.env_id, ckpts, counts, regret, pseudo, base_seed)


def run_horizons(
    env: Environment,
    config: PolicyConfig,
    horizons: Sequence[int],
    reps: int,
    base_seed: int = 0,
    workers: int = 1,
) -> SampleSet:
    """Evaluate at several n: one trajectory for anytime policies, one run per n otherwise."""
    ns = tuple(sorted(set(int(n) for n in horizons)))
    if config.anytime:
        return run_monte_carlo(env, config, ns, reps, base_seed, workers)
    parts = [run_monte_carlo(env, config.with_horizon(n), (n,), reps, base_seed, workers) for n in ns]
    return SampleSet(
        parts[0].policy,
        env.env_id,
        ns,
        np.concatenate([p.counts for p in parts], axis=1),
        np.concatenate([p.regret for p in parts], axis=1),
        np.concatenate([p.pseudo_regret for p in parts], axis=1),
        base_seed,
    )


__all__ = [
    "EpisodeResult",
    "SampleSet",
    "episode_seed",
    "first_draws",
    "run_episode",
    "run_horizons",
    "run_monte_carlo",
]
