"""Compiled episode loops for Monte Carlo runs.

Arithmetic mirrors :mod:`bandit_tails.policies` and :mod:`bandit_tails.env`
expression by expression so that trajectories are bit-identical to the
reference implementation. Kernels release the GIL; callers parallelise
over blocks of replications with threads.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

U64 = np.uint64
_GOLDEN = U64(0x9E3779B97F4A7C15)
_ARM_MULT = U64(0xD1B54A32D192ED03)
_INV53 = 1.0 / 9007199254740992.0

BER, DIRAC, UNIF, FINITE = 0, 1, 2, 3
UCB1, UCBH, GCLSTAR, GCLSTAR_KL, GCLB, GCL = 0, 1, 2, 3, 4, 5


@njit(cache=True, nogil=True)
def mix64(z):
    z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)
    return z ^ (z >> U64(31))


@njit(cache=True, nogil=True)
def episode_seed(base, r):
    return mix64(mix64(base) + U64(r + 1) * _GOLDEN)


@njit(cache=True, nogil=True)
def stream_key(seed, arm):
    return mix64(seed ^ (U64(arm + 1) * _ARM_MULT))


@njit(cache=True, nogil=True)
def uniform(key, s):
    return float(mix64(key + U64(s) * _GOLDEN) >> U64(11)) * _INV53


@njit(cache=True, nogil=True)
def from_uniform(kind, p1, p2, fx, fc, fm, u):
    if kind == BER:
        return 1.0 if u < p1 else 0.0
    if kind == DIRAC:
        return p1
    if kind == UNIF:
        return p1 + (p2 - p1) * u
    i = 0
    while i < fm - 1 and not u < fc[i]:
        i += 1
    return fx[i]


@njit(cache=True, nogil=True)
def draw_block(kind, p1, p2, fx, fc, fm, key, start, count):
    out = np.empty(count)
    for j in range(count):
        out[j] = from_uniform(kind, p1, p2, fx, fc, fm, uniform(key, start + j))
    return out


@njit(cache=True, nogil=True)
def first_draws(base, r0, nrep, kinds, p1, p2, fx, fc, fm):
    K = kinds.shape[0]
    out = np.empty((nrep, K))
    for j in range(nrep):
        seed = episode_seed(base, r0 + j)
        for k in range(K):
            out[j, k] = from_uniform(kinds[k], p1[k], p2[k], fx[k], fc[k], fm[k],
                                     uniform(stream_key(seed, k), 1))
    return out


@njit(cache=True, nogil=True)
def _cdf(kind, p1, p2, fx, fc, fm, x):
    if kind == BER:
        if x < 0.0:
            return 0.0
        if x < 1.0:
            return 1.0 - p1
        return 1.0
    if kind == DIRAC:
        return 1.0 if x >= p1 else 0.0
    if kind == UNIF:
        if x <= p1:
            return 0.0
        if x >= p2:
            return 1.0
        return (x - p1) / (p2 - p1)
    acc = 0.0
    for i in range(fm):
        if fx[i] <= x:
            acc = fc[i]
    return acc


@njit(cache=True, nogil=True)
def _cdf_left(kind, p1, p2, fx, fc, fm, x):
    if kind == BER:
        if x <= 0.0:
            return 0.0
        if x <= 1.0:
            return 1.0 - p1
        return 1.0
    if kind == DIRAC:
        return 1.0 if x > p1 else 0.0
    if kind == UNIF:
        if x <= p1:
            return 0.0
        if x >= p2:
            return 1.0
        return (x - p1) / (p2 - p1)
    acc = 0.0
    for i in range(fm):
        if fx[i] < x:
            acc = fc[i]
    return acc


@njit(cache=True, nogil=True)
def ks_distance(obs, m, bp, nb, kind, p1, p2, fx, fc, fm):
    """Sup over [0, 1] of |F_emp - F| for sorted ``obs[:m]``.

    ``bp[:nb]`` holds the sorted breakpoints of F together with 0 and 1.
    Both lists are merged; at each point the right values and the left
    limits of the two CDFs are compared.
    """
    best = 0.0
    if kind == UNIF:
        # F is continuous and piecewise linear: the sup sits at the jumps of
        # the empirical CDF, as a right value or a left limit
        for i in range(m):
            f = _cdf(kind, p1, p2, fx, fc, fm, obs[i])
            d = (i + 1) / m - f
            if d > best:
                best = d
            d = f - i / m
            if d > best:
                best = d
        return best
    i = 0
    j = 0
    while i < m or j < nb:
        if j >= nb or (i < m and obs[i] < bp[j]):
            b = obs[i]
        else:
            b = bp[j]
        lo = i
        while i < m and obs[i] <= b:
            i += 1
        while j < nb and bp[j] <= b:
            j += 1
        d = abs(i / m - _cdf(kind, p1, p2, fx, fc, fm, b))
        if d > best:
            best = d
        d = abs(lo / m - _cdf_left(kind, p1, p2, fx, fc, fm, b))
        if d > best:
            best = d
    return best


@njit(cache=True, nogil=True)
def _bern_kl(p, q):
    out = 0.0
    if p > 0.0:
        out += p * math.log(p / q)
    if p < 1.0:
        out += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return out


@njit(cache=True, nogil=True)
def _mean_index(code, c, total, mu_star, win_row, nw):
    """GCL*, KL-GCL* and GCL-B indexes from a pull count and reward sum."""
    x = total / c
    if code == GCLSTAR:
        d = mu_star - x
        if d <= 0.0:
            return 0.0
        return c * (d * d)
    if code == GCLSTAR_KL:
        return c * _bern_kl(min(x, mu_star), mu_star)
    if nw == 0:
        return math.inf
    best = math.inf
    for j in range(nw):
        d = win_row[j] - x
        best = min(best, d * d)
    return c * best


@njit(cache=True, nogil=True)
def _gcl_index(k, cnt, obs, ckind, cp1, cp2, cfx, cfc, cfm, cbp, cnb, cbest, active):
    best = math.inf
    found = False
    for i in range(cbest.shape[0]):
        if active[i] and cbest[i] == k:
            d = ks_distance(obs[k], cnt[k], cbp[i, k], cnb[i, k], ckind[i, k], cp1[i, k],
                            cp2[i, k], cfx[i, k], cfc[i, k], cfm[i, k])
            found = True
            if d < best:
                best = d
    if not found:
        return math.inf
    return cnt[k] * (best * best)


@njit(cache=True, nogil=True)
def run_block(base, r0, nrep, kinds, p1, p2, fx, fc, fm, gaps, best_arm,
              code, rho, tau, mu_star, win, nwin,
              ckind, cp1, cp2, cfx, cfc, cfm, cbp, cnb, cbest, active,
              ckpts, out_counts, out_regret, out_pseudo):
    """Run replications ``r0 .. r0 + nrep - 1`` and fill the output rows."""
    K = kinds.shape[0]
    n = ckpts[-1]
    keep_obs = code == GCL
    obs = np.empty((K, n if keep_obs else 1))
    keys = np.empty(K, dtype=np.uint64)
    cnt = np.zeros(K, dtype=np.int64)
    sm = np.zeros(K)
    idx = np.zeros(K)
    for j in range(nrep):
        seed = episode_seed(base, r0 + j)
        for k in range(K):
            keys[k] = stream_key(seed, k)
            cnt[k] = 0
            sm[k] = 0.0
        bkey = keys[best_arm]
        b = best_arm
        collected = 0.0
        c = 0
        act = active[j]
        for t in range(1, n + 1):
            if t <= K:
                a = t - 1
            elif code == UCB1 or code == UCBH:
                lt = math.log(t) if code == UCB1 else math.log(tau)
                a = 0
                bestv = -math.inf
                for k in range(K):
                    v = sm[k] / cnt[k] + math.sqrt(rho * lt / cnt[k])
                    if k == 0 or v > bestv:
                        bestv = v
                        a = k
            else:
                if t == K + 1:
                    for k in range(K):
                        if code == GCL:
                            idx[k] = _gcl_index(k, cnt, obs, ckind, cp1, cp2, cfx, cfc, cfm, cbp, cnb, cbest, act)
                        else:
                            idx[k] = _mean_index(code, cnt[k], sm[k], mu_star, win[k], nwin[k])
                a = 0
                bestv = idx[0]
                for k in range(1, K):
                    if idx[k] < bestv:
                        bestv = idx[k]
                        a = k
            s = cnt[a] + 1
            x = from_uniform(kinds[a], p1[a], p2[a], fx[a], fc[a], fm[a], uniform(keys[a], s))
            cnt[a] = s
            sm[a] += x
            if keep_obs:
                pos = s - 1
                while pos > 0 and obs[a, pos - 1] > x:
                    obs[a, pos] = obs[a, pos - 1]
                    pos -= 1
                obs[a, pos] = x
            if t > K:
                if code == GCL:
                    idx[a] = _gcl_index(a, cnt, obs, ckind, cp1, cp2, cfx, cfc, cfm, cbp, cnb, cbest, act)
                elif code != UCB1 and code != UCBH:
                    idx[a] = _mean_index(code, cnt[a], sm[a], mu_star, win[a], nwin[a])
            collected += x
            while c < ckpts.shape[0] and ckpts[c] == t:
                extra = 0.0
                for s2 in range(cnt[b] + 1, t + 1):
                    extra += from_uniform(kinds[b], p1[b], p2[b], fx[b], fc[b], fm[b], uniform(bkey, s2))
                cf = sm[b] + extra
                ps = 0.0
                for k in range(K):
                    out_counts[j, c, k] = cnt[k]
                    ps += gaps[k] * cnt[k]
                out_regret[j, c] = cf - collected
                out_pseudo[j, c] = ps
                c += 1


@njit(cache=True, nogil=True)
def deviation_hits(base, nrep, n, mu, level, kind, p1, p2, fx, fc, fm):
    """Replications where some s <= n has s * (mean_s - mu)**2 >= level."""
    hits = 0
    for r in range(nrep):
        key = stream_key(episode_seed(base, r), 0)
        total = 0.0
        for s in range(1, n + 1):
            total += from_uniform(kind, p1, p2, fx, fc, fm, uniform(key, s))
            d = total / s - mu
            if s * (d * d) >= level:
                hits += 1
                break
    return hits
