import itertools
import math

import numpy as np
import pytest

from bandit_tails.env import Environment, EnvironmentClass
from bandit_tails.oracle import OracleBudgetError, exact_distribution
from bandit_tails.policies import GCL, GCLB, UCB1, UCBH, GCLStar, GCLStarKL
from bandit_tails.simulate import run_monte_carlo


def brute_force_ucb1(means, rho, n):
    """Law of pull counts from every full table of per-arm Bernoulli rewards."""
    K = len(means)
    law = {}
    for table in itertools.product((0, 1), repeat=K * n):
        rows = [table[k * n:(k + 1) * n] for k in range(K)]
        prob = 1.0
        for k in range(K):
            for x in rows[k]:
                prob *= means[k] if x else 1 - means[k]
        T = [0] * K
        S = [0.0] * K
        for t in range(1, n + 1):
            if t <= K:
                a = t - 1
            else:
                idx = [S[k] / T[k] + math.sqrt(rho * math.log(t) / T[k]) for k in range(K)]
                a = max(range(K), key=lambda k: (idx[k], -k))
            S[a] += rows[a][T[a]]
            T[a] += 1
        law[tuple(T)] = law.get(tuple(T), 0.0) + prob
    return law


def test_ucb1_matches_brute_force_tables():
    env = Environment.parse("ber(0.6)|ber(0.5)")
    law = exact_distribution(env, UCB1(0.5), 5)
    ref = brute_force_ucb1([0.6, 0.5], 0.5, 5)
    assert law.pmf.keys() == ref.keys()
    for key, p in ref.items():
        assert law.pmf[key] == pytest.approx(p, abs=1e-12)
    assert law.expected_pseudo_regret == pytest.approx(sum(0.1 * c[1] * p for c, p in ref.items()), abs=1e-12)


def test_ucb1_matches_monte_carlo():
    env = Environment.parse("ber(0.6)|ber(0.5)")
    R = 1_000_000
    law = exact_distribution(env, UCB1(0.5), 5)
    ss = run_monte_carlo(env, UCB1(0.5), [5], R, base_seed=17)
    t2 = ss.counts[:, 0, 1]
    for c, p in law.marginal(1).items():
        q = float(np.mean(t2 == c))
        assert abs(q - p) <= 4 * math.sqrt(p * (1 - p) / R) + 1e-12


def test_all_dirac_has_a_single_path():
    env = Environment.parse("dirac(0.6)|dirac(0.5)|dirac(0.2)")
    law = exact_distribution(env, UCB1(0.5), 10)
    assert law.paths == 1 and len(law.pmf) == 1
    (counts,) = law.pmf
    assert sum(counts) == 10 and law.pmf[counts] == 1.0


def test_point_mass_bernoullis_collapse():
    env = Environment.parse("ber(1)|ber(0)")
    law = exact_distribution(env, UCB1(0.5), 8)
    ref = exact_distribution(Environment.parse("dirac(1)|dirac(0)"), UCB1(0.5), 8)
    assert law.pmf == ref.pmf
    assert law.expected_pseudo_regret == ref.expected_pseudo_regret


ENVS = ["ber(0.6)|ber(0.5)", "ber(0.7)|finite(0.1:0.5,0.9:0.5)", "ber(0.3)|dirac(0.5)|ber(0.8)"]


def _configs(env):
    cls = EnvironmentClass.permutations(env)
    out = [UCB1(0.3), UCBH(0.5), GCLStar(env.best_mean), GCL(cls)]
    if 0 < env.best_mean < 1:
        out.append(GCLStarKL(env.best_mean))
    if cls.all_bernoulli:
        out.append(GCLB(cls))
    return out


CASES = [(lit, cfg) for lit in ENVS for cfg in _configs(Environment.parse(lit))]


@pytest.mark.parametrize("lit,cfg", CASES, ids=[f"{lit}-{c.literal}" for lit, c in CASES])
def test_total_probability_and_reverse_invariance(lit, cfg):
    env = Environment.parse(lit)
    n = 7
    fwd = exact_distribution(env, cfg, n)
    rev = exact_distribution(env, cfg, n, reverse=True)
    assert fwd.total_probability == pytest.approx(1.0, abs=1e-12)
    assert sum(fwd.pmf.values()) == pytest.approx(1.0, abs=1e-12)
    assert all(sum(c) == n and min(c) >= 1 for c in fwd.pmf)
    assert fwd.pmf.keys() == rev.pmf.keys()
    for key, p in fwd.pmf.items():
        assert rev.pmf[key] == pytest.approx(p, abs=1e-12)
    assert rev.expected_pseudo_regret == pytest.approx(fwd.expected_pseudo_regret, abs=1e-12)


def test_rejections():
    env = Environment.parse("ber(0.6)|ber(0.5)")
    with pytest.raises(OracleBudgetError) as err:
        exact_distribution(env, UCB1(0.5), 12, budget=100)
    assert err.value.required == 2**12 and err.value.budget == 100
    with pytest.raises(ValueError):
        exact_distribution(env, UCB1(0.5), 13)
    with pytest.raises(ValueError):
        exact_distribution(env, UCB1(0.5), 1)
    with pytest.raises(ValueError):
        exact_distribution(Environment.parse("unif(0,1)|ber(0.5)"), UCB1(0.5), 4)
    with pytest.raises(ValueError):
        exact_distribution(Environment.parse("finite(0:0.25,0.3:0.25,0.6:0.25,1:0.25)|ber(0.5)"), UCB1(0.5), 4)
