import math

import numpy as np
import pytest

from bandit_tails.env import Environment, EnvironmentClass, episode_seed
from bandit_tails.policies import GCL, GCLB, UCB1, UCBH, GCLStar, GCLStarKL, PolicyError
from bandit_tails.simulate import run_episode, run_horizons, run_monte_carlo
from bandit_tails.stats import combined_se


def ucb_replay(values, rho, n, horizon=None):
    """Deterministic UCB trajectory for Dirac arms, by direct recursion."""
    K = len(values)
    T = [1] * K
    for t in range(K + 1, n + 1):
        lt = math.log(horizon if horizon else t)
        idx = [values[k] + math.sqrt(rho * lt / T[k]) for k in range(K)]
        T[max(range(K), key=lambda k: (idx[k], -k))] += 1
    return T


def test_dirac_pair_initialisation():
    env = Environment.parse("dirac(0.6)|dirac(0.5)")
    for cfg in (UCB1(0.5), GCLStar(0.6), UCBH(0.5)):
        ep = run_episode(env, cfg, [2], seed=0)
        assert ep.counts == ((1, 1),)
        assert ep.regret[0] == pytest.approx(0.1, abs=1e-12)
        assert ep.pseudo_regret[0] == pytest.approx(0.1, abs=1e-12)


def test_dirac_ucb1_matches_replay():
    env = Environment.parse("dirac(0.6)|dirac(0.5)")
    ep = run_episode(env, UCB1(0.5), [100], seed=1)
    T = ucb_replay([0.6, 0.5], 0.5, 100)
    assert ep.counts[0] == tuple(T)
    assert ep.pseudo_regret[0] == pytest.approx(0.1 * T[1], abs=1e-12)
    assert ep.regret[0] == pytest.approx(0.1 * T[1], abs=1e-9)
    # with rho > 0 the exploration term keeps revisiting the worse Dirac arm
    assert T[1] > 1
    ss = run_monte_carlo(env, UCB1(0.5), [100], 3, base_seed=5)
    assert (ss.counts[:, 0, :] == T).all()


def test_greedy_on_distinct_diracs_pulls_only_the_best_arm():
    env = Environment.parse("dirac(0.3)|dirac(0.8)|dirac(0.5)")
    n = 50
    for cfg in (UCB1(0.0), UCBH(0.0), GCLStar(0.8)):
        ep = run_episode(env, cfg, [n], seed=0)
        assert ep.counts[0] == (1, n - 2, 1)
        assert ep.regret[0] == pytest.approx(0.5 + 0.3, abs=1e-12)


def test_regret_zero_when_every_pull_is_optimal():
    env = Environment.parse("dirac(0.5)|dirac(0.5)")
    ep = run_episode(env, UCB1(0.5), [10, 40], seed=3)
    assert ep.regret == (0.0, 0.0) and ep.pseudo_regret == (0.0, 0.0)


def test_checkpoint_errors():
    env = Environment.parse("ber(0.6)|ber(0.5)|ber(0.4)")
    with pytest.raises(ValueError):
        run_episode(env, UCB1(0.5), [2, 10], seed=0)
    with pytest.raises(ValueError):
        run_monte_carlo(env, UCB1(0.5), [10, 5], 4)
    with pytest.raises(PolicyError):
        run_episode(env, UCBH(0.5), [10, 20], seed=0)
    with pytest.raises(PolicyError):
        run_monte_carlo(env, UCBH(0.5, 30), [20], 4)
    with pytest.raises(ValueError):
        run_monte_carlo(env, UCB1(0.5), [10], 0)


ENVS = [
    "ber(0.6)|ber(0.5)",
    "unif(0.5,0.7)|unif(0.4,0.6)",
    "ber(0.7)|finite(0.2:0.5,0.8:0.5)|dirac(0.45)",
    "dirac(0.6)|ber(0.5)",
]


def _configs(env):
    cls = EnvironmentClass.permutations(env)
    out = [UCB1(0.5), UCBH(0.5), GCLStar(env.best_mean), GCLStarKL(env.best_mean), GCL(cls)]
    if cls.all_bernoulli:
        out.append(GCLB(cls))
    return out


CASES = [(lit, cfg) for lit in ENVS for cfg in _configs(Environment.parse(lit))]


@pytest.mark.parametrize("lit,cfg", CASES, ids=[f"{lit}-{c.literal}" for lit, c in CASES])
def test_kernel_matches_reference_episode(lit, cfg):
    env = Environment.parse(lit)
    ck = [150] if isinstance(cfg, UCBH) else [env.n_arms, 40, 150]
    ss = run_monte_carlo(env, cfg, ck, 12, base_seed=11)
    for r in range(12):
        ep = run_episode(env, cfg, ck, episode_seed(11, r))
        assert np.array_equal(np.array(ep.counts), ss.counts[r])
        assert np.array_equal(np.array(ep.regret), ss.regret[r])
        assert np.array_equal(np.array(ep.pseudo_regret), ss.pseudo_regret[r])


def test_single_replication_is_an_episode():
    env = Environment.parse("ber(0.6)|ber(0.5)")
    ss = run_monte_carlo(env, UCB1(0.5), [10, 100], 1, base_seed=42)
    ep = run_episode(env, UCB1(0.5), [10, 100], episode_seed(42, 0))
    assert ss.counts[0].tolist() == [list(c) for c in ep.counts]
    assert ss.regret[0].tolist() == list(ep.regret)


@pytest.mark.parametrize("cfg", [UCB1(0.5), GCL(EnvironmentClass.parse(["ber(0.6)|ber(0.5)", "ber(0.5)|ber(0.6)"]))],
                         ids=lambda c: c.literal)
def test_results_independent_of_workers_and_blocks(cfg):
    env = Environment.parse("ber(0.6)|ber(0.5)")
    ref = run_monte_carlo(env, cfg, [50, 200], 1000, base_seed=9, workers=1)
    for workers, block in ((8, None), (3, 7), (1, 1000), (2, 1)):
        ss = run_monte_carlo(env, cfg, [50, 200], 1000, base_seed=9, workers=workers, block=block)
        assert ss.sha256() == ref.sha256()
    assert run_monte_carlo(env, cfg, [50, 200], 1000, base_seed=10).sha256() != ref.sha256()


def test_sample_set_invariants():
    env = Environment.parse("ber(0.7)|ber(0.3)|ber(0.5)")
    ck = (3, 10, 100, 400)
    for cfg in (UCB1(0.2), GCLStarKL(0.7), GCLB(EnvironmentClass.permutations(env))):
        ss = run_monte_carlo(env, cfg, ck, 500, base_seed=1)
        assert ss.counts.shape == (500, 4, 3) and ss.reps == 500
        assert (ss.counts.sum(axis=2) == np.array(ck)).all()
        assert (np.diff(ss.counts, axis=1) >= 0).all()
        assert (ss.pseudo_regret >= 0).all()
        assert (ss.counts >= 1).all()
        gaps = np.array(env.gaps)
        assert np.allclose(ss.pseudo_regret, ss.counts @ gaps)


def test_horizon_runs_are_separate_per_n():
    env = Environment.parse("ber(0.6)|ber(0.5)")
    ss = run_horizons(env, UCBH(0.5), [300, 100], 200, base_seed=4)
    assert ss.checkpoints == (100, 300)
    direct = run_monte_carlo(env, UCBH(0.5, 300), [300], 200, base_seed=4)
    assert np.array_equal(ss.counts[:, 1], direct.counts[:, 0])
    assert ss.policy == "ucbh(0.5)"
    # anytime policies share one trajectory
    any_ = run_horizons(env, UCB1(0.5), [300, 100], 200, base_seed=4)
    assert any_.checkpoints == (100, 300)


@pytest.mark.parametrize("cfg", [UCB1(0.5), UCBH(0.5), GCLStar(0.6), GCLStarKL(0.6)], ids=lambda c: c.literal)
def test_expected_regret_equals_expected_pseudo_regret(cfg):
    env = Environment.parse("ber(0.6)|ber(0.5)")
    ss = run_monte_carlo(env, cfg, [300], 5000, base_seed=2)
    reg, ps = ss.regret_at(300), ss.pseudo_regret_at(300)
    assert abs(reg.mean() - ps.mean()) < 4 * combined_se(reg, ps)
