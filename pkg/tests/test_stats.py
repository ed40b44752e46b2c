import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bandit_tails.env import Bernoulli, Environment, EnvironmentClass
from bandit_tails.policies import GCLB, UCB1, GCLStar
from bandit_tails.simulate import run_monte_carlo
from bandit_tails.stats import (
    TailRate,
    binomial_se,
    decay_fit,
    deviation_bound,
    f_regret_check,
    f_tail_check,
    f_tail_sweep,
    hoeffding_event_frequency,
    local_maxima,
    loglog_slope,
    mean_ci,
    smoothed_pmf,
    tail_curve,
)


def test_mean_ci_examples():
    assert mean_ci([0.3] * 10) == (0.3, 0.0)
    m, h = mean_ci([0.0, 1.0])
    assert m == 0.5 and h == pytest.approx(0.98, abs=1e-12)
    with pytest.raises(ValueError):
        mean_ci([1.0])


def test_mean_ci_coverage():
    rng = np.random.default_rng(2024)
    hits = 0
    for _ in range(100):
        m, h = mean_ci(rng.random(100_000) < 0.3)
        hits += abs(m - 0.3) <= h
    assert hits >= 93


def test_tail_curve_examples():
    tc = tail_curve([1, 2, 3, 4], [0.5, 2.5, 4.0, 4.5])
    assert tc.p_hat.tolist() == [1.0, 0.5, 0.25, 0.0]
    assert tc.se[0] == 0.0 and tc.se[1] == pytest.approx(0.25)
    with pytest.raises(ValueError):
        tail_curve([1, 2], [2.0, 1.0])


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=60), st.lists(st.floats(-60, 60), min_size=1, max_size=30))
def test_tail_curve_is_a_survival_function(xs, th):
    tc = tail_curve(xs, sorted(th))
    assert ((tc.p_hat >= 0) & (tc.p_hat <= 1)).all()
    assert (np.diff(tc.p_hat) <= 0).all()


def test_smoothed_pmf():
    assert smoothed_pmf([2.0, 2.0, 2.0]).is_spike
    rng = np.random.default_rng(1)
    x = rng.normal(3.0, 2.0, 5000)
    pm = smoothed_pmf(x)
    assert pm.bandwidth == pytest.approx(1.06 * x.std(ddof=1) * 5000 ** -0.2)
    assert np.trapezoid(pm.density, pm.grid) == pytest.approx(1.0, abs=1e-6)
    assert (pm.density >= 0).all()
    assert pm.grid[0] == pytest.approx(x.min() - 3 * pm.bandwidth)
    assert pm.grid[-1] == pytest.approx(x.max() + 3 * pm.bandwidth)
    with pytest.raises(ValueError):
        smoothed_pmf(x, bandwidth=0.0)


def test_smoothed_pmf_finds_two_modes():
    rng = np.random.default_rng(5)
    x = np.concatenate([rng.normal(0.0, 1.0, 20_000), rng.normal(12.0, 1.0, 20_000)])
    pm = smoothed_pmf(x, bandwidth=0.5)
    modes = local_maxima(pm)
    assert len(modes) == 2
    assert modes[1] - modes[0] > 4 * pm.bandwidth
    assert modes[0] == pytest.approx(0.0, abs=0.3) and modes[1] == pytest.approx(12.0, abs=0.3)


@given(st.lists(st.integers(0, 30), min_size=2, max_size=200))
def test_smoothed_pmf_integrates_to_one(xs):
    pm = smoothed_pmf(xs)
    if pm.is_spike:
        assert len(set(xs)) == 1
    else:
        assert np.trapezoid(pm.density, pm.grid) == pytest.approx(1.0, abs=1e-6)
        assert (pm.density >= 0).all()


# -- f-tail checks -------------------------------------------------------------

ENV = Environment.parse("ber(0.9)|ber(0.5)")


@pytest.fixture(scope="module")
def gclstar_samples():
    return run_monte_carlo(ENV, GCLStar(0.9), [100, 1000], 20_000, base_seed=3)


def test_f_tail_huge_constant_passes(gclstar_samples):
    rep = f_tail_check(gclstar_samples, ENV, 1e6, 1e-9, TailRate("power", 1.0))
    assert rep.passed and all(r.exceedance == 0.0 and r.threshold > r.n for r in rep.rows)


def test_f_tail_gclstar_instance(gclstar_samples):
    # threshold 4 ln(1000) / 0.16 + 1 with f(n) = n and C~ = 2K
    rows = [r for r in deviation_bound(gclstar_samples, ENV.gaps, 0, beta=1.0) if r.n == 1000]
    assert rows[0].threshold == pytest.approx(173.69388197455343, abs=1e-9)
    rep = f_tail_check(gclstar_samples, ENV, 4.0, 4.0, TailRate("power", 1.0))
    assert rep.passed and rows[0].passed


def test_f_tail_fails_for_low_exploration():
    env = Environment.parse("ber(0.6)|dirac(0.5)")
    ss = run_monte_carlo(env, UCB1(0.1), [100, 1000, 10_000], 4000, base_seed=3)
    rep = f_tail_check(ss, env, 4.0, 4.0, TailRate("power", 1.0))
    passed = {r.n: r.passed for r in rep.rows}
    assert passed[100] and passed[1000] and not passed[10_000]


def test_f_tail_degenerate_environment():
    env = Environment.parse("ber(0.5)|ber(0.5)")
    ss = run_monte_carlo(env, UCB1(0.5), [50], 10, base_seed=0)
    with pytest.raises(ValueError):
        f_tail_check(ss, env, 4.0, 4.0, TailRate("power", 1.0))
    with pytest.raises(ValueError):
        f_regret_check(ss, env, 4.0, 4.0, TailRate("power", 1.0))
    with pytest.raises(ValueError):
        TailRate("exp", 1.0)


def test_f_tail_monotone_in_constants(gclstar_samples):
    rate = TailRate("polylog", 2.0)
    reps = f_tail_sweep(gclstar_samples, ENV, [0.05, 0.2, 1.0], [1e-4, 1e-2, 1.0], rate)
    grid = {(r.C, r.C_tilde): r.passed for r in reps}
    for (c, ct), ok in grid.items():
        if ok:
            assert all(grid[(c2, ct2)] for (c2, ct2) in grid if c2 >= c and ct2 >= ct)
    # exceedances shrink as C grows
    ex = [reps[i * 3].rows[0].exceedance for i in range(3)]
    assert ex == sorted(ex, reverse=True)


def test_tail_curve_agrees_with_regret_clause(gclstar_samples):
    rate = TailRate("power", 1.0)
    rep = f_regret_check(gclstar_samples, ENV, 0.5, 1.0, rate)
    for row in rep.rows:
        tc = tail_curve(gclstar_samples.regret_at(row.n), [row.threshold])
        assert tc.p_hat[0] == row.exceedance
        assert tc.se[0] == row.se


def test_deviation_bound_with_zero_gap():
    cls = EnvironmentClass.parse(["ber(0.3)|ber(0.5)", "ber(0.7)|ber(0.5)"])
    env = cls.members[1]
    assert cls.mean_gap(env, 1) == 0.0
    ss = run_monte_carlo(env, GCLB(cls), [200], 100, base_seed=0)
    (row,) = deviation_bound(ss, [0.0, 0.0], 0, beta=1.0)
    assert math.isinf(row.threshold) and row.exceedance == 0.0 and row.passed


def test_gclb_deviation_on_a_separated_class():
    # d for the second arm is |0.2 - 0.8| = 0.6
    cls = EnvironmentClass.parse(["ber(0.7)|ber(0.2)", "ber(0.3)|ber(0.8)"])
    env = cls.members[0]
    d = cls.mean_gap(env, 1)
    assert d == pytest.approx(0.6)
    ss = run_monte_carlo(env, GCLB(cls), [1000], 20_000, base_seed=8)
    (row,) = deviation_bound(ss, [0.0, d], 0, beta=1.0)
    assert row.threshold == pytest.approx(4 * math.log(1000) / 0.36 + 1)
    assert row.passed


def test_hoeffding_event_frequency():
    p, se = hoeffding_event_frequency(Bernoulli(0.5), 1000, 1.0, 20_000, base_seed=1)
    assert p <= 2 / 1000 + 3 * se
    # a level that is crossed by the first draw of every replication
    p, _ = hoeffding_event_frequency(Bernoulli(0.5), 3, -0.9, 1000, base_seed=1)
    assert p == 1.0


# -- decay fits ----------------------------------------------------------------

NS = np.array([1e2, 10**2.5, 1e3, 10**3.5, 1e4, 10**4.5])


def test_decay_fit_polylog():
    fit = decay_fit(NS, np.log(NS) ** -2.0)
    assert fit.polylog_r2 > 0.999 and fit.better == "polylog"
    assert fit.polylog_slope == pytest.approx(-2.0)


def test_decay_fit_polynomial():
    fit = decay_fit(NS, 1 / NS)
    assert fit.polynomial_r2 > 0.999 and fit.better == "polynomial"
    assert fit.polynomial_slope == pytest.approx(-1.0)


def test_decay_fit_flat():
    fit = decay_fit(NS, np.full(NS.size, 0.2))
    assert fit.no_decay
    assert fit.polynomial_slope == pytest.approx(0.0, abs=1e-12)
    assert fit.polylog_slope == pytest.approx(0.0, abs=1e-12)


def test_decay_fit_errors():
    with pytest.raises(ValueError, match="below Monte Carlo resolution"):
        decay_fit(NS, np.zeros(NS.size))
    with pytest.raises(ValueError):
        decay_fit(NS, [0.1, 0.05, 0.0, 0.0, 0.0, 0.0])


def test_loglog_slope_and_binomial_se():
    assert loglog_slope([10, 100, 1000], [3, 30, 300]) == pytest.approx(1.0)
    assert binomial_se(0.5, 100) == pytest.approx(0.05)
