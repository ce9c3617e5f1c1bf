import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expweibull.datasets import apply_type2_censoring
from expweibull.distributions import ewd_sample
from expweibull.exceptions import InvalidParameterError
from expweibull.fisher import fisher_matrix
from expweibull.likelihood import CensoredSample, log_likelihood_kernel
from expweibull.mle import (
    FitConfig,
    eed_fixed_point,
    eed_g1,
    eed_g2,
    eed_log_likelihood,
    eed_score,
    fit,
    fit_backfitting,
    fit_direct,
    profile_loglik,
)
from oracles import brute_g1, brute_g2, mp_eed_loglik


def _eed_instance(seed, n=40):
    rng = np.random.default_rng(seed)
    alpha, lam = rng.uniform(0.3, 6), rng.uniform(0.1, 10)
    y = np.sort(ewd_sample((alpha, 1.0, lam), n, seed=rng))
    r = int(rng.integers(5, n + 1))
    return CensoredSample(y[:r], n), alpha, lam


@pytest.fixture(scope="module")
def bb_sample(ballbearings):
    return CensoredSample(np.sort(ballbearings.values))


@pytest.fixture(scope="module")
def cf_sample(carbon):
    return CensoredSample(np.sort(carbon.values))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"epsilon_outer": 0},
        {"epsilon_inner": -1},
        {"max_outer": 0},
        {"max_inner": 0},
        {"beta_init": 0},
        {"lambda_init": -2.0},
        {"beta_bracket": (2.0, 1.0)},
        {"beta_bracket": (0.0, 1.0)},
    ],
)
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(InvalidParameterError):
        FitConfig(**kwargs)


@pytest.mark.parametrize("seed", range(10))
def test_maps_match_brute_force(seed):
    sample, alpha, lam = _eed_instance(seed)
    y = sample.observed
    assert eed_g1(alpha, lam, sample) == pytest.approx(float(brute_g1(y, sample.n_total, alpha, lam)), rel=1e-11)
    assert eed_g2(alpha, lam, sample) == pytest.approx(float(brute_g2(y, sample.n_total, alpha, lam)), rel=1e-10)
    ref = mp_eed_loglik(y, sample.n_total, alpha, lam)
    assert eed_log_likelihood(alpha, lam, sample) == pytest.approx(float(ref), rel=1e-12)


def test_g1_complete_and_unit_shape():
    y = np.array([0.2, 0.5, 0.9, 1.7, 3.0])
    lam = 1.3
    G = -np.expm1(-y / lam)
    assert eed_g1(2.5, lam, CensoredSample(y)) == pytest.approx(-np.sum(np.log(G)), rel=1e-14)
    # alpha = 1 with two censored units: the censored factor becomes G_r ln G_r / e^{-y_r/lam}
    cens = CensoredSample(y, 7)
    expected = -np.sum(np.log(G)) + 2 * G[-1] * np.log(G[-1]) / np.exp(-y[-1] / lam)
    assert eed_g1(1.0, lam, cens) == pytest.approx(expected, rel=1e-13)


def test_g2_unit_shape_gives_sample_mean():
    y = np.array([0.2, 0.5, 0.9, 1.7, 3.0])
    r = y.size
    assert eed_g2(1.0, 0.77, CensoredSample(y)) == pytest.approx(y.sum() / r**2, rel=1e-15)
    assert r * eed_g2(1.0, 123.0, CensoredSample(y)) == pytest.approx(y.mean(), rel=1e-15)


@pytest.mark.parametrize("seed", range(6))
def test_scale_map_fixes_the_scale_score(seed):
    # lam = r g2(alpha, lam) holds exactly where the lam-score vanishes
    sample, alpha, lam = _eed_instance(seed)
    r = sample.r
    expected = r * (r * eed_g2(alpha, lam, sample) - lam) / lam**2
    h = 1e-6 * lam
    fd = (eed_log_likelihood(alpha, lam + h, sample) - eed_log_likelihood(alpha, lam - h, sample)) / (2 * h)
    assert eed_score(alpha, lam, sample)[1] == pytest.approx(expected, rel=1e-12)
    assert fd == pytest.approx(expected, rel=1e-5, abs=1e-7 * r / lam)


@pytest.mark.parametrize("seed", range(10))
def test_fixed_point_zeroes_the_score(seed):
    sample, _, _ = _eed_instance(seed, n=60)
    sol = eed_fixed_point(sample)
    assert sol.converged
    g = eed_score(sol.alpha, sol.lam, sample)
    assert np.linalg.norm(g * np.array([sol.alpha, sol.lam])) < 1e-5
    assert sol.alpha == pytest.approx(sample.r / eed_g1(sol.alpha, sol.lam, sample), rel=1e-8)
    assert sol.lam == pytest.approx(sample.r * eed_g2(sol.alpha, sol.lam, sample), rel=1e-8)
    alpha, lam, trace = sol
    assert trace[0] == (1.0, pytest.approx(np.mean(sample.observed))) and (alpha, lam) == trace[-1]


def test_fixed_point_on_ballbearings(bb_sample):
    sol = eed_fixed_point(bb_sample)
    assert abs(sol.alpha - 5.2707) < 0.01
    assert abs(sol.lam - 31.0035) < 0.05


def test_fixed_point_consistency_large_sample():
    n = 10_000
    y = CensoredSample(np.sort(ewd_sample((2.0, 1.0, 1.0), n, seed=20240613)))
    sol = eed_fixed_point(y)
    info = fisher_matrix((2.0, 1.0, 1.0), 1.0).entries[np.ix_([0, 2], [0, 2])]
    se = np.sqrt(np.diag(np.linalg.inv(info)) / n)
    assert abs(sol.alpha - 2.0) < 3 * se[0]
    assert abs(sol.lam - 1.0) < 3 * se[1]


def test_profile_at_unit_shape_is_the_eed_fit(bb_sample):
    pt = profile_loglik(1.0, bb_sample)
    eed, _ = fit(bb_sample, family="eed")
    assert pt.value == pytest.approx(eed.loglik, abs=1e-9)
    assert pt.sigma == pytest.approx(eed.theta_hat.sigma, rel=1e-7)
    with_c = profile_loglik(1.0, bb_sample, include_constant=True)
    assert with_c.value - pt.value == pytest.approx(eed.loglik_full - eed.loglik)


def test_profile_on_carbon(cf_sample):
    assert abs(-profile_loglik(2.4091, cf_sample).value - 141.3320) < 0.01


def test_profile_maximum(bb_sample):
    res = fit_backfitting(bb_sample)
    b = res.theta_hat.beta
    top = profile_loglik(b, bb_sample).value
    for f in np.linspace(0.8, 1.2, 9):
        assert profile_loglik(b * f, bb_sample).value <= top + 1e-9


def test_backfitting_on_ballbearings(bb_sample):
    res = fit_backfitting(bb_sample)
    assert res.converged and res.status == "converged"
    for got, want in zip(res.theta_hat, (4.7446, 1.0444, 33.6008)):
        assert got == pytest.approx(want, rel=0.01)
    assert abs(res.neg_loglik - 112.9740) < 0.01
    # ascent across sweeps
    assert all(b >= a - 1e-12 for a, b in zip(res.profile_path, res.profile_path[1:]))


def test_backfitting_on_carbon(cf_sample):
    res, other = fit(cf_sample, check=True)
    assert res.method == "both-agree" and res.converged
    for got, want in zip(res.theta_hat, (1.3169, 2.4091, 2.6824)):
        assert got == pytest.approx(want, rel=0.01)
    assert abs(res.neg_loglik - 141.3320) < 0.01
    assert abs(res.loglik - other.loglik) < 1e-6


def test_eed_restriction_direct(bb_sample):
    res = fit_direct(bb_sample, family="eed")
    assert res.theta_hat.beta == 1.0 and res.converged
    assert abs(res.theta_hat.alpha - 5.2707) < 0.01 and abs(res.theta_hat.sigma - 31.0035) < 0.05
    assert abs(res.neg_loglik - 112.9762) < 0.01


@pytest.mark.parametrize("seed", range(4))
def test_methods_agree_on_simulated_data(seed):
    rng = np.random.default_rng(300 + seed)
    theta = (rng.uniform(0.5, 4), rng.uniform(0.5, 3), rng.uniform(0.5, 5))
    x = ewd_sample(theta, 150, seed=rng)
    sample = apply_type2_censoring(x, rate=0.2)
    a = fit_backfitting(sample)
    b = fit_direct(sample)
    assert abs(a.loglik - b.loglik) < 1e-5
    if a.converged and b.converged:
        assert np.allclose(a.theta_hat, b.theta_hat, rtol=1e-3)


def test_weibull_data_recovers_shape():
    n = 10_000
    x = ewd_sample((1.0, 1.7, 2.0), n, seed=99)
    res = fit_backfitting(CensoredSample(np.sort(x)))
    cov = fisher_matrix((1.0, 1.7, 2.0), 1.0).covariance / n
    se = np.sqrt(np.diag(cov))
    assert abs(res.theta_hat.alpha - 1.0) < 3 * se[0]
    assert abs(res.theta_hat.beta - 1.7) < 3 * se[1]


@pytest.mark.parametrize("c", [0.01, 7.5, 1e3])
def test_rescaling_data_rescales_sigma(bb_sample, c):
    base = fit_backfitting(bb_sample)
    scaled = fit_backfitting(CensoredSample(bb_sample.observed * c, bb_sample.n_total))
    assert scaled.theta_hat.alpha == pytest.approx(base.theta_hat.alpha, rel=1e-5)
    assert scaled.theta_hat.beta == pytest.approx(base.theta_hat.beta, rel=1e-5)
    assert scaled.theta_hat.sigma == pytest.approx(c * base.theta_hat.sigma, rel=1e-5)
    shift = bb_sample.r * math.log(c)
    assert scaled.loglik == pytest.approx(base.loglik - shift, abs=1e-6)


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.floats(0.1, 5), st.integers(1, 40))
def test_order_statistics_commute_with_power(seed, beta, r):
    x = np.random.default_rng(seed).weibull(1.5, 40) * 3
    censored_then_power = apply_type2_censoring(x, r=r).power(beta).observed
    power_then_censored = apply_type2_censoring(x**beta, r=r).observed
    assert np.array_equal(np.argsort(x, kind="stable")[:r], np.argsort(x**beta, kind="stable")[:r])
    assert np.allclose(censored_then_power, power_then_censored, rtol=1e-15)


def test_bracket_bound_is_reported(carbon):
    sample = apply_type2_censoring(carbon.values, rate=0.2)
    res = fit_backfitting(sample)
    assert not res.converged and res.status == "beta-at-bracket-bound"
    assert res.theta_hat.beta == pytest.approx(20.0)
    # the surface is still rising toward the edge
    assert res.loglik > profile_loglik(12.4404, sample).value


def test_result_dict(bb_sample):
    res, _ = fit(bb_sample, family="eed")
    d = res.to_dict(include_trace=True)
    assert d["family"] == "eed" and d["theta"]["beta"] == 1.0
    assert d["neg_loglik_kernel"] == -d["loglik_kernel"]
    assert d["loglik_full"] - d["loglik_kernel"] == pytest.approx(math.lgamma(24))
    assert d["r"] == d["n_total"] == 23 and isinstance(d["inner_trace"], list)
    assert log_likelihood_kernel(bb_sample, res.theta_hat) == d["loglik_kernel"]


def test_fit_rejects_unknown_options(bb_sample):
    with pytest.raises(InvalidParameterError):
        fit(bb_sample, method="newton")
    with pytest.raises(InvalidParameterError):
        fit_backfitting(bb_sample, family="weibull")
