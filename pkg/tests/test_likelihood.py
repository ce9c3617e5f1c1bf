import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import expweibull.likelihood as lik
from expweibull.distributions import ewd_sample
from expweibull.exceptions import DataError, IllConditionedWarning
from expweibull.likelihood import (
    CensoredSample,
    log_likelihood,
    log_likelihood_kernel,
    log_permutation_constant,
    numerical_hessian,
    score,
)
from expweibull.mle import fit
from oracles import mp_loglik, mp_score


def _instance(seed, n=30):
    rng = np.random.default_rng(seed)
    theta = (rng.uniform(0.3, 5), rng.uniform(0.3, 4), rng.uniform(0.2, 20))
    x = np.sort(ewd_sample(theta, n, seed=rng))
    r = int(rng.integers(3, n + 1))
    return CensoredSample(x[:r], n), theta


def test_sample_validation():
    with pytest.raises(DataError):
        CensoredSample([])
    with pytest.raises(DataError):
        CensoredSample([1.0, -2.0])
    with pytest.raises(DataError):
        CensoredSample([2.0, 1.0])
    with pytest.raises(DataError):
        CensoredSample([1.0, 2.0], n_total=1)
    s = CensoredSample([1.0, 2.0, 3.0], 5)
    assert (s.r, s.n_censored, s.proportion, s.last) == (3, 2, 0.6, 3.0)
    assert s == CensoredSample([1.0, 2.0, 3.0], 5) and hash(s) == hash(CensoredSample([1, 2, 3], 5))


def test_exponential_complete_data():
    x = np.array([0.3, 0.9, 1.4, 2.2, 5.0])
    sigma = 2.0
    expected = np.sum(-x / sigma - math.log(sigma)) + math.lgamma(6)
    assert log_likelihood(CensoredSample(x), (1, 1, sigma)) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("seed", range(8))
def test_matches_high_precision_brute_force(seed):
    sample, theta = _instance(seed)
    ref = mp_loglik(sample.observed, sample.n_total, *theta, include_constant=True)
    assert log_likelihood(sample, theta) == pytest.approx(float(ref), rel=1e-12, abs=1e-10)


def test_underflow_returns_minus_inf():
    # (x/sigma)**beta overflows, so the density cannot be represented even in logs
    assert log_likelihood(CensoredSample([1e200], 1), (2.0, 5.0, 1e-100)) == -math.inf


def test_permutation_constant():
    sample, theta = _instance(3)
    shift = log_likelihood(sample, theta) - log_likelihood_kernel(sample, theta)
    assert shift == pytest.approx(log_permutation_constant(sample.n_total, sample.r), rel=1e-13)
    assert log_permutation_constant(5, 5) == pytest.approx(math.log(120))
    assert log_permutation_constant(10, 0) == 0.0


def test_constant_does_not_move_the_maximum():
    sample, theta = _instance(11, n=60)
    grid = [(a, theta[1], theta[2]) for a in np.linspace(0.5 * theta[0], 1.5 * theta[0], 41)]
    with_c = [log_likelihood(sample, g) for g in grid]
    without = [log_likelihood_kernel(sample, g) for g in grid]
    assert int(np.argmax(with_c)) == int(np.argmax(without))


@pytest.mark.parametrize("seed", range(100))
def test_score_matches_finite_differences(seed):
    sample, theta = _instance(1000 + seed)
    got = score(sample, theta)
    ref = mp_score(sample.observed, sample.n_total, theta)
    scale = np.abs(ref) + 1e-8 * np.abs(np.asarray(theta)) ** -1 * sample.r
    assert np.all(np.abs(got - ref) <= 1e-6 * scale)


def test_exponential_sigma_score_and_curvature():
    rng = np.random.default_rng(5)
    x = np.sort(rng.exponential(3.0, 40))
    sample = CensoredSample(x)
    sigma = 2.5
    n, total = x.size, x.sum()
    assert score(sample, (1, 1, sigma))[2] == pytest.approx((-n + total / sigma) / sigma, rel=1e-12)
    H = numerical_hessian(sample, (1, 1, sigma))
    assert H[2, 2] == pytest.approx(n / sigma**2 - 2 * total / sigma**3, rel=1e-7)


def test_score_vanishes_at_fit(ballbearings):
    sample = CensoredSample(np.sort(ballbearings.values))
    res, _ = fit(sample)
    assert np.all(np.abs(score(sample, res.theta_hat)) < 1e-4)


def test_hessian_symmetric_and_taylor():
    sample, _ = _instance(21, n=80)
    res, _ = fit(sample)
    theta = np.asarray(res.theta_hat)
    H = numerical_hessian(sample, theta)
    assert np.array_equal(H, H.T)
    assert np.all(np.linalg.eigvalsh(H) < 0)
    base = log_likelihood(sample, theta)
    g = score(sample, theta)
    direction = np.array([0.6, -0.3, 0.74]) * theta
    errs = []
    for t in [1e-2, 5e-3, 2.5e-3]:
        d = t * direction
        pred = base + g @ d + 0.5 * d @ H @ d
        errs.append(abs(log_likelihood(sample, theta + d) - pred))
    # a third-order remainder drops about eightfold per halving
    assert errs[1] < errs[0] / 5 and errs[2] < errs[1] / 5


def test_hessian_warns_on_asymmetry(monkeypatch):
    sample, theta = _instance(2)
    skew = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])

    def fake_score(_sample, th):
        return skew @ np.asarray(th)

    monkeypatch.setattr(lik, "score", fake_score)
    with pytest.warns(IllConditionedWarning):
        H = numerical_hessian(sample, theta)
    assert np.array_equal(H, H.T)


@given(st.integers(0, 10_000), st.integers(1, 29))
def test_truncation_matches_recomputation(seed, r_small):
    sample, theta = _instance(seed)
    r_small = min(r_small, sample.r)
    short = sample.truncate(r_small)
    fresh = CensoredSample(sample.observed[:r_small].copy(), sample.n_total)
    assert log_likelihood(short, theta) == log_likelihood(fresh, theta)
    ref = mp_loglik(sample.observed[:r_small], sample.n_total, *theta, include_constant=True)
    assert log_likelihood(short, theta) == pytest.approx(float(ref), rel=1e-11, abs=1e-9)


@given(st.integers(0, 10_000))
def test_power_transform_jacobian(seed):
    sample, (alpha, beta, sigma) = _instance(seed)
    ewd = log_likelihood(sample, (alpha, beta, sigma))
    eed = log_likelihood(sample.power(beta), (alpha, 1.0, sigma**beta))
    jac = math.fsum(math.log(beta) + (beta - 1) * math.log(v) for v in sample.observed)
    assert ewd - eed == pytest.approx(jac, rel=1e-10, abs=1e-9)
