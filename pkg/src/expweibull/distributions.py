"""Exponentiated-Weibull (EWD) and exponentiated-exponential (EED) families.

All functions are vectorised over ``x`` and evaluate tail quantities in log
space, so that neither ``F`` nor ``1 - F`` is ever formed by subtraction when
``(x/sigma)**beta`` is very small or very large.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ._validation import Theta, check_positive, check_probability, check_theta
from .exceptions import DomainError, InvalidParameterError, NumericalOverflowError

__all__ = [
    "Theta",
    "ScoreComponents",
    "ewd_cdf",
    "ewd_logcdf",
    "ewd_logsf",
    "ewd_pdf",
    "ewd_logpdf",
    "ewd_quantile",
    "ewd_hazard",
    "ewd_sample",
    "eed_cdf",
    "score_components",
    "psi",
]

# beyond this (x/sigma)**beta the survival tail is ln(alpha) - t to double precision
_LARGE_T = 40.0


def log1mexp(a):
    """``log(1 - exp(a))`` for ``a <= 0`` without cancellation."""
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(a > -np.log(2.0), np.log(-np.expm1(a)), np.log1p(-np.exp(a)))


def _terms(x, theta: Theta) -> dict:
    """Log-space building blocks shared by the density, tail and score code.

    ``t = (x/sigma)**beta`` and ``G = 1 - exp(-t)`` so that ``F = G**alpha``.
    """
    alpha, beta, sigma = theta
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", under="ignore", invalid="ignore"):
        log_xs = np.log(x) - np.log(sigma)
        log_t = beta * log_xs
        t = np.exp(log_t)
        small = t < 1e-10
        log_g = np.where(small, log_t - 0.5 * t, log1mexp(-t))
        log_cdf = alpha * log_g
        log_sf = np.where(t > _LARGE_T, np.log(alpha) - t, log1mexp(log_cdf))
        log_pdf = np.log(alpha * beta / sigma) + (beta - 1.0) * log_xs - t + (alpha - 1.0) * log_g
    return {
        "log_xs": log_xs,
        "log_t": log_t,
        "t": t,
        "log_g": log_g,
        "log_cdf": log_cdf,
        "log_sf": log_sf,
        "log_pdf": log_pdf,
    }


def _as_nonnegative(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise DomainError("lifetimes must be >= 0")
    return x


def _as_positive(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any(x <= 0):
        raise DomainError("lifetimes must be > 0")
    return x


def _scalar_or_array(a):
    return a.item() if np.ndim(a) == 0 else a


def ewd_logcdf(x, theta):
    theta = check_theta(theta)
    x = _as_nonnegative(x)
    return _scalar_or_array(_terms(x, theta)["log_cdf"])


def ewd_cdf(x, theta):
    """``[1 - exp(-(x/sigma)**beta)]**alpha``; zero at ``x = 0``."""
    theta = check_theta(theta)
    x = _as_nonnegative(x)
    with np.errstate(under="ignore"):
        out = np.exp(_terms(x, theta)["log_cdf"])
    return _scalar_or_array(out)


def ewd_logsf(x, theta):
    """Log survival ``log(1 - F(x))`` computed without forming ``1 - F``."""
    theta = check_theta(theta)
    x = _as_nonnegative(x)
    return _scalar_or_array(_terms(x, theta)["log_sf"])


def ewd_logpdf(x, theta):
    theta = check_theta(theta)
    x = _as_positive(x)
    return _scalar_or_array(_terms(x, theta)["log_pdf"])


def _pdf_at_zero(theta: Theta, extended: bool) -> float:
    # near 0, f(x) ~ (alpha*beta/sigma) * (x/sigma)**(alpha*beta - 1)
    alpha, beta, sigma = theta
    ab = alpha * beta
    if abs(ab - 1.0) < 1e-12:
        return 1.0 / sigma
    if ab > 1.0:
        return 0.0
    if extended:
        return np.inf
    raise DomainError(
        "density diverges at x = 0 when alpha*beta < 1; pass extended=True for the +inf limit"
    )


def ewd_pdf(x, theta, *, extended: bool = False):
    """Density ``dF/dx``.

    ``(alpha*beta/sigma) (x/sigma)**(beta-1) exp(-(x/sigma)**beta) G**(alpha-1)``
    with ``G = 1 - exp(-(x/sigma)**beta)``.

    At ``x = 0`` the limiting value is returned: 0 when ``alpha*beta > 1`` and
    ``1/sigma`` on the ``alpha*beta = 1`` curve. For ``alpha*beta < 1`` the
    density diverges and a :class:`DomainError` is raised unless ``extended``.
    """
    theta = check_theta(theta)
    x = _as_nonnegative(x)
    zero = x == 0
    with np.errstate(under="ignore"):
        out = np.exp(_terms(np.where(zero, 1.0, x), theta)["log_pdf"])
    if np.any(zero):
        out = np.where(zero, _pdf_at_zero(theta, extended), out)
    return _scalar_or_array(out)


def ewd_quantile(u, theta):
    """Inverse CDF: ``sigma * (-log(1 - u**(1/alpha)))**(1/beta)``."""
    alpha, beta, sigma = check_theta(theta)
    u = check_probability(u)
    g = np.exp(np.log(u) / alpha)
    out = sigma * (-np.log1p(-g)) ** (1.0 / beta)
    return _scalar_or_array(out)


def ewd_hazard(x, theta):
    """Hazard ``f / (1 - F)``, formed as ``exp(log f - log(1 - F))``."""
    theta = check_theta(theta)
    x = _as_positive(x)
    terms = _terms(x, theta)
    with np.errstate(over="ignore", under="ignore"):
        out = np.exp(terms["log_pdf"] - terms["log_sf"])
    return _scalar_or_array(out)


def ewd_sample(theta, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` i.i.d. lifetimes by inverse-CDF transform of uniforms.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts.
    """
    theta = check_theta(theta)
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidParameterError(f"sample size must be a positive integer, got {n!r}")
    rng = np.random.default_rng(seed)
    u = rng.random(int(n))
    u = np.maximum(u, np.nextafter(0.0, 1.0))
    return np.asarray(ewd_quantile(u, theta), dtype=float)


def eed_cdf(y, alpha, lam):
    """Exponentiated-exponential CDF ``(1 - exp(-y/lam))**alpha``."""
    return ewd_cdf(y, (alpha, 1.0, lam))


class ScoreComponents(NamedTuple):
    """Per-observation log-derivatives of the density and of the CDF.

    ``dlogf_*`` are ``f'_k / f`` and ``dF_*_over_sf`` are ``F'_k / (1 - F)``
    for ``k`` in (alpha, beta, sigma); derivatives are exact partials.
    """

    dlogf_dalpha: np.ndarray
    dF_dalpha_over_sf: np.ndarray
    dlogf_dbeta: np.ndarray
    dF_dbeta_over_sf: np.ndarray
    dlogf_dsigma: np.ndarray
    dF_dsigma_over_sf: np.ndarray


def _ratio_terms(terms: dict, theta: Theta):
    """Return ``x f / (alpha beta F)`` and ``x f / (beta (1 - F))``."""
    alpha = theta.alpha
    t = terms["t"]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        over_cdf = np.where(t > 0, t / np.expm1(t), 1.0)
        over_sf = np.exp(
            np.log(alpha) + terms["log_t"] - t + (alpha - 1.0) * terms["log_g"] - terms["log_sf"]
        )
    return over_cdf, over_sf


def score_components(x, theta) -> ScoreComponents:
    """The six log-derivative pieces that make up the censored score.

    Raises :class:`NumericalOverflowError` where ``F`` rounds to 0 or 1.
    """
    theta = check_theta(theta)
    alpha, beta, sigma = theta
    x = _as_positive(x)
    terms = _terms(x, theta)
    log_cdf, log_sf, log_t, t = terms["log_cdf"], terms["log_sf"], terms["log_t"], terms["t"]
    if not (np.all(np.isfinite(log_cdf)) and np.all(np.isfinite(log_sf))):
        raise NumericalOverflowError("F(x) is 0 or 1 at machine precision")
    over_cdf, over_sf = _ratio_terms(terms, theta)
    bracket = 1.0 - t + (alpha - 1.0) * over_cdf
    # F ln F / (1 - F) = -F * lnF / expm1(lnF), which tends to -1 as F -> 1
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(log_cdf < 0, log_cdf / np.expm1(log_cdf), 1.0)
    F_lnF_over_sf = -np.exp(log_cdf) * ratio
    out = ScoreComponents(
        dlogf_dalpha=(1.0 + log_cdf) / alpha,
        dF_dalpha_over_sf=F_lnF_over_sf / alpha,
        dlogf_dbeta=(1.0 + log_t * bracket) / beta,
        dF_dbeta_over_sf=log_t * over_sf / beta,
        dlogf_dsigma=-(beta / sigma) * bracket,
        dF_dsigma_over_sf=-(beta / sigma) * over_sf,
    )
    return ScoreComponents(*(_scalar_or_array(np.asarray(c)) for c in out))


def _exm1mx(a):
    """``exp(a) - 1 - a`` accurate for small ``|a|``."""
    a = np.asarray(a, dtype=float)
    small = np.abs(a) < 1e-2
    series = np.zeros_like(a)
    term = a * a / 2.0
    for k in range(3, 12):
        series = series + term
        term = term * a / k
    with np.errstate(over="ignore"):
        return np.where(small, series, np.expm1(a) - a)


def _l1pmx(v):
    """``log1p(v) - v`` accurate for small ``|v|``."""
    v = np.asarray(v, dtype=float)
    small = np.abs(v) < 1e-2
    series = np.zeros_like(v)
    power = v * v
    for k in range(2, 14):
        series = series + (-1) ** (k + 1) * power / k
        power = power * v
    with np.errstate(divide="ignore"):
        return np.where(small, series, np.log1p(v) - v)


def _psi_numerator(z, alpha):
    """``1 - z**alpha - alpha*(1 - z)`` without cancellation near ``z = 1``."""
    w = 1.0 - z
    with np.errstate(divide="ignore"):
        lg = alpha * np.log1p(-w)
        near_one = np.abs(lg) < 1e-2
        # both terms through expm1 so that alpha = 1 cancels exactly
        direct = -np.expm1(alpha * np.log(z)) + alpha * np.expm1(np.log(z))
    stable = -_exm1mx(np.where(near_one, lg, 0.0)) - alpha * _l1pmx(np.where(near_one, -w, 0.0))
    return np.where(near_one, stable, direct)


def psi(z, alpha):
    """``1 + ln(1-z) [1 + ((1-z)/z)(1 - alpha/(1 - z**alpha))]`` on ``0 < z < 1``.

    The bracket is evaluated as ``(1 - z**a - a(1-z)) / (z (1 - z**a))`` which
    is identically zero at ``alpha = 1``.
    """
    alpha = check_positive("alpha", alpha)
    z = np.asarray(z, dtype=float)
    if np.any(np.isnan(z)) or np.any((z <= 0) | (z >= 1)):
        raise DomainError("psi requires 0 < z < 1")
    one_minus_za = -np.expm1(alpha * np.log(z))
    out = 1.0 + np.log1p(-z) * _psi_numerator(z, alpha) / (z * one_minus_za)
    return _scalar_or_array(out)

