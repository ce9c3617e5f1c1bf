"""Limiting Fisher information under type II censoring, Wald intervals and the LRT.

Per observation, the information at censoring proportion ``p`` is the
integral of the outer product of the log-hazard gradient against ``f`` up to
the ``p``-quantile. Substituting ``u = F(x)`` turns every entry into an
integral over ``(0, p)`` of a function of ``u`` and ``alpha`` alone; ``beta``
and ``sigma`` only enter through constant prefactors:

    I11 = int A^2            I12 = (1/beta) int A B
    I22 = int B^2 / beta^2   I13 = -(beta/sigma) int A psi
    I33 = (beta/sigma)^2 int psi^2
    I23 = -(1/sigma) int B psi

with ``A = (1 + ln u / (1 - u)) / alpha``, ``z = u**(1/alpha)``,
``B = 1 + ln(-ln(1 - z)) psi(z)`` and ``psi`` as in
:func:`expweibull.distributions.psi`. Working in ``u`` rather than ``z``
removes the ``z**(alpha-1)`` endpoint singularity, which for small ``alpha``
concentrates almost all the mass at astronomically small ``z``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import integrate, linalg, stats

from ._validation import Theta, check_positive, check_theta
from .distributions import _ratio_terms, _terms
from .exceptions import (
    DomainError,
    InvalidParameterError,
    NonConvergenceError,
    NumericalOverflowError,
    QuadratureWarning,
    SingularInformationError,
)
from .mle import fit_backfitting

QUAD_EPSABS = 1e-9
QUAD_EPSREL = 1e-9
# QUADPACK's 21-point Kronrod rule: 10^5 evaluations is about this many panels
QUAD_LIMIT = 100_000 // 21
P_CAP = 1.0 - 1e-10
COND_LIMIT = 1e12

AXES = ("alpha", "beta", "sigma")
_PAIRS = {(0, 0): "AA", (1, 1): "BB", (2, 2): "PP", (0, 1): "AB", (0, 2): "AP", (1, 2): "BP"}


def log_hazard_partials(x, theta) -> np.ndarray:
    """Gradient of ``ln h(x)`` in ``(alpha, beta, sigma)``; shape ``x.shape + (3,)``.

    ``(1/alpha) [1 + ln F / (1 - F)]``, ``(1/beta) [1 + ln t * psi_x]`` and
    ``-(beta/sigma) psi_x`` with ``t = (x/sigma)**beta`` and
    ``psi_x = 1 - t + (alpha-1) x f / (alpha beta F) + x f / (beta (1 - F))``.
    """
    theta = check_theta(theta)
    alpha, beta, sigma = theta
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any(x <= 0):
        raise DomainError("lifetimes must be > 0")
    terms = _terms(x, theta)
    log_cdf, log_sf = terms["log_cdf"], terms["log_sf"]
    if not (np.all(np.isfinite(log_cdf)) and np.all(np.isfinite(log_sf))):
        raise NumericalOverflowError("F(x) is 0 or 1 at machine precision")
    over_cdf, over_sf = _ratio_terms(terms, theta)
    psi_x = 1.0 - terms["t"] + (alpha - 1.0) * over_cdf + over_sf
    with np.errstate(invalid="ignore", over="ignore"):
        # ln F / (1 - F) via expm1 so it tends to -1 as F -> 1
        lnF_over_sf = np.where(log_cdf < 0, -log_cdf / np.expm1(log_cdf), -1.0)
    d_alpha = (1.0 + lnF_over_sf) / alpha
    d_beta = (1.0 + terms["log_t"] * psi_x) / beta
    d_sigma = -(beta / sigma) * psi_x
    return np.stack([d_alpha, d_beta, d_sigma], axis=-1)


def _u_integrands(u, alpha):
    """``A``, ``B`` and ``psi`` as functions of ``u = F`` (vectorised)."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        log_u = np.log(u)
        one_minus_u = 1.0 - u
        a_term = np.where(one_minus_u > 0, (1.0 + log_u / one_minus_u) / alpha, 0.0)
        log_z = log_u / alpha
        z = np.exp(log_z)
        w = -np.expm1(log_z)  # 1 - z
        small = log_z < -0.7
        ratio = np.where(z > 1e-12, -np.log1p(-z) / z, 1.0 + 0.5 * z)  # t / z for small z
        t = np.where(small, z * ratio, -np.log(w))
        log_t = np.where(small, log_z + np.log(ratio), np.log(t))
        numer = one_minus_u - alpha * w
        # psi = 1 + ln(1 - z) N / (z (1 - u)) and ln(1 - z) = -t
        t_over_z = np.where(small, ratio, t / z)
        psi_v = np.where(one_minus_u > 0, 1.0 - t_over_z * numer / one_minus_u, 1.0)
    b_term = 1.0 + log_t * psi_v
    return a_term, b_term, psi_v


def _base_integral(kind: str, alpha: float, p: float):
    def integrand(u):
        a, b, s = _u_integrands(u, alpha)
        vals = {"A": a, "B": b, "P": s}
        return float(vals[kind[0]] * vals[kind[1]])

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        value, err = integrate.quad(
            integrand, 0.0, p, epsabs=0.1 * QUAD_EPSABS, epsrel=0.1 * QUAD_EPSREL, limit=QUAD_LIMIT
        )
    problems = [str(w.message).splitlines()[0] for w in caught if issubclass(w.category, integrate.IntegrationWarning)]
    return value, err, problems


class BaseIntegrals(NamedTuple):
    values: dict
    errors: dict
    flags: list


def fisher_integrals(alpha, p) -> BaseIntegrals:
    """The six ``u``-space integrals ``int_0^p`` of AA, BB, PP, AB, AP and BP."""
    alpha = check_positive("alpha", alpha)
    p, flags = _check_p(p)
    values, errors = {}, {}
    for key in _PAIRS.values():
        values[key], errors[key], problems = _base_integral(key, alpha, p)
        flags.extend(f"{key}: {msg}" for msg in problems)
    return BaseIntegrals(values, errors, flags)


def _check_p(p):
    p = float(p)
    if not (0.0 < p <= 1.0) or math.isnan(p):
        raise InvalidParameterError(f"censoring proportion must lie in (0, 1], got {p!r}")
    return p, []


def _prefactor(i: int, j: int, theta: Theta) -> float:
    _, beta, sigma = theta
    return {
        (0, 0): 1.0,
        (1, 1): 1.0 / beta**2,
        (2, 2): (beta / sigma) ** 2,
        (0, 1): 1.0 / beta,
        (0, 2): -beta / sigma,
        (1, 2): -1.0 / sigma,
    }[(i, j)]


def _axis(i) -> int:
    if isinstance(i, str):
        if i not in AXES:
            raise InvalidParameterError(f"axis must be one of {AXES}, got {i!r}")
        return AXES.index(i)
    if i not in (0, 1, 2):
        raise InvalidParameterError(f"axis index must be 0, 1 or 2, got {i!r}")
    return int(i)


def fisher_entry(i, j, theta, p):
    """One entry of the information matrix and its quadrature error estimate.

    Axes may be given as 0/1/2 or by name. Returns ``(value, abserr)``; a
    :class:`QuadratureWarning` is issued when QUADPACK reports trouble or the
    error estimate exceeds ``1e-9`` (absolute and relative).
    """
    theta = check_theta(theta)
    i, j = sorted((_axis(i), _axis(j)))
    p, _ = _check_p(p)
    value, err, problems = _base_integral(_PAIRS[(i, j)], theta.alpha, p)
    scale = _prefactor(i, j, theta)
    value, err = scale * value, abs(scale) * err
    if problems or err > max(QUAD_EPSABS, QUAD_EPSREL * abs(value)):
        warnings.warn(
            f"I[{AXES[i]},{AXES[j]}] quadrature error {err:.2e}: {'; '.join(problems) or 'tolerance not met'}",
            QuadratureWarning,
            stacklevel=2,
        )
    return value, err


@dataclass
class FisherMatrix:
    """Per-observation information at censoring proportion ``p``.

    ``covariance`` is ``None`` when the matrix is not positive definite or
    its condition number (after scaling to unit diagonal) exceeds 1e12.
    """

    p: float
    theta: Theta
    entries: np.ndarray
    covariance: Optional[np.ndarray]
    quadrature_error: np.ndarray
    condition_number: float
    flags: list = field(default_factory=list)

    def standard_errors(self, n: int) -> np.ndarray:
        if self.covariance is None:
            raise SingularInformationError("covariance withheld: " + "; ".join(self.flags))
        return np.sqrt(np.diag(self.covariance) / n)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "theta": {k: float(v) for k, v in self.theta._asdict().items()},
            "entries": self.entries.tolist(),
            "covariance": None if self.covariance is None else self.covariance.tolist(),
            "quadrature_error": self.quadrature_error.tolist(),
            "condition_number": float(self.condition_number),
            "flags": list(self.flags),
        }


def _spd_inverse(matrix: np.ndarray):
    """Inverse through Cholesky of the unit-diagonal rescaling, plus its condition number."""
    d = np.sqrt(np.diag(matrix))
    if not np.all(d > 0):
        return None, math.inf, "nonpositive diagonal"
    scaled = matrix / np.outer(d, d)
    try:
        factor = linalg.cho_factor(scaled, lower=True)
    except linalg.LinAlgError:
        return None, math.inf, "not positive definite"
    eig = np.linalg.eigvalsh(scaled)
    cond = float(eig[-1] / eig[0]) if eig[0] > 0 else math.inf
    if cond > COND_LIMIT:
        return None, cond, f"condition number {cond:.3g} exceeds {COND_LIMIT:.0e}"
    inv_scaled = linalg.cho_solve(factor, np.eye(matrix.shape[0]))
    inv = inv_scaled / np.outer(d, d)
    return 0.5 * (inv + inv.T), cond, None


def fisher_matrix(theta, p) -> FisherMatrix:
    """Assemble the 3x3 information matrix (order alpha, beta, sigma) and its inverse.

    ``p = 1`` (complete data) is attempted as is; if the quadrature does not
    converge there, ``p`` is reduced to ``1 - 1e-10`` and a flag recorded.
    """
    theta = check_theta(theta)
    p, flags = _check_p(p)
    base = fisher_integrals(theta.alpha, p)
    if p == 1.0 and base.flags:
        flags.append(f"p capped at {P_CAP!r}: quadrature at p=1 reported {base.flags}")
        p = P_CAP
        base = fisher_integrals(theta.alpha, p)
    flags.extend(base.flags)
    entries = np.empty((3, 3))
    errors = np.empty((3, 3))
    for (i, j), key in _PAIRS.items():
        scale = _prefactor(i, j, theta)
        entries[i, j] = entries[j, i] = scale * base.values[key]
        errors[i, j] = errors[j, i] = abs(scale) * base.errors[key]
    if np.any(errors > np.maximum(QUAD_EPSABS, QUAD_EPSREL * np.abs(entries))):
        flags.append("quadrature error estimate above 1e-9")
    cov, cond, problem = _spd_inverse(entries)
    if problem:
        flags.append(problem)
    return FisherMatrix(p, theta, entries, cov, errors, cond, flags)


def asymptotic_ci(fit, sample, level: float = 0.95) -> np.ndarray:
    """Wald intervals from the information matrix evaluated at the estimate.

    Returns a ``(3, 2)`` array of ``(lower, upper)`` rows in the order
    alpha, beta, sigma, each ``theta_i +- z sqrt(cov_ii / n)`` with ``p = r/n``
    and lower ends truncated at 0. For an EED fit the ``(alpha, sigma)`` block
    is inverted at ``beta = 1`` and the beta row is the point ``(1, 1)``.
    """
    level = float(level)
    if not 0.0 <= level < 1.0:
        raise InvalidParameterError(f"level must lie in [0, 1), got {level!r}")
    if not fit.converged:
        raise NonConvergenceError(f"fit did not converge ({fit.status}); refusing to build intervals")
    n = sample.n_total
    fm = fisher_matrix(fit.theta_hat, sample.r / n)
    theta = np.asarray(fit.theta_hat, dtype=float)
    if getattr(fit, "family", "ewd") == "eed":
        idx = [0, 2]
        cov, _, problem = _spd_inverse(fm.entries[np.ix_(idx, idx)])
        if problem:
            raise SingularInformationError(problem)
        var = np.array([cov[0, 0], 0.0, cov[1, 1]])
    else:
        if fm.covariance is None:
            raise SingularInformationError("; ".join(fm.flags))
        var = np.diag(fm.covariance)
    half = stats.norm.ppf(0.5 + level / 2.0) * np.sqrt(var / n)
    return np.column_stack([np.maximum(theta - half, 0.0), theta + half])


@dataclass
class LikelihoodRatioTest:
    statistic: float
    p_value: float
    ewd: object
    eed: object

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "p_value": self.p_value, "df": 1}


def lrt_beta_equals_one(sample, config=None, *, tol: float = 1e-6) -> LikelihoodRatioTest:
    """Likelihood-ratio test of the exponentiated-exponential sub-model (beta = 1).

    A statistic below ``-tol`` means the three-parameter fit landed below the
    nested two-parameter one, i.e. an optimisation failure.
    """
    ewd = fit_backfitting(sample, config, family="ewd")
    eed = fit_backfitting(sample, config, family="eed")
    stat = 2.0 * (ewd.loglik - eed.loglik)
    if stat < -tol:
        raise NonConvergenceError(f"negative LRT statistic {stat:.3g}: the EWD fit is not a maximum")
    stat = max(stat, 0.0)
    return LikelihoodRatioTest(stat, float(stats.chi2.sf(stat, df=1)), ewd, eed)
