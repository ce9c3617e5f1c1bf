"""Type II censored log-likelihood, analytic score and numerical Hessian.

With the first ``r`` of ``n`` order statistics observed,

    ln L = ln(n!/(n-r)!) + sum_i ln f(x_i) + (n - r) ln(1 - F(x_r)).

The combinatorial constant never moves the argmax; ``include_constant=False``
gives the kernel that published fit tables usually quote.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ._validation import check_theta
from .distributions import _terms, score_components
from .exceptions import DataError, IllConditionedWarning, NumericalOverflowError


@dataclass(frozen=True)
class CensoredSample:
    """The ``r`` smallest lifetimes out of ``n_total`` units on test."""

    observed: np.ndarray
    n_total: int

    def __init__(self, observed, n_total=None):
        obs = np.array(observed, dtype=float).ravel()
        if obs.size == 0:
            raise DataError("a censored sample needs at least one observed failure")
        if not np.all(np.isfinite(obs)) or np.any(obs <= 0):
            raise DataError("observed lifetimes must be finite and > 0")
        if np.any(np.diff(obs) < 0):
            raise DataError("observed order statistics must be sorted nondecreasing")
        n_total = obs.size if n_total is None else n_total
        if isinstance(n_total, bool) or int(n_total) != n_total or n_total < obs.size:
            raise DataError(f"n_total must be an integer >= r = {obs.size}, got {n_total!r}")
        obs.setflags(write=False)
        object.__setattr__(self, "observed", obs)
        object.__setattr__(self, "n_total", int(n_total))

    @property
    def r(self) -> int:
        return int(self.observed.size)

    @property
    def n_censored(self) -> int:
        return self.n_total - self.r

    @property
    def proportion(self) -> float:
        return self.r / self.n_total

    @property
    def last(self) -> float:
        return float(self.observed[-1])

    def power(self, beta: float) -> "CensoredSample":
        """The sample of ``x**beta``; order statistics map onto order statistics."""
        return CensoredSample(self.observed**beta, self.n_total)

    def truncate(self, r: int) -> "CensoredSample":
        return CensoredSample(self.observed[:r], self.n_total)

    def __eq__(self, other):
        if not isinstance(other, CensoredSample):
            return NotImplemented
        return self.n_total == other.n_total and np.array_equal(self.observed, other.observed)

    def __hash__(self):
        return hash((self.n_total, self.observed.tobytes()))


def log_permutation_constant(n: int, r: int) -> float:
    """``ln(n!/(n-r)!)``."""
    return float(gammaln(n + 1) - gammaln(n - r + 1))


def log_likelihood(sample: CensoredSample, theta, *, include_constant: bool = True) -> float:
    """Censored log-likelihood, or ``-inf`` when a term is not representable.

    Terms are accumulated with :func:`math.fsum` so the result does not depend
    on summation order.
    """
    theta = check_theta(theta)
    terms = _terms(sample.observed, theta)
    log_pdf = terms["log_pdf"]
    if not np.all(np.isfinite(log_pdf)):
        return -math.inf
    parts = log_pdf.tolist()
    if sample.n_censored:
        tail = float(terms["log_sf"][-1])
        if not math.isfinite(tail):
            return -math.inf
        parts.append(sample.n_censored * tail)
    if include_constant:
        parts.append(log_permutation_constant(sample.n_total, sample.r))
    value = math.fsum(parts)
    return value if math.isfinite(value) else -math.inf


def log_likelihood_kernel(sample: CensoredSample, theta) -> float:
    return log_likelihood(sample, theta, include_constant=False)


def score(sample: CensoredSample, theta) -> np.ndarray:
    """Gradient of :func:`log_likelihood` in ``(alpha, beta, sigma)``.

    ``sum_i f'(x_i)/f(x_i) - (n - r) F'(x_r) / (1 - F(x_r))``
    """
    theta = check_theta(theta)
    comps = score_components(sample.observed, theta)
    grad = np.array(
        [
            math.fsum(np.atleast_1d(comps.dlogf_dalpha)),
            math.fsum(np.atleast_1d(comps.dlogf_dbeta)),
            math.fsum(np.atleast_1d(comps.dlogf_dsigma)),
        ]
    )
    m = sample.n_censored
    if m:
        last = np.array(
            [
                np.atleast_1d(comps.dF_dalpha_over_sf)[-1],
                np.atleast_1d(comps.dF_dbeta_over_sf)[-1],
                np.atleast_1d(comps.dF_dsigma_over_sf)[-1],
            ]
        )
        grad = grad - m * last
    if not np.all(np.isfinite(grad)):
        raise NumericalOverflowError("score is not finite at this parameter")
    return grad


def hessian_steps(theta) -> np.ndarray:
    return np.maximum(1e-5 * np.abs(np.asarray(theta, dtype=float)), 1e-8)


def numerical_hessian(sample: CensoredSample, theta, *, steps=None) -> np.ndarray:
    """Central-difference Jacobian of :func:`score`, symmetrised.

    Steps default to ``max(1e-5 |theta_i|, 1e-8)`` per coordinate. An
    :class:`IllConditionedWarning` is issued when the raw asymmetry exceeds
    1e-3 of the matrix norm.
    """
    theta = np.asarray(check_theta(theta), dtype=float)
    h = hessian_steps(theta) if steps is None else np.asarray(steps, dtype=float)
    H = np.empty((3, 3))
    for i in range(3):
        up = theta.copy()
        dn = theta.copy()
        up[i] += h[i]
        dn[i] -= h[i]
        H[:, i] = (score(sample, up) - score(sample, dn)) / (2.0 * h[i])
    norm = np.linalg.norm(H)
    asym = np.linalg.norm(H - H.T)
    if norm > 0 and asym > 1e-3 * norm:
        warnings.warn(
            f"Hessian asymmetry {asym / norm:.2e} of its norm; the surface may be ill-conditioned",
            IllConditionedWarning,
            stacklevel=2,
        )
    return 0.5 * (H + H.T)
