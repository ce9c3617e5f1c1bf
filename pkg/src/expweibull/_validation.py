"""Input validation helpers shared by the functional API and the estimator."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import DataError, DomainError, InvalidParameterError


class Theta(NamedTuple):
    """Parameters of the exponentiated-Weibull family: two shapes and a scale."""

    alpha: float
    beta: float
    sigma: float


class EedTheta(NamedTuple):
    """Exponentiated-exponential parameters (shape ``alpha``, scale ``lam``)."""

    alpha: float
    lam: float


def check_positive(name: str, value) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"{name} must be a real number, got {value!r}") from None
    if not (math.isfinite(value) and value > 0.0):
        raise InvalidParameterError(f"{name} must be finite and > 0, got {value!r}")
    return value


def check_theta(theta) -> Theta:
    """Coerce a 3-sequence to :class:`Theta`, raising on nonpositive entries."""
    if isinstance(theta, Theta):
        alpha, beta, sigma = theta
    else:
        try:
            alpha, beta, sigma = theta
        except (TypeError, ValueError):
            raise InvalidParameterError(
                f"theta must be a triple (alpha, beta, sigma), got {theta!r}"
            ) from None
    return Theta(
        check_positive("alpha", alpha),
        check_positive("beta", beta),
        check_positive("sigma", sigma),
    )


def check_probability(u, *, open_left=True, open_right=True, name="u") -> np.ndarray:
    u = np.asarray(u, dtype=float)
    lo_bad = u <= 0 if open_left else u < 0
    hi_bad = u >= 1 if open_right else u > 1
    if np.any(lo_bad | hi_bad | np.isnan(u)):
        left = "(" if open_left else "["
        right = ")" if open_right else "]"
        raise DomainError(f"{name} must lie in {left}0, 1{right}")
    return u


def check_lifetimes(X, *, name="X") -> np.ndarray:
    """Return a 1-d float array of strictly positive lifetimes.

    Accepts a flat sequence or a single-column 2-d array, the latter being
    the shape scikit-learn pipelines hand to ``fit``.
    """
    try:
        arr = check_array(
            X, ensure_2d=False, dtype=np.float64, ensure_all_finite=True, input_name=name
        )
    except ValueError as exc:
        raise DataError(str(exc)) from None
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise DataError(f"{name} must have a single column, got shape {arr.shape}")
        arr = arr[:, 0]
    if arr.size == 0:
        raise DataError(f"{name} is empty")
    bad = np.flatnonzero(arr <= 0)
    if bad.size:
        raise DataError(f"{name} has nonpositive lifetime at index {int(bad[0])}: {arr[bad[0]]!r}")
    return arr
