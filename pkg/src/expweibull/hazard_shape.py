"""Hazard-shape classification for the exponentiated-Weibull family.

Substituting ``z = exp((x/sigma)**beta)`` maps the hazard derivative onto a
function ``s(z)`` with the same sign, so the shape of ``h`` (monotone,
unimodal, bathtub) is read off from the sign pattern of ``s`` on ``z > 1``.
The shape depends on ``(alpha, beta)`` only.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import check_positive, check_theta
from .distributions import _exm1mx, _l1pmx, ewd_hazard
from .exceptions import DomainError

BOUNDARY_TOL = 1e-12
DEFAULT_Z_MAX = 1e6
DEFAULT_N_POINTS = 4096

SHAPE_INCREASING = "monotone-increasing"
SHAPE_DECREASING = "monotone-decreasing"
SHAPE_UNIMODAL = "unimodal"
SHAPE_BATHTUB = "bathtub"
SHAPE_BOUNDARY = "boundary"
SHAPE_CONSTANT = "constant"


@dataclass(frozen=True)
class ShapeRegion:
    label: str
    shape: str
    boundary: bool = False
    nominal: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "shape": self.shape,
            "boundary": self.boundary,
            "nominal": self.nominal,
            "note": self.note,
        }


@dataclass
class SignScan:
    """Values of ``s`` on an increasing grid of ``z > 1`` and where the sign flips.

    ``z_minus_one`` is stored alongside ``z_grid`` because near ``z = 1`` the
    offset is below double-precision resolution of ``z`` itself.
    """

    alpha: float
    beta: float
    z_minus_one: np.ndarray
    s_values: np.ndarray
    signs: np.ndarray
    sign_changes: list = field(default_factory=list)

    @property
    def z_grid(self) -> np.ndarray:
        return 1.0 + self.z_minus_one

    @property
    def directions(self) -> list:
        return [d for _, d in self.sign_changes]

    @property
    def observed_shape(self) -> str:
        nonzero = self.signs[self.signs != 0]
        if nonzero.size == 0:
            return SHAPE_CONSTANT
        dirs = self.directions
        if not dirs:
            return SHAPE_INCREASING if nonzero[0] > 0 else SHAPE_DECREASING
        if dirs == ["+-"]:
            return SHAPE_UNIMODAL
        if dirs == ["-+"]:
            return SHAPE_BATHTUB
        return "oscillating"

    def to_rows(self):
        return [(float(1.0 + e), float(e), float(s)) for e, s in zip(self.z_minus_one, self.s_values)]


@dataclass(frozen=True)
class ShapeReport:
    region: ShapeRegion
    shape: str
    scan: Optional[SignScan]
    downgraded: bool = False

    def to_dict(self) -> dict:
        out = {"region": self.region.to_dict(), "shape": self.shape, "downgraded": self.downgraded}
        if self.scan is not None:
            out["scan"] = {
                "n_points": int(self.scan.z_minus_one.size),
                "z_min_offset": float(self.scan.z_minus_one[0]),
                "z_max": float(1.0 + self.scan.z_minus_one[-1]),
                "observed_shape": self.scan.observed_shape,
                "sign_changes": [
                    {"z_interval": [float(1 + lo), float(1 + hi)], "direction": d}
                    for (lo, hi), d in self.scan.sign_changes
                ],
            }
        return out


def _scaled_s(eps, alpha, beta):
    """``s(z) / z**alpha`` as a function of ``eps = z - 1``; same sign as ``s``."""
    eps = np.asarray(eps, dtype=float)
    u = 1.0 / (1.0 + eps)  # 1/z
    with np.errstate(divide="ignore", over="ignore", under="ignore", invalid="ignore"):
        log_ratio = np.log(eps) - np.log1p(eps)  # log(1 - 1/z)
        far = u < 1e-2
        lg = alpha * np.log1p(-np.where(far, u, 0.0))
        bracket1_far = _exm1mx(lg) + alpha * _l1pmx(-np.where(far, u, 0.0))
        bracket1_near = np.exp(alpha * log_ratio) - 1.0 + alpha * u
        bracket1 = np.where(far, bracket1_far, bracket1_near)
        if alpha == 1.0:
            # (1 - u)**alpha - 1 + alpha u vanishes identically; keep it exact
            bracket1 = np.zeros_like(eps)
        bracket2 = -np.expm1(alpha * log_ratio)
        out = beta * (1.0 + eps) * np.log1p(eps) * bracket1 + (beta - 1.0) * eps * bracket2
    return out


def s_of_z(z, alpha, beta):
    """Sign function whose sign equals that of ``h'(x)`` at ``x = sigma (ln z)**(1/beta)``.

    ``s(z) = beta z ln z [(z-1)**a + (a-z) z**(a-1)] + (beta-1)(z-1)[z**a - (z-1)**a]``

    Large ``z`` with large ``alpha`` overflows to ``+-inf``; the sign is kept.
    """
    alpha = check_positive("alpha", alpha)
    beta = check_positive("beta", beta)
    z = np.asarray(z, dtype=float)
    if np.any(np.isnan(z)) or np.any(z <= 1):
        raise DomainError("s(z) requires z > 1")
    out = s_of_eps(z - 1.0, alpha, beta)
    return out.item() if out.ndim == 0 else out


def s_of_eps(eps, alpha, beta):
    """``s(1 + eps)``, accurate for offsets too small to add to 1."""
    eps = np.asarray(eps, dtype=float)
    scaled = _scaled_s(eps, alpha, beta)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.where(scaled == 0, 0.0, np.exp(alpha * np.log1p(eps)) * scaled)
    return out


def classify_region(alpha, beta, *, tol: float = BOUNDARY_TOL) -> ShapeRegion:
    """Place ``(alpha, beta)`` in one of the four shape regions.

    ========  ===========================  ==================
    region    condition                    hazard shape
    ========  ===========================  ==================
    I         beta >= 1, alpha*beta >= 1   monotone increasing
    II        beta <= 1, alpha*beta <= 1   monotone decreasing
    III       beta < 1,  alpha*beta > 1    unimodal
    IV        beta > 1,  alpha*beta < 1    bathtub (nominal)
    ========  ===========================  ==================

    Points within ``tol`` of ``beta = 1`` or ``alpha*beta = 1`` get shape
    ``"boundary"`` and the adjacent monotone label.
    """
    alpha = check_positive("alpha", alpha)
    beta = check_positive("beta", beta)
    ab = alpha * beta
    on_beta = abs(beta - 1.0) < tol
    on_ab = abs(ab - 1.0) < tol
    if on_beta and on_ab:
        return ShapeRegion("I", SHAPE_BOUNDARY, boundary=True, note="constant hazard (exponential)")
    if on_beta or on_ab:
        if beta >= 1.0 - tol and ab >= 1.0 - tol:
            return ShapeRegion("I", SHAPE_BOUNDARY, boundary=True, note="adjacent: monotone-increasing")
        return ShapeRegion("II", SHAPE_BOUNDARY, boundary=True, note="adjacent: monotone-decreasing")
    if beta > 1.0 and ab > 1.0:
        return ShapeRegion("I", SHAPE_INCREASING)
    if beta < 1.0 and ab < 1.0:
        return ShapeRegion("II", SHAPE_DECREASING)
    if beta < 1.0:
        return ShapeRegion("III", SHAPE_UNIMODAL)
    return ShapeRegion("IV", SHAPE_BATHTUB, nominal=True)


def default_min_offset(alpha, beta) -> float:
    # near z = 1, sign(s) = sign(alpha*beta - 1 + (z-1)**alpha): resolve that crossover
    gap = abs(1.0 - alpha * beta)
    if gap == 0.0:
        return 1e-8
    with np.errstate(under="ignore", divide="ignore"):
        crossover = np.exp(np.log(gap) / alpha)
    return float(max(min(1e-8, 1e-2 * crossover), 1e-300))


def default_max_z(alpha, beta) -> float:
    # for beta < 1 < alpha the late sign change sits where ln z / z ~ 2(1-beta)/(beta(alpha-1))
    if not (beta < 1.0 < alpha):
        return DEFAULT_Z_MAX
    c = 2.0 * (1.0 - beta) / (beta * (alpha - 1.0))
    z = max(np.e, 1.0 / c)
    for _ in range(50):
        z = max(np.e, np.log(z) / c)
    return float(min(max(DEFAULT_Z_MAX, 10.0 * z), 1e300))


def sign_scan(
    alpha,
    beta,
    z_max: Optional[float] = None,
    n_points: int = DEFAULT_N_POINTS,
    *,
    z_min_offset: Optional[float] = None,
) -> SignScan:
    """Evaluate ``s`` on a grid log-spaced in ``z - 1`` over ``(1, z_max]``.

    Both ends default to parameter-dependent values: ``z_min_offset`` small
    enough to catch sign changes that cluster next to ``z = 1``, and ``z_max``
    at least ``1e6`` but pushed out when the late unimodal turn lies beyond.
    """
    alpha = check_positive("alpha", alpha)
    beta = check_positive("beta", beta)
    if z_max is None:
        z_max = default_max_z(alpha, beta)
    if not z_max > 1:
        raise DomainError("z_max must exceed 1")
    if int(n_points) < 2:
        raise DomainError("n_points must be >= 2")
    lo = default_min_offset(alpha, beta) if z_min_offset is None else float(z_min_offset)
    hi = z_max - 1.0
    if not 0 < lo < hi:
        raise DomainError("need 0 < z_min_offset < z_max - 1")
    eps = np.logspace(np.log10(lo), np.log10(hi), int(n_points))
    scaled = _scaled_s(eps, alpha, beta)
    signs = np.sign(scaled).astype(int)
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.where(scaled == 0, 0.0, np.exp(alpha * np.log1p(eps)) * scaled)
    changes = []
    idx = np.flatnonzero(signs)
    for a, b in zip(idx[:-1], idx[1:]):
        if signs[a] != signs[b]:
            direction = "+-" if signs[a] > 0 else "-+"
            changes.append(((float(eps[a]), float(eps[b])), direction))
    return SignScan(alpha, beta, eps, values, signs, changes)


def shape_report(alpha, beta, *, scan: bool = True, **scan_kwargs) -> ShapeReport:
    """Region classification checked against an empirical sign scan.

    A region-IV point whose scan shows no ``-+`` change is downgraded to the
    observed shape, with a :class:`RuntimeWarning`.
    """
    region = classify_region(alpha, beta)
    if not scan:
        return ShapeReport(region, region.shape, None)
    sc = sign_scan(alpha, beta, **scan_kwargs)
    shape = region.shape
    downgraded = False
    if region.shape == SHAPE_BOUNDARY and sc.observed_shape == SHAPE_CONSTANT:
        shape = SHAPE_CONSTANT
    if region.label == "IV" and not region.boundary and "-+" not in sc.directions:
        shape = sc.observed_shape
        downgraded = True
        warnings.warn(
            f"region IV point (alpha={alpha}, beta={beta}) shows no bathtub sign change "
            f"on the scanned grid; reporting {shape!r}",
            RuntimeWarning,
            stacklevel=2,
        )
    return ShapeReport(region, shape, sc, downgraded)


def hazard_curve(theta, x_max: float, n_points: int = 200) -> np.ndarray:
    """``(x, h(x))`` pairs on a uniform grid over ``(0, x_max]``, shape ``(n_points, 2)``."""
    theta = check_theta(theta)
    x_max = check_positive("x_max", x_max)
    x = np.linspace(0.0, x_max, int(n_points) + 1)[1:]
    return np.column_stack([x, np.asarray(ewd_hazard(x, theta), dtype=float)])


def hazard_derivative_sign(x, theta) -> np.ndarray:
    """Sign of ``h'(x)`` predicted from ``s`` at ``z - 1 = expm1((x/sigma)**beta)``."""
    alpha, beta, sigma = check_theta(theta)
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        eps = np.expm1((x / sigma) ** beta)
    return np.sign(_scaled_s(eps, alpha, beta)).astype(int)


def write_csv(path, rows, header) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
