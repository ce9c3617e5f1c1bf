"""Maximum likelihood under type II censoring by back-fitting.

For fixed ``beta`` the transformed data ``y = x**beta`` are a censored
exponentiated-exponential sample with scale ``lam = sigma**beta``, so the
``(alpha, sigma)`` maximisation reduces to a two-parameter fixed-point
problem. Maximising the resulting profile over ``beta`` gives the full MLE.
:func:`fit_direct` maximises the three-parameter likelihood in one go and
serves as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from ._validation import Theta, check_positive
from .distributions import log1mexp
from .exceptions import InvalidParameterError, NonConvergenceError
from .likelihood import CensoredSample, log_likelihood, log_permutation_constant, score

FAMILIES = ("ewd", "eed")


@dataclass
class FitConfig:
    """Tolerances, iteration caps and starting values for the fitters.

    ``epsilon_outer`` bounds the relative parameter change between outer
    back-fitting sweeps, ``epsilon_inner`` the relative ``(alpha, lam)`` step
    of the fixed-point iteration. ``lambda_init=None`` starts the inner
    iteration at the mean of the transformed observations.
    """

    epsilon_outer: float = 1e-7
    epsilon_inner: float = 1e-8
    max_outer: int = 50
    max_inner: int = 500
    beta_init: float = 1.0
    alpha_init: float = 1.0
    lambda_init: Optional[float] = None
    beta_bracket: tuple = (0.05, 20.0)
    beta_xtol: float = 1e-10
    prescan_points: int = 9
    score_tol: float = 1e-4
    inner_grad_tol: float = 1e-10
    min_omega: float = 1.0 / 64

    def __post_init__(self):
        for name in ("epsilon_outer", "epsilon_inner", "beta_xtol", "score_tol", "inner_grad_tol"):
            check_positive(name, getattr(self, name))
        for name in ("max_outer", "max_inner"):
            if int(getattr(self, name)) < 1:
                raise InvalidParameterError(f"{name} must be >= 1")
        check_positive("beta_init", self.beta_init)
        check_positive("alpha_init", self.alpha_init)
        if self.lambda_init is not None:
            check_positive("lambda_init", self.lambda_init)
        lo, hi = (float(v) for v in self.beta_bracket)
        if not (0 < lo < hi and math.isfinite(hi)):
            raise InvalidParameterError(f"beta_bracket must satisfy 0 < lo < hi, got {self.beta_bracket}")
        self.beta_bracket = (lo, hi)


# ---------------------------------------------------------------------------
# exponentiated-exponential inner problem


class _EedProblem:
    """Censored EED log-likelihood in ``(alpha, lam)`` for sorted data ``y``."""

    def __init__(self, y: np.ndarray, n_total: int):
        self.y = np.asarray(y, dtype=float)
        self.r = self.y.size
        self.m = n_total - self.r
        self.sum_y = float(np.sum(self.y))
        self.y_last = float(self.y[-1])

    def _logs(self, lam):
        s = self.y / lam
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            log_g = log1mexp(-s)
        return s, log_g

    def _tail(self, alpha, lam, log_g_last):
        """``log(1 - G_r**alpha)``."""
        s_last = self.y_last / lam
        if s_last > 40.0:
            return math.log(alpha) - s_last
        return float(log1mexp(alpha * log_g_last))

    def g1(self, alpha, lam, logs=None) -> float:
        _, log_g = logs or self._logs(lam)
        out = -float(np.sum(log_g))
        if self.m:
            lg = float(log_g[-1])
            out += self.m * lg * math.exp(alpha * lg - self._tail(alpha, lam, lg))
        return out

    def g2(self, alpha, lam, logs=None) -> float:
        s, log_g = logs or self._logs(lam)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            ratio = np.where(s > 0, s / np.expm1(s), 1.0)  # y e^{-y/lam} / (1 - e^{-y/lam}) / lam
        total = self.sum_y - (alpha - 1.0) * lam * float(np.sum(ratio))
        if self.m:
            lg = float(log_g[-1])
            total += self.m * math.exp(
                math.log(alpha) + math.log(self.y_last) - self.y_last / lam
                + (alpha - 1.0) * lg - self._tail(alpha, lam, lg)
            )
        return total / self.r**2

    def loglik(self, alpha, lam) -> float:
        s, log_g = self._logs(lam)
        val = self.r * (math.log(alpha) - math.log(lam)) - float(np.sum(s)) + (alpha - 1.0) * float(np.sum(log_g))
        if self.m:
            val += self.m * self._tail(alpha, lam, float(log_g[-1]))
        return val if math.isfinite(val) else -math.inf

    def score(self, alpha, lam) -> np.ndarray:
        """Gradient in ``(alpha, lam)``: ``(r/alpha - g1, r (r g2 - lam) / lam**2)``."""
        r = self.r
        g1, g2 = self.maps(alpha, lam)
        return np.array([r / alpha - g1, r * (r * g2 - lam) / lam**2])

    def maps(self, alpha, lam):
        logs = self._logs(lam)
        return self.g1(alpha, lam, logs), self.g2(alpha, lam, logs)

    def log_grad(self, log_params) -> np.ndarray:
        alpha, lam = np.exp(log_params)
        return self.score(alpha, lam) * np.array([alpha, lam])


def eed_g1(alpha, lam, y_sample: CensoredSample) -> float:
    """``(n-r) G_r**a ln G_r / (1 - G_r**a) - sum_i ln G_i`` with ``G = 1 - exp(-y/lam)``.

    At the censored EED MLE, ``alpha = r / g1``.
    """
    return _EedProblem(y_sample.observed, y_sample.n_total).g1(
        check_positive("alpha", alpha), check_positive("lam", lam)
    )


def eed_g2(alpha, lam, y_sample: CensoredSample) -> float:
    """Scale map whose fixed point ``lam = r * g2`` zeroes the ``lam``-score.

    ``[(n-r) a y_r e^{-y_r/lam} G_r**(a-1) / (1 - G_r**a)
       - (a-1) sum_i y_i e^{-y_i/lam} / G_i + sum_i y_i] / r**2``
    """
    return _EedProblem(y_sample.observed, y_sample.n_total).g2(
        check_positive("alpha", alpha), check_positive("lam", lam)
    )


def eed_score(alpha, lam, y_sample: CensoredSample) -> np.ndarray:
    return _EedProblem(y_sample.observed, y_sample.n_total).score(alpha, lam)


def eed_log_likelihood(alpha, lam, y_sample: CensoredSample) -> float:
    """Kernel (no permutation constant) of the censored EED log-likelihood."""
    return _EedProblem(y_sample.observed, y_sample.n_total).loglik(alpha, lam)


@dataclass
class EedSolution:
    alpha: float
    lam: float
    trace: list
    n_iter: int
    converged: bool
    method: str
    grad_norm: float
    omega: float = 1.0

    def __iter__(self):
        return iter((self.alpha, self.lam, self.trace))


def _newton_log(problem: _EedProblem, start, grad_tol, max_iter=100):
    """Damped Newton ascent on the EED log-likelihood in log-parameters."""
    x = np.log(np.asarray(start, dtype=float))
    f = problem.loglik(*np.exp(x))
    h = 1e-5
    for it in range(1, max_iter + 1):
        g = problem.log_grad(x)
        if not np.all(np.isfinite(g)):
            return x, it, False
        if np.linalg.norm(g) <= grad_tol * problem.r:
            return x, it, True
        H = np.empty((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            H[:, j] = (problem.log_grad(x + e) - problem.log_grad(x - e)) / (2 * h)
        H = 0.5 * (H + H.T)
        evals = np.linalg.eigvalsh(H)
        if np.all(np.isfinite(evals)) and evals[-1] < 0:
            step = -np.linalg.solve(H, g)
        else:
            shift = (abs(evals[-1]) if np.all(np.isfinite(evals)) else 1.0) + 1.0
            step = -np.linalg.solve(H - shift * np.eye(2), g) if np.all(np.isfinite(H)) else g / max(1.0, np.linalg.norm(g))
        step_len = np.linalg.norm(step)
        if step_len > 2.0:
            step *= 2.0 / step_len
        t = 1.0
        while t > 1e-12:
            trial = x + t * step
            ft = problem.loglik(*np.exp(trial))
            if ft >= f - 1e-13 * abs(f):
                break
            t *= 0.5
        else:
            return x, it, np.linalg.norm(g) <= 1e3 * grad_tol * problem.r
        x, f = trial, ft
        if t * step_len < 1e-15:
            return x, it, np.linalg.norm(problem.log_grad(x)) <= 1e3 * grad_tol * problem.r
    return x, max_iter, np.linalg.norm(problem.log_grad(x)) <= grad_tol * problem.r


def eed_fixed_point(
    y_sample: CensoredSample,
    config: Optional[FitConfig] = None,
    *,
    alpha0: Optional[float] = None,
    lam0: Optional[float] = None,
) -> EedSolution:
    """Solve ``alpha = r / g1(alpha, lam)``, ``lam = r * g2(alpha, lam)``.

    Both maps are applied to the previous iterate. When the iteration stops
    contracting the update is averaged with the current point, the weight
    halving each time; below ``config.min_omega`` or after ``max_inner``
    steps the score equations are solved by damped Newton instead. A
    converged fixed point whose score is not yet below
    ``config.inner_grad_tol`` is polished with the same Newton routine.
    """
    config = config or FitConfig()
    problem = _EedProblem(y_sample.observed, y_sample.n_total)
    alpha = float(alpha0 if alpha0 is not None else config.alpha_init)
    lam = float(lam0 if lam0 is not None else (config.lambda_init or np.mean(problem.y)))
    start = (alpha, lam)
    trace = [start]
    omega = 1.0
    prev_step = math.inf
    stalls = 0
    converged = False
    n_iter = 0
    while n_iter < config.max_inner:
        n_iter += 1
        with np.errstate(all="ignore"):
            try:
                g1, g2 = problem.maps(alpha, lam)
                a_map, l_map = problem.r / g1, problem.r * g2
            except (OverflowError, ZeroDivisionError, ValueError):
                a_map = l_map = math.nan
        if not (math.isfinite(a_map) and math.isfinite(l_map) and a_map > 0 and l_map > 0):
            omega *= 0.5
            if omega < config.min_omega:
                break
            continue
        a_new = (1 - omega) * alpha + omega * a_map
        l_new = (1 - omega) * lam + omega * l_map
        step = math.hypot((a_new - alpha) / alpha, (l_new - lam) / lam)
        alpha, lam = a_new, l_new
        trace.append((alpha, lam))
        if step < config.epsilon_inner:
            converged = True
            break
        if step >= prev_step:
            stalls += 1
            if stalls >= 3:
                omega *= 0.5
                stalls = 0
                if omega < config.min_omega:
                    break
        else:
            stalls = 0
        prev_step = step

    tol = config.inner_grad_tol
    grad = np.linalg.norm(problem.log_grad(np.log([alpha, lam]))) if converged else math.inf
    method = "fixed-point"
    if not converged or not grad <= tol * problem.r:
        origin = (alpha, lam) if converged else start
        x, extra, ok = _newton_log(problem, origin, tol)
        alpha, lam = (float(v) for v in np.exp(x))
        trace.append((alpha, lam))
        n_iter += extra
        method = "fixed-point+newton" if converged else "newton"
        converged = ok
        grad = float(np.linalg.norm(problem.log_grad(x)))
    return EedSolution(alpha, lam, trace, n_iter, converged, method, float(grad / problem.r), omega)


# ---------------------------------------------------------------------------
# profile likelihood and back-fitting


@dataclass
class ProfilePoint:
    beta: float
    value: float
    alpha: float
    sigma: float
    inner: EedSolution


def profile_loglik(
    beta,
    sample: CensoredSample,
    config: Optional[FitConfig] = None,
    *,
    warm: Optional[tuple] = None,
    include_constant: bool = False,
) -> ProfilePoint:
    """Profile log-likelihood ``L1(beta)`` with its maximisers ``alpha(beta)``, ``sigma(beta)``.

    ``warm=(alpha, sigma)`` seeds the inner solver at ``lam = sigma**beta``.
    The returned value is the kernel unless ``include_constant``.
    """
    beta = check_positive("beta", beta)
    config = config or FitConfig()
    y = sample.power(beta)
    if warm is not None:
        sol = eed_fixed_point(y, config, alpha0=warm[0], lam0=warm[1] ** beta)
    else:
        sol = eed_fixed_point(y, config)
    if not sol.converged:
        raise NonConvergenceError(f"inner (alpha, lambda) solver failed at beta={beta!r}")
    sigma = sol.lam ** (1.0 / beta)
    value = log_likelihood(sample, (sol.alpha, beta, sigma), include_constant=include_constant)
    return ProfilePoint(beta, value, sol.alpha, sigma, sol)


@dataclass
class FitResult:
    theta_hat: Theta
    loglik: float
    loglik_full: float
    n_outer: int
    converged: bool
    method: str
    family: str = "ewd"
    status: str = "converged"
    score_norm: float = math.nan
    n_total: int = 0
    r: int = 0
    inner_trace: list = field(default_factory=list, repr=False)
    profile_path: list = field(default_factory=list, repr=False)

    @property
    def neg_loglik(self) -> float:
        return -self.loglik

    def to_dict(self, *, include_trace: bool = False) -> dict:
        out = {
            "family": self.family,
            "method": self.method,
            "theta": {k: float(v) for k, v in self.theta_hat._asdict().items()},
            "loglik_kernel": float(self.loglik),
            "loglik_full": float(self.loglik_full),
            "neg_loglik_kernel": float(-self.loglik),
            "neg_loglik_full": float(-self.loglik_full),
            "n_outer": int(self.n_outer),
            "converged": bool(self.converged),
            "status": self.status,
            "score_norm": float(self.score_norm),
            "n_total": int(self.n_total),
            "r": int(self.r),
            "profile_path": [float(v) for v in self.profile_path],
        }
        if include_trace:
            out["inner_trace"] = [[[float(a), float(l)] for a, l in path] for path in self.inner_trace]
        return out


def _score_norm(sample, theta, family) -> float:
    try:
        g = score(sample, theta)
    except ArithmeticError:
        return math.inf
    if family == "eed":
        g = g[[0, 2]]
    return float(np.linalg.norm(g))


def _finish(sample, theta, family, method, n_outer, converged, status, config, trace=(), path=()):
    theta = Theta(*(float(v) for v in theta))
    kernel = log_likelihood(sample, theta, include_constant=False)
    snorm = _score_norm(sample, theta, family)
    if converged and not snorm < config.score_tol:
        converged = False
        status = "score-not-small"
    return FitResult(
        theta_hat=theta,
        loglik=kernel,
        loglik_full=kernel + log_permutation_constant(sample.n_total, sample.r),
        n_outer=n_outer,
        converged=converged,
        method=method,
        family=family,
        status=status,
        score_norm=snorm,
        n_total=sample.n_total,
        r=sample.r,
        inner_trace=list(trace),
        profile_path=list(path),
    )


class _Profile:
    """Memoised ``-L1(exp(log_beta))`` with warm starts from the nearest evaluated beta."""

    def __init__(self, sample, config):
        self.sample = sample
        self.config = config
        self.points: dict = {}

    def point(self, log_beta: float) -> Optional[ProfilePoint]:
        key = float(log_beta)
        if key in self.points:
            return self.points[key]
        warm = None
        if self.points:
            near = min(self.points, key=lambda k: abs(k - key))
            if self.points[near] is not None:
                warm = (self.points[near].alpha, self.points[near].sigma)
        try:
            pt = profile_loglik(math.exp(key), self.sample, self.config, warm=warm)
            if warm is not None and not math.isfinite(pt.value):
                pt = profile_loglik(math.exp(key), self.sample, self.config)
        except (NonConvergenceError, ArithmeticError):
            pt = None
        if pt is not None and not math.isfinite(pt.value):
            pt = None
        self.points[key] = pt
        return pt

    def __call__(self, log_beta: float) -> float:
        pt = self.point(log_beta)
        return 1e300 if pt is None else -pt.value

    def best(self) -> ProfilePoint:
        valid = [p for p in self.points.values() if p is not None]
        if not valid:
            raise NonConvergenceError("profile likelihood could not be evaluated anywhere")
        return max(valid, key=lambda p: p.value)


def _local_bracket(f, center, lo, hi):
    """Expand geometrically from ``center`` (log-beta) until ``f`` turns upward."""
    step = math.log(2.0)
    fc = f(center)
    left, right = max(lo, center - step), min(hi, center + step)
    fl, fr = f(left), f(right)
    if fl >= fc and fr >= fc:
        return left, right
    direction = 1.0 if fr < fl else -1.0
    prev, cur, fcur = center, (right if direction > 0 else left), min(fl, fr)
    while True:
        step *= 2.0
        nxt = min(hi, max(lo, cur + direction * step))
        fn = f(nxt)
        if fn >= fcur or nxt in (lo, hi):
            return (prev, nxt) if direction > 0 else (nxt, prev)
        prev, cur, fcur = cur, nxt, fn


def _maximize_profile(prof: _Profile, beta_start: float, config: FitConfig, prescan: bool):
    lo, hi = (math.log(b) for b in config.beta_bracket)
    center = min(hi, max(lo, math.log(beta_start)))
    if prescan and config.prescan_points >= 3:
        grid = np.linspace(lo, hi, int(config.prescan_points))
        values = [prof(g) for g in grid]
        i = int(np.argmin(values))
        if values[i] < prof(center):
            center = float(grid[i])
    a, b = _local_bracket(prof, center, lo, hi)
    if b > a:
        res = minimize_scalar(prof, bounds=(a, b), method="bounded", options={"xatol": config.beta_xtol})
        prof(float(res.x))
    return prof.best()


def _rel_change(new, old) -> float:
    new, old = np.asarray(new, dtype=float), np.asarray(old, dtype=float)
    return float(np.linalg.norm((new - old) / np.abs(old)))


def fit_backfitting(sample: CensoredSample, config: Optional[FitConfig] = None, *, family: str = "ewd") -> FitResult:
    """Back-fitting MLE.

    Each sweep (1) solves the ``(alpha, sigma)`` problem at the current
    ``beta`` with the EED fixed point and (2) maximises the profile
    ``L1(beta)`` starting from that ``beta``. Sweeps repeat until the
    relative change in ``(alpha, beta, sigma)`` drops below
    ``config.epsilon_outer``. The first sweep also scans a coarse log-grid
    over ``config.beta_bracket`` because ``L1`` need not be unimodal.

    ``family="eed"`` fixes ``beta = 1`` and runs step (1) only.
    """
    if family not in FAMILIES:
        raise InvalidParameterError(f"family must be one of {FAMILIES}, got {family!r}")
    config = config or FitConfig()
    if family == "eed":
        sol = eed_fixed_point(sample, config)
        status = "converged" if sol.converged else "inner-diverged"
        return _finish(
            sample, (sol.alpha, 1.0, sol.lam), "eed", "backfit", 1, sol.converged, status, config, [sol.trace]
        )

    prof = _Profile(sample, config)
    beta = min(max(config.beta_init, config.beta_bracket[0]), config.beta_bracket[1])
    warm = None
    prev_theta = None
    prev_value = -math.inf
    traces, path = [], []
    converged = False
    status = "max-outer-reached"
    for k in range(1, config.max_outer + 1):
        y = sample.power(beta)
        if warm is None:
            sol = eed_fixed_point(y, config)
        else:
            sol = eed_fixed_point(y, config, alpha0=warm[0], lam0=warm[1] ** beta)
        traces.append(sol.trace)
        if sol.converged:
            step1 = ProfilePoint(beta, log_likelihood(sample, (sol.alpha, beta, sol.lam ** (1 / beta)), include_constant=False),
                                 sol.alpha, sol.lam ** (1 / beta), sol)
            prof.points.setdefault(math.log(beta), step1)
        best = _maximize_profile(prof, beta, config, prescan=(k == 1))
        if best.value < prev_value:  # keep the ascent property under solver noise
            best = prof.points.get(math.log(beta)) or best
        theta = (best.alpha, best.beta, best.sigma)
        path.append(best.value)
        if prev_theta is not None and _rel_change(theta, prev_theta) < config.epsilon_outer:
            converged = True
            status = "converged"
            break
        prev_theta, prev_value = theta, best.value
        beta, warm = best.beta, (best.alpha, best.sigma)
    lo, hi = config.beta_bracket
    if abs(math.log(theta[1] / lo)) < 1e-6 or abs(math.log(theta[1] / hi)) < 1e-6:
        converged = False
        status = "beta-at-bracket-bound"
    return _finish(sample, theta, "ewd", "backfit", k, converged, status, config, traces, path)


def _direct_starts(sample: CensoredSample, config: FitConfig):
    lo, hi = config.beta_bracket
    betas = sorted({min(max(b, lo), hi) for b in (config.beta_init, 0.5, 1.0, 2.0, 4.0)})
    for b in betas:
        sigma0 = float(np.mean(sample.observed**b) ** (1.0 / b))
        yield (1.0, b, sigma0)


def fit_direct(sample: CensoredSample, config: Optional[FitConfig] = None, *, family: str = "ewd") -> FitResult:
    """Box-constrained quasi-Newton (L-BFGS-B) on the full log-likelihood.

    Works in log-parameters with the analytic score, so positivity is built
    in; ``beta`` is confined to ``config.beta_bracket``. Several starting
    shapes are tried and the best optimum is kept.
    """
    if family not in FAMILIES:
        raise InvalidParameterError(f"family must be one of {FAMILIES}, got {family!r}")
    config = config or FitConfig()
    free = [0, 2] if family == "eed" else [0, 1, 2]
    log_lo, log_hi = (math.log(b) for b in config.beta_bracket)

    def unpack(v):
        full = np.array([0.0, 0.0, 0.0])
        full[free] = v
        return np.exp(full)

    def objective(v):
        theta = unpack(v)
        val = log_likelihood(sample, theta, include_constant=False)
        if not math.isfinite(val):
            return 1e300, np.zeros_like(v)
        try:
            g = score(sample, theta) * theta
        except ArithmeticError:
            return 1e300, np.zeros_like(v)
        return -val, -g[free]

    bounds = [(None, None), (log_lo, log_hi), (None, None)]
    bounds = [bounds[i] for i in free]
    best = None
    starts = [(1.0, 1.0, float(np.mean(sample.observed)))] if family == "eed" else list(_direct_starts(sample, config))
    for start in starts:
        x0 = np.log(np.asarray(start))[free]
        res = minimize(
            objective,
            x0,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"ftol": 1e-15, "gtol": 1e-10, "maxiter": 5000, "maxls": 50},
        )
        if best is None or res.fun < best.fun:
            best = res
    theta = unpack(best.x)
    # line-search aborts near full precision are common; the score check in _finish decides
    converged = bool(best.success) or abs(best.fun) < 1e299
    status = "converged" if converged else f"optimizer: {best.message}"
    if family == "ewd" and (abs(best.x[1] - log_lo) < 1e-6 or abs(best.x[1] - log_hi) < 1e-6):
        converged, status = False, "beta-at-bracket-bound"
    return _finish(sample, theta, family, "direct", int(best.nit), converged, status, config)


def fit(sample: CensoredSample, config: Optional[FitConfig] = None, *, family: str = "ewd",
        method: str = "backfit", check: bool = False, agree_tol: float = 1e-5):
    """Fit by back-fitting or direct optimisation, optionally cross-checking.

    With ``check=True`` both methods run; the back-fitting result is returned
    with ``method="both-agree"`` when their log-likelihoods agree to
    ``agree_tol``. Returns ``(result, other_or_None)``.
    """
    if method not in ("backfit", "direct"):
        raise InvalidParameterError(f"method must be 'backfit' or 'direct', got {method!r}")
    primary = (fit_backfitting if method == "backfit" else fit_direct)(sample, config, family=family)
    if not check:
        return primary, None
    other = (fit_direct if method == "backfit" else fit_backfitting)(sample, config, family=family)
    if abs(primary.loglik - other.loglik) < agree_tol:
        primary.method = "both-agree"
    return primary, other
