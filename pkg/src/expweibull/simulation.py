"""Monte Carlo study of the censored MLE: bias, covariance and Wald coverage."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import check_theta
from .datasets import apply_type2_censoring, rate_to_r
from .distributions import ewd_sample
from .exceptions import InvalidParameterError
from .fisher import asymptotic_ci, fisher_matrix
from .mle import FitConfig, fit

FAILURE_CAP = 0.05


def replicate_seeds(seed: int, replicates: int) -> list:
    """Independent child seeds; replicate ``i`` always gets the same stream."""
    return np.random.SeedSequence(seed).spawn(replicates)


def _one(job):
    index, theta, n, r, seed_seq, level, method, config = job
    try:
        x = ewd_sample(theta, n, seed=np.random.default_rng(seed_seq))
        sample = apply_type2_censoring(x, r=r)
        result, _ = fit(sample, config, method=method)
        if not result.converged:
            return index, None, None, f"not converged: {result.status}"
        ci = asymptotic_ci(result, sample, level)
        covered = (ci[:, 0] <= np.asarray(theta)) & (np.asarray(theta) <= ci[:, 1])
        return index, np.asarray(result.theta_hat, dtype=float), covered, None
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        return index, None, None, f"{type(exc).__name__}: {exc}"


@dataclass
class SimulationReport:
    theta: tuple
    n: int
    p: float
    r: int
    replicates: int
    level: float
    seed: int
    estimates: np.ndarray
    covered: np.ndarray
    failures: list = field(default_factory=list)
    asymptotic_covariance: Optional[np.ndarray] = None

    @property
    def n_ok(self) -> int:
        return int(self.estimates.shape[0])

    @property
    def failure_rate(self) -> float:
        return len(self.failures) / self.replicates if self.replicates else 0.0

    @property
    def cap_exceeded(self) -> bool:
        return self.failure_rate > FAILURE_CAP

    def empirical_covariance(self) -> Optional[np.ndarray]:
        """Sample covariance of ``sqrt(n) (theta_hat - theta)``."""
        if self.n_ok < 2:
            return None
        return np.cov(math.sqrt(self.n) * (self.estimates - np.asarray(self.theta)), rowvar=False)

    def coverage(self) -> Optional[np.ndarray]:
        return None if self.n_ok == 0 else self.covered.mean(axis=0)

    def to_dict(self) -> dict:
        out = {
            "theta": dict(zip(("alpha", "beta", "sigma"), map(float, self.theta))),
            "n": self.n,
            "p": self.p,
            "r": self.r,
            "replicates": self.replicates,
            "seed": self.seed,
            "level": self.level,
            "n_ok": self.n_ok,
            "n_failed": len(self.failures),
            "failure_rate": self.failure_rate,
            "failure_cap": FAILURE_CAP,
            "failures": [{"replicate": i, "error": msg} for i, msg in self.failures],
        }
        if self.n_ok == 0:
            return out
        truth = np.asarray(self.theta)
        mean = self.estimates.mean(axis=0)
        out["mean_estimate"] = mean.tolist()
        out["bias"] = (mean - truth).tolist()
        out["coverage"] = self.coverage().tolist()
        emp = self.empirical_covariance()
        out["empirical_covariance"] = None if emp is None else emp.tolist()
        asym = self.asymptotic_covariance
        out["asymptotic_covariance"] = None if asym is None else asym.tolist()
        if emp is not None and asym is not None:
            out["relative_difference"] = (np.abs(emp - asym) / np.abs(asym)).tolist()
        return out


def run_simulation(theta, n: int, p: float, replicates: int, seed: int = 0, *, level: float = 0.95,
                   method: str = "backfit", config: Optional[FitConfig] = None, jobs: int = 1,
                   rounding: str = "round") -> SimulationReport:
    """Sample, censor at the ``r = p n`` failure, fit and build Wald intervals, ``replicates`` times.

    Results are aggregated in replicate order, so ``jobs`` does not change
    the output.
    """
    theta = tuple(float(v) for v in check_theta(theta))
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise InvalidParameterError(f"n must be an integer >= 2, got {n!r}")
    if isinstance(replicates, bool) or int(replicates) != replicates or replicates < 0:
        raise InvalidParameterError(f"replicates must be a nonnegative integer, got {replicates!r}")
    if not 0.0 < p <= 1.0:
        raise InvalidParameterError(f"p must lie in (0, 1], got {p!r}")
    n, replicates = int(n), int(replicates)
    r = rate_to_r(n, 1.0 - p, rounding)
    config = config or FitConfig()
    jobs_list = [(i, theta, n, r, s, level, method, config) for i, s in enumerate(replicate_seeds(seed, replicates))]
    if jobs > 1 and replicates > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_one, jobs_list, chunksize=max(1, replicates // (4 * jobs))))
    else:
        results = [_one(j) for j in jobs_list]
    results.sort(key=lambda item: item[0])
    estimates = np.array([res[1] for res in results if res[3] is None]).reshape(-1, 3)
    covered = np.array([res[2] for res in results if res[3] is None], dtype=bool).reshape(-1, 3)
    failures = [(res[0], res[3]) for res in results if res[3] is not None]
    asym = fisher_matrix(theta, r / n).covariance if replicates else None
    return SimulationReport(theta, n, float(p), r, replicates, float(level), int(seed), estimates, covered,
                            failures, asym)
