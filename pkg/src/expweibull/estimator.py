"""Scikit-learn style estimator wrapping the censored MLE."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_lifetimes
from .datasets import apply_type2_censoring
from .distributions import ewd_cdf, ewd_hazard, ewd_logpdf, ewd_sample
from .fisher import asymptotic_ci, fisher_matrix
from .likelihood import CensoredSample
from .mle import FitConfig, fit


class ExponentiatedWeibull(TransformerMixin, BaseEstimator):
    """Exponentiated-Weibull lifetime model fitted by censored maximum likelihood.

    ``fit`` takes complete lifetimes and censors them at ``censor_rate`` (or
    keeps the ``r`` smallest); pass a :class:`CensoredSample`, or observed
    order statistics plus ``n_total``, when the data are already censored.
    ``family="eed"`` fixes ``beta = 1``. ``transform`` maps lifetimes to
    fitted CDF values.
    """

    def __init__(
        self,
        family="ewd",
        method="backfit",
        censor_rate=None,
        r=None,
        rounding="round",
        check=False,
        epsilon_outer=1e-7,
        epsilon_inner=1e-8,
        max_outer=50,
        max_inner=500,
        beta_bracket=(0.05, 20.0),
    ):
        self.family = family
        self.method = method
        self.censor_rate = censor_rate
        self.r = r
        self.rounding = rounding
        self.check = check
        self.epsilon_outer = epsilon_outer
        self.epsilon_inner = epsilon_inner
        self.max_outer = max_outer
        self.max_inner = max_inner
        self.beta_bracket = beta_bracket

    def _config(self) -> FitConfig:
        return FitConfig(
            epsilon_outer=self.epsilon_outer,
            epsilon_inner=self.epsilon_inner,
            max_outer=self.max_outer,
            max_inner=self.max_inner,
            beta_bracket=tuple(self.beta_bracket),
        )

    def _sample(self, X, n_total):
        if isinstance(X, CensoredSample):
            return X
        x = check_lifetimes(X)
        if n_total is not None:
            return CensoredSample(np.sort(x, kind="stable"), n_total)
        return apply_type2_censoring(x, r=self.r, rate=self.censor_rate, rounding=self.rounding)

    def fit(self, X, y=None, n_total=None):
        sample = self._sample(X, n_total)
        result, other = fit(sample, self._config(), family=self.family, method=self.method, check=self.check)
        self.sample_ = sample
        self.result_ = result
        self.crosscheck_ = other
        self.theta_ = result.theta_hat
        self.alpha_, self.beta_, self.sigma_ = result.theta_hat
        self.loglik_ = result.loglik
        self.converged_ = result.converged
        return self

    def transform(self, X):
        check_is_fitted(self, "theta_")
        return np.asarray(ewd_cdf(check_lifetimes(X), self.theta_))

    def score_samples(self, X):
        """Log-density of each lifetime under the fitted model."""
        check_is_fitted(self, "theta_")
        return np.asarray(ewd_logpdf(check_lifetimes(X), self.theta_))

    def score(self, X, y=None):
        """Total log-density of ``X`` (uncensored)."""
        return float(np.sum(self.score_samples(X)))

    def hazard(self, X):
        check_is_fitted(self, "theta_")
        return np.asarray(ewd_hazard(check_lifetimes(X), self.theta_))

    def sample(self, n_samples=1, random_state=None):
        check_is_fitted(self, "theta_")
        return ewd_sample(self.theta_, n_samples, seed=random_state)

    def fisher_information(self, p=None):
        """Information matrix at the estimate; ``p`` defaults to the observed ``r/n``."""
        check_is_fitted(self, "theta_")
        return fisher_matrix(self.theta_, self.sample_.proportion if p is None else p)

    def confidence_intervals(self, level=0.95):
        check_is_fitted(self, "theta_")
        return asymptotic_ci(self.result_, self.sample_, level)

