"""scikit-learn compatible estimators."""

import math
from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import Dataset, sample_covariance
from .debias import debias
from .decorrelate import DecorrelationOptions, build_decorrelator
from .inference import confidence_intervals, joint_region, p_values, test_family
from .lasso import lasso_fit, scaled_lasso_fit


def _universal(n, p):
    return math.sqrt(2 * math.log(max(p, 2)) / n)


class ScaledLasso(RegressorMixin, BaseEstimator):
    """Scaled LASSO: sparse coefficients and a noise-level estimate.

    Parameters
    ----------
    lambda_tilde : float or "auto"
        Penalty. "auto" uses ``lambda_tilde_scale * sqrt(2 log p / n)``.
    lambda_tilde_scale : float
    tol, max_iter
        Coordinate descent stopping rule.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    sigma_ : float
    """

    def __init__(self, lambda_tilde="auto", lambda_tilde_scale=10.0, tol=1e-7, max_iter=10000):
        self.lambda_tilde = lambda_tilde
        self.lambda_tilde_scale = lambda_tilde_scale
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        d = Dataset(X, y)
        lt = (self.lambda_tilde_scale * _universal(d.n, d.p)
              if self.lambda_tilde == "auto" else float(self.lambda_tilde))
        self.fit_ = scaled_lasso_fit(d, lt, tol=self.tol, max_iter=self.max_iter)
        self.coef_ = self.fit_.theta
        self.sigma_ = self.fit_.sigma_hat
        self.intercept_ = 0.0
        self.n_features_in_ = d.p
        return self

    def predict(self, X):
        check_is_fitted(self)
        return check_array(X) @ self.coef_


class DebiasedLasso(RegressorMixin, BaseEstimator):
    """De-biased LASSO with coordinate-wise confidence intervals and p-values.

    The default tuning follows the synthetic-experiment recipe: noise level
    from the scaled LASSO with penalty ``10 sqrt(2 log p / n)``, LASSO penalty
    ``4 sigma_hat sqrt(2 log p / n)`` and decorrelation bound
    ``mu = 2 sqrt(log p / n)``. No intercept is fitted; center the data first
    if needed.

    Parameters
    ----------
    alpha : float
        Significance level for intervals and tests.
    lam : float or "auto"
        LASSO penalty. "auto" uses ``lambda_scale * sigma_hat * sqrt(2 log p / n)``.
    lambda_scale : float
    lambda_tilde : float or "auto"
        Scaled LASSO penalty; "auto" uses ``lambda_tilde_scale * sqrt(2 log p / n)``.
    lambda_tilde_scale : float
    mu : float or "auto"
        Decorrelation bound; "auto" uses ``mu_scale * sqrt(log p / n)``.
    mu_scale : float
    row_bound_beta : float, optional
        Adds ``||X m_i||_inf <= n**beta`` to every row program (non-Gaussian noise).
    sigma : float, optional
        Known noise level; skips the scaled LASSO estimate in the variances.
    standardize : bool
        Fit on unit-variance columns and map results back to the original scale.
    tol, max_iter
        Coordinate descent stopping rule.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
        De-biased coefficients.
    lasso_coef_ : ndarray of shape (n_features,)
    sigma_hat_ : float
    lambda_ : float
    decorrelator_ : Decorrelator
    debiased_fit_ : DebiasedFit
        Everything on the (possibly standardized) fitting scale.
    """

    def __init__(self, alpha=0.05, lam="auto", lambda_scale=4.0, lambda_tilde="auto",
                 lambda_tilde_scale=10.0, mu="auto", mu_scale=2.0, row_bound_beta=None,
                 sigma=None, standardize=False, tol=1e-7, max_iter=10000):
        self.alpha = alpha
        self.lam = lam
        self.lambda_scale = lambda_scale
        self.lambda_tilde = lambda_tilde
        self.lambda_tilde_scale = lambda_tilde_scale
        self.mu = mu
        self.mu_scale = mu_scale
        self.row_bound_beta = row_bound_beta
        self.sigma = sigma
        self.standardize = standardize
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        d = Dataset(X, y)
        if self.standardize:
            d = d.standardized()
        scale = d.column_scale if d.column_scale is not None else np.ones(d.p)
        n, p = d.n, d.p
        s = sample_covariance(d)

        lt = (self.lambda_tilde_scale * _universal(n, p)
              if self.lambda_tilde == "auto" else float(self.lambda_tilde))
        self.scaled_lasso_ = scaled_lasso_fit(d, lt, tol=self.tol, max_iter=self.max_iter,
                                              sigma_hat=s)
        sigma_hat = self.sigma if self.sigma is not None else self.scaled_lasso_.sigma_hat
        self.lambda_ = (self.lambda_scale * sigma_hat * _universal(n, p)
                        if self.lam == "auto" else float(self.lam))
        self.lasso_ = lasso_fit(d, self.lambda_, tol=self.tol, max_iter=self.max_iter,
                                sigma_hat=s, warm_start=self.scaled_lasso_.theta)

        opts = DecorrelationOptions(
            mu=None if self.mu == "auto" else float(self.mu), mu_scale=self.mu_scale,
            row_bound_beta=self.row_bound_beta)
        self.decorrelator_ = build_decorrelator(s, opts, x=d.x)
        self.debiased_fit_ = debias(d, self.lasso_, self.decorrelator_, sigma_hat)
        self._cov = s
        self._scale = scale

        self.sigma_hat_ = float(sigma_hat)
        self.coef_ = self.debiased_fit_.theta_u / scale
        self.lasso_coef_ = self.lasso_.theta / scale
        self.intercept_ = 0.0
        self.n_features_in_ = p
        return self

    def predict(self, X):
        check_is_fitted(self)
        return check_array(X) @ self.coef_

    def confidence_intervals(self, alpha=None):
        """Lower and upper interval endpoints on the original scale."""
        check_is_fitted(self)
        lo, hi = confidence_intervals(self.debiased_fit_, alpha or self.alpha)
        return lo / self._scale, hi / self._scale

    @property
    def p_values_(self):
        check_is_fitted(self)
        return p_values(self.debiased_fit_)

    def test(self, alpha=None):
        """Per-coordinate and Bonferroni decisions, reported on the original scale."""
        check_is_fitted(self)
        rep = test_family(self.debiased_fit_, alpha or self.alpha)
        return replace(rep, theta_u=rep.theta_u / self._scale,
                       ci_lower=rep.ci_lower / self._scale,
                       ci_upper=rep.ci_upper / self._scale)

    def joint_region(self, r, alpha=None):
        """Simultaneous box for the coordinates ``r`` (fitting scale)."""
        check_is_fitted(self)
        return joint_region(self.debiased_fit_, self.decorrelator_, r,
                            alpha or self.alpha, self._cov)
