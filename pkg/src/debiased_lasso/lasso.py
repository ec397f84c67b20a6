"""LASSO and scaled-LASSO solvers (cyclic coordinate descent, covariance updates)."""

import math
from dataclasses import dataclass

import numpy as np

from . import _cd
from .data import Dataset, sample_covariance
from .exceptions import DegenerateFitError, InputError, NumericError

SCALED_LASSO_MAX_OUTER = 50


def soft_threshold(z, t):
    """sign(z) * max(|z| - t, 0); works elementwise on arrays."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("threshold must be nonnegative")
    if np.ndim(z) == 0 and np.ndim(t) == 0:
        return math.copysign(max(abs(z) - t, 0.0), z) if abs(z) > t else 0.0
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


@dataclass(frozen=True)
class LassoFit:
    theta: np.ndarray
    lam: float
    iterations: int
    converged: bool
    kkt_residual: float
    objective_history: tuple = ()


@dataclass(frozen=True)
class ScaledLassoFit:
    theta: np.ndarray
    sigma_hat: float
    lambda_tilde: float
    iterations: int
    converged: bool
    lasso: LassoFit = None

    @property
    def lam(self):
        """Penalty of the final inner LASSO solve."""
        return self.lasso.lam


def lasso_objective(d, theta, lam):
    r = d.y - d.x @ theta
    return r @ r / (2 * d.n) + lam * np.abs(theta).sum()


def _check_status(status):
    if status == _cd.NEGATIVE_CURVATURE:
        raise NumericError("negative diagonal in the covariance: matrix is not PSD")


def lasso_fit(d, lam, tol=1e-7, max_iter=10000, sigma_hat=None, warm_start=None):
    """Solve ``min (1/2n)||Y - X theta||^2 + lam ||theta||_1``.

    Parameters
    ----------
    d : Dataset
    lam : float
        Positive penalty level.
    tol : float
        Stop when no coordinate moves by more than ``tol`` in a sweep and the
        KKT residual is at most ``tol``.
    max_iter : int
        Maximum number of full sweeps. Exhausting it returns
        ``converged=False`` rather than raising.
    sigma_hat : SampleCovariance, optional
        Precomputed ``X'X/n``; pass it when fitting many responses on one design.
    warm_start : ndarray, optional

    Returns
    -------
    LassoFit
    """
    if not lam > 0:
        raise InputError(f"lambda must be positive, got {lam!r}")
    if not isinstance(d, Dataset):
        raise InputError("expected a Dataset")
    s = (sigma_hat or sample_covariance(d)).sigma_hat
    xty = d.x.T @ d.y / d.n
    yy = d.y @ d.y / d.n
    p = d.p
    theta = np.zeros(p) if warm_start is None else np.array(warm_start, dtype=float)
    grad = xty - s @ theta
    hist = np.empty(max_iter)
    done = 0
    converged = False
    kkt = math.inf
    objectives = []
    while done < max_iter:
        status, sweeps = _cd.cd_sweeps(s, xty, float(lam), theta, grad, tol,
                                       max_iter - done, hist)
        _check_status(status)
        objectives.extend(0.5 * yy + hist[:sweeps])
        done += sweeps
        grad = xty - s @ theta  # refresh: drop accumulated rounding
        kkt = _cd.kkt_residual(grad, theta, lam)
        if status == _cd.CONVERGED and kkt <= tol:
            converged = True
            break
        if status != _cd.CONVERGED:
            break
    return LassoFit(theta, float(lam), done, converged, kkt, tuple(objectives))


def scaled_lasso_fit(d, lambda_tilde, tol=1e-7, max_iter=10000, sigma_hat=None):
    """Jointly estimate coefficients and noise level.

    Minimizes ``||Y - X theta||^2 / (2 sigma n) + sigma / 2 + lambda_tilde ||theta||_1``
    by alternating a LASSO solve at ``lam = sigma * lambda_tilde`` with the
    closed-form update ``sigma = ||Y - X theta|| / sqrt(n)``, starting from the
    null model. The LASSO is warm started across the alternation.

    Raises
    ------
    DegenerateFitError
        If the residual norm collapses (the model interpolates the data).
    """
    if not lambda_tilde > 0:
        raise InputError(f"lambda_tilde must be positive, got {lambda_tilde!r}")
    s = sigma_hat or sample_covariance(d)
    sigma0 = math.sqrt(d.y @ d.y / d.n)
    if sigma0 == 0:
        raise InputError("response is identically zero")
    sigma = sigma0
    theta = np.zeros(d.p)
    fit = None
    converged = False
    outer = 0
    for outer in range(1, SCALED_LASSO_MAX_OUTER + 1):
        fit = lasso_fit(d, sigma * lambda_tilde, tol=tol, max_iter=max_iter,
                        sigma_hat=s, warm_start=theta)
        theta = fit.theta
        r = d.y - d.x @ theta
        sigma_new = math.sqrt(r @ r / d.n)
        if sigma_new < 1e-10 * sigma0:
            raise DegenerateFitError(
                "scaled LASSO noise estimate collapsed; the fit interpolates the data")
        delta = abs(sigma_new - sigma)
        sigma = sigma_new
        if delta <= tol * sigma:
            converged = fit.converged
            break
    return ScaledLassoFit(theta, sigma, float(lambda_tilde), outer, converged, fit)
