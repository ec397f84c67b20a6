"""De-biased estimator and its noise/bias decomposition."""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InputError


@dataclass(frozen=True)
class DebiasedFit:
    """De-biased coefficients together with what inference needs.

    ``q_diag[i] = sigma_hat**2 * m_i' S m_i / n`` is the estimated variance of
    ``theta_u[i]``.
    """

    theta_u: np.ndarray
    theta_n: np.ndarray
    sigma_hat: float
    q_diag: np.ndarray
    n: int
    decorrelator: object = None

    @property
    def p(self):
        return self.theta_u.shape[0]


@dataclass(frozen=True)
class BiasDiagnostics:
    z: np.ndarray
    delta: np.ndarray
    delta_max: float


def debias(d, fit, dec, sigma_hat):
    """Add the correction ``M X'(Y - X theta_n) / n`` to a LASSO fit.

    Parameters
    ----------
    d : Dataset
    fit : LassoFit or ScaledLassoFit
        Anything with a ``theta`` attribute (a bare array also works).
    dec : Decorrelator
    sigma_hat : float
        Noise level entering the variance; usually the scaled LASSO estimate.
    """
    theta_n = np.asarray(getattr(fit, "theta", fit), dtype=float)
    if theta_n.shape != (d.p,) or dec.m.shape != (d.p, d.p):
        raise InputError("shapes of data, fit and decorrelator disagree")
    if not (sigma_hat > 0 and math.isfinite(sigma_hat)):
        raise InputError(f"sigma_hat must be positive and finite, got {sigma_hat!r}")
    resid = d.y - d.x @ theta_n
    theta_u = theta_n + dec.m @ (d.x.T @ resid) / d.n
    q_diag = sigma_hat ** 2 * dec.row_variance / d.n
    return DebiasedFit(theta_u, theta_n, float(sigma_hat), q_diag, d.n, dec)


def bias_decomposition(dfit, theta_0, dec, sigma_hat):
    """Split ``sqrt(n) (theta_u - theta_0)`` into noise ``z`` and bias ``delta``.

    ``delta = sqrt(n) (M S - I)(theta_0 - theta_n)`` and ``z`` is the remainder.

    Parameters
    ----------
    sigma_hat : SampleCovariance or ndarray
        The sample covariance of the design used by ``dfit``.
    """
    s = getattr(sigma_hat, "sigma_hat", sigma_hat)
    theta_0 = np.asarray(theta_0, dtype=float)
    root_n = math.sqrt(dfit.n)
    err = theta_0 - dfit.theta_n
    delta = root_n * (dec.m @ (s @ err) - err)
    z = root_n * (dfit.theta_u - theta_0) - delta
    return BiasDiagnostics(z, delta, float(np.abs(delta).max()))


def empirical_bias(fits, theta_0):
    """Monte-Carlo bias of the de-biased and the LASSO coefficients.

    All fits must come from noise replicates on one design (same decorrelator
    and sample size).

    Returns
    -------
    bias_u, bias_n : ndarray
    """
    fits = list(fits)
    if len(fits) < 2:
        raise InputError("need at least two replicates")
    ref = fits[0]
    for f in fits[1:]:
        if f.n != ref.n or f.decorrelator is not ref.decorrelator:
            raise InputError("replicates do not share one design")
    theta_0 = np.asarray(theta_0, dtype=float)
    bias_u = np.mean([f.theta_u for f in fits], axis=0) - theta_0
    bias_n = np.mean([f.theta_n for f in fits], axis=0) - theta_0
    return bias_u, bias_n
