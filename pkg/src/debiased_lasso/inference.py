"""Confidence intervals, p-values, family tests and power calculations."""

import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from ._normal import normal_cdf, normal_quantile, normal_sf
from .exceptions import InputError, ScaleError

logger = logging.getLogger(__name__)

P_VALUE_FLOOR = 1e-300
MAX_JOINT_SIZE = 20


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise InputError(f"alpha must lie in (0, 1), got {alpha!r}")


@dataclass(frozen=True)
class InferenceReport:
    alpha: float
    theta_u: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    p_values: np.ndarray
    reject: np.ndarray
    reject_fwer: np.ndarray
    standardized: np.ndarray
    underflow: np.ndarray

    def to_dict(self):
        coords = [
            {"index": i + 1,
             "theta_u": float(self.theta_u[i]),
             "ci": [float(self.ci_lower[i]), float(self.ci_upper[i])],
             "p_value": float(self.p_values[i]),
             "reject": bool(self.reject[i]),
             "reject_fwer": bool(self.reject_fwer[i])}
            for i in range(self.theta_u.size)
        ]
        return {"alpha": float(self.alpha), "coords": coords}

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


@dataclass(frozen=True)
class JointRegion:
    """Box region ``center + q_block_sqrt @ [-radius, radius]^k``."""

    r: tuple
    center: np.ndarray
    q_block_sqrt: np.ndarray
    radius: float

    def contains(self, theta_r):
        # solve in the whitened coordinates; pseudo-inverse handles rank loss
        w = np.linalg.pinv(self.q_block_sqrt) @ (np.asarray(theta_r) - self.center)
        return bool(np.all(np.abs(w) <= self.radius))


def standardized(dfit):
    """``theta_u[i] / sqrt(q_diag[i])``."""
    return dfit.theta_u / np.sqrt(dfit.q_diag)


def confidence_intervals(dfit, alpha):
    _check_alpha(alpha)
    half = normal_quantile(1 - alpha / 2) * np.sqrt(dfit.q_diag)
    return dfit.theta_u - half, dfit.theta_u + half


def _p_values_with_flags(dfit):
    p = 2 * normal_sf(np.abs(standardized(dfit)))
    under = p < P_VALUE_FLOOR
    if under.any():
        logger.info("%d p-values below %g clamped", int(under.sum()), P_VALUE_FLOOR)
    return np.clip(np.maximum(p, P_VALUE_FLOOR), 0.0, 1.0), under


def p_values(dfit):
    """Two-sided p-values for ``H_0: theta_i = 0``.

    Values below 1e-300 are clamped there so the ordering survives.
    """
    return _p_values_with_flags(dfit)[0]


def test_family(dfit, alpha, fwer=True):
    """Per-coordinate tests at level alpha, and Bonferroni tests at alpha / p.

    Both decisions are always computed; ``fwer`` only documents which one the
    caller treats as primary and is kept for interface symmetry.
    """
    _check_alpha(alpha)
    lo, hi = confidence_intervals(dfit, alpha)
    pv, under = _p_values_with_flags(dfit)
    return InferenceReport(
        alpha=float(alpha), theta_u=dfit.theta_u, ci_lower=lo, ci_upper=hi,
        p_values=pv, reject=pv <= alpha, reject_fwer=pv <= alpha / pv.size,
        standardized=standardized(dfit), underflow=under)


test_family.__test__ = False  # keep pytest from collecting the import


def power_function(alpha, u):
    """Power of the two-sided level-alpha z-test at standardized effect u."""
    _check_alpha(alpha)
    if not u >= 0:
        raise InputError(f"u must be nonnegative, got {u!r}")
    z = normal_quantile(1 - alpha / 2)
    # 2 - Phi(z + u) - Phi(z - u), written with upper tails to avoid cancellation
    return normal_sf(z + u) + normal_sf(z - u)


def oracle_power_bound(alpha, gamma, sigma, n, s0, sigma_cond, xi):
    """Upper bound on the power of any level-alpha test for one coordinate.

    ``G(alpha, gamma / sigma_eff) + exp(-xi^2 / 8)`` with
    ``sigma_eff = sigma / (sqrt(sigma_cond) * (sqrt(n - s0 + 1) + xi))``,
    clipped to 1.
    """
    if not sigma_cond > 0:
        raise InputError("sigma_cond must be positive")
    root = math.sqrt(n - s0 + 1)
    if not 0 <= xi <= 1.5 * root:
        raise InputError(f"xi must lie in [0, {1.5 * root:g}], got {xi!r}")
    sigma_eff = sigma / (math.sqrt(sigma_cond) * (root + xi))
    return min(1.0, power_function(alpha, gamma / sigma_eff) + math.exp(-xi * xi / 8))


def _psd_sqrt(q):
    w, v = np.linalg.eigh(0.5 * (q + q.T))
    floor = 1e-12 * max(np.trace(q), 0.0) / q.shape[0]
    if (w < floor).any():
        logger.warning("Q block is numerically singular; using a pseudo square root")
    w = np.where(w < floor, 0.0, w)
    return (v * np.sqrt(w)) @ v.T


def joint_region(dfit, dec, r, alpha, sigma_hat):
    """Simultaneous confidence box for the coordinates in ``r``.

    Forms ``Q_RR = sigma^2 / n * M_R S M_R'`` and uses the box ``[-z, z]^k``
    with ``z = Phi^{-1}((1 + (1 - alpha)^(1/k)) / 2)``, whose standard
    Gaussian mass is exactly ``1 - alpha``.
    """
    _check_alpha(alpha)
    r = tuple(int(i) for i in r)
    k = len(r)
    if k == 0 or len(set(r)) != k:
        raise InputError("r must be a nonempty set of distinct indices")
    if k > MAX_JOINT_SIZE:
        raise ScaleError(f"joint regions are limited to {MAX_JOINT_SIZE} coordinates")
    s = getattr(sigma_hat, "sigma_hat", sigma_hat)
    m_r = dec.m[list(r)]
    q = dfit.sigma_hat ** 2 / dfit.n * (m_r @ s @ m_r.T)
    z = normal_quantile((1 + (1 - alpha) ** (1 / k)) / 2)
    return JointRegion(r, dfit.theta_u[list(r)].copy(), _psd_sqrt(q), z)


__all__ = [
    "InferenceReport", "JointRegion", "confidence_intervals", "p_values",
    "test_family", "power_function", "oracle_power_bound", "joint_region",
    "standardized", "normal_cdf",
]
