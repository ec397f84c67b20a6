"""Cyclic coordinate descent kernel shared by the LASSO and the row solver.

Both problems have the form

    minimize  0.5 * v' S v - c' v + t * ||v||_1

with S positive semidefinite. For the LASSO, S is the sample covariance and
c = X'Y/n; for a decorrelation row, c is a canonical basis vector. The
kernel keeps the gradient ``grad = c - S v`` up to date after every
coordinate move, so a sweep costs O(p) plus O(p) per coordinate that moves.
"""

import numpy as np
from numba import njit

CONVERGED = 0
MAX_ITER = 1
UNBOUNDED = 2
NEGATIVE_CURVATURE = 3

_DIVERGENCE = 1e12


@njit(cache=True, nogil=True)
def cd_sweeps(s, c, t, v, grad, tol, max_iter, obj_hist):
    """Run sweeps in place on ``v`` and ``grad``.

    Returns ``(status, sweeps)``. ``obj_hist[k]`` receives the objective
    (without any constant term) after sweep k.
    """
    p = v.shape[0]
    for it in range(max_iter):
        max_delta = 0.0
        for j in range(p):
            sjj = s[j, j]
            if sjj < 0.0:
                return NEGATIVE_CURVATURE, it
            old = v[j]
            if sjj == 0.0:
                # zero column of a PSD matrix: objective is linear in v_j
                if abs(grad[j]) > t:
                    return UNBOUNDED, it
                continue
            z = grad[j] + sjj * old
            if z > t:
                new = (z - t) / sjj
            elif z < -t:
                new = (z + t) / sjj
            else:
                new = 0.0
            if new != old:
                d = new - old
                v[j] = new
                for k in range(p):
                    grad[k] -= s[j, k] * d
                if abs(d) > max_delta:
                    max_delta = abs(d)
        obj = 0.0
        l1 = 0.0
        for k in range(p):
            # 0.5 v'Sv - c'v = -0.5 * v'(c + grad)
            obj -= 0.5 * v[k] * (c[k] + grad[k])
            l1 += abs(v[k])
        obj_hist[it] = obj + t * l1
        if max_delta <= tol:
            return CONVERGED, it + 1
        if max_delta > _DIVERGENCE or not np.isfinite(max_delta):
            return UNBOUNDED, it + 1
    return MAX_ITER, max_iter


def kkt_residual(grad, v, t):
    """Largest violation of the subgradient optimality conditions."""
    active = v != 0
    viol = np.where(active, np.abs(grad - t * np.sign(v)),
                    np.maximum(np.abs(grad) - t, 0.0))
    return float(viol.max()) if viol.size else 0.0
