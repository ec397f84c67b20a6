"""Row-by-row construction of the decorrelating matrix M.

Each row solves

    minimize m' S m   subject to   ||S m - e_i||_inf <= mu

through its penalized dual ``0.5 m' S m - m_i + mu ||m||_1`` (coordinate
descent). Whatever the solver path, feasibility is certified afterwards by
recomputing ``||S m - e_i||_inf`` from scratch.
"""

import itertools
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _cd
from .data import ProblemScale, SampleCovariance
from .exceptions import InputError, NumericError, ScaleError

logger = logging.getLogger(__name__)

FEASIBILITY_RTOL = 1e-8
# absolute slack so that mu = 0 (exact inverse rows) can be certified in floating point
FEASIBILITY_ATOL = 1e-10
_POLISH_ROUNDS = 4


class RowSolution(NamedTuple):
    m: np.ndarray
    feasible: bool
    kkt_residual: float


class BoundedRowSolution(NamedTuple):
    m: np.ndarray
    feasible: bool


@dataclass(frozen=True)
class DecorrelationOptions:
    """Settings for :func:`build_decorrelator`.

    ``mu=None`` resolves to ``2 * sqrt(log(p) / n)``. ``row_bound_beta``
    switches every row to the variant with the extra ``||X m||_inf <= n**beta``
    constraint (for non-Gaussian noise).
    """

    mu: float | None = None
    mu_growth: float = 1.5
    max_mu_inflations: int = 10
    row_bound_beta: float | None = None
    tol: float = 1e-10
    max_iter: int = 20000
    mu_scale: float = 2.0

    def __post_init__(self):
        if self.mu is not None and not self.mu >= 0:
            raise InputError(f"mu must be nonnegative, got {self.mu!r}")
        if not self.mu_growth > 1:
            raise InputError("mu_growth must exceed 1")
        if self.row_bound_beta is not None and not 0 < self.row_bound_beta < 0.5:
            raise InputError("row_bound_beta must lie in (0, 1/2)")

    def resolve_mu(self, n, p):
        if self.mu is not None:
            return float(self.mu)
        return self.mu_scale * ProblemScale(n, p).log_ratio


@dataclass(frozen=True)
class Decorrelator:
    m: np.ndarray
    mu: float
    row_feasible: np.ndarray
    fallback_identity: bool
    row_variance: np.ndarray
    coherence: float
    row_mu: np.ndarray = field(default=None, compare=False)
    row_kkt: np.ndarray = field(default=None, compare=False)


def _cov(sigma_hat):
    s = sigma_hat.sigma_hat if isinstance(sigma_hat, SampleCovariance) else sigma_hat
    return np.ascontiguousarray(s, dtype=float)


def _box_violation(s, m, i):
    r = s @ m
    r[i] -= 1.0
    return float(np.abs(r).max())


def solve_row(sigma_hat, i, mu, tol=1e-10, max_iter=20000, warm_start=None):
    """Solve the decorrelation program for row ``i``.

    Returns
    -------
    RowSolution
        ``feasible`` is set only when ``||S m - e_i||_inf <= mu (1 + 1e-8) + 1e-10``
        holds on the returned ``m``.

    Raises
    ------
    NumericError
        If a negative diagonal entry exposes a non-PSD matrix.
    """
    s = _cov(sigma_hat)
    p = s.shape[0]
    if not 0 <= i < p:
        raise InputError(f"row index {i} out of range for p={p}")
    if not mu >= 0:
        raise InputError(f"mu must be nonnegative, got {mu!r}")
    e = np.zeros(p)
    e[i] = 1.0
    m = np.zeros(p) if warm_start is None else np.array(warm_start, dtype=float)
    hist = np.empty(max_iter)
    bound = mu * (1 + FEASIBILITY_RTOL) + FEASIBILITY_ATOL
    target = float(mu)
    kkt = math.inf
    for _ in range(_POLISH_ROUNDS):
        grad = e - s @ m
        status, _ = _cd.cd_sweeps(s, e, target, m, grad, tol, max_iter, hist)
        if status == _cd.NEGATIVE_CURVATURE:
            raise NumericError("sample covariance has a negative diagonal entry")
        if status == _cd.UNBOUNDED:
            return RowSolution(np.zeros(p), False, math.inf)
        grad = e - s @ m
        kkt = _cd.kkt_residual(grad, m, target)
        excess = _box_violation(s, m, i) - bound
        if excess <= 0:
            return RowSolution(m, True, kkt)
        if status != _cd.CONVERGED or excess > 1e-3 * max(mu, 1e-12):
            break
        # converged, but rounding left the box slightly violated: tighten and re-solve warm
        target = max(target - 2 * excess - mu * FEASIBILITY_RTOL, 0.0)
        if target == 0.0 and mu == 0.0:
            break
    return RowSolution(m, False, kkt)


def row_objective(sigma_hat, m):
    s = _cov(sigma_hat)
    return float(m @ s @ m)


def _project_box(z, lo, hi):
    return np.minimum(np.maximum(z, lo), hi)


def solve_row_bounded(sigma_hat, x, i, mu, beta, tol=1e-10, max_iter=500,
                      rho=1.0, eig=None, shrink=1e-4, admm_tol=1e-9):
    """Row program with the additional bound ``||X m||_inf <= n**beta``.

    Starts from :func:`solve_row`; if that solution already meets the bound it
    is returned unchanged. Otherwise runs an ADMM splitting with auxiliary
    variable ``z = (S m, X m / sqrt(n))`` projected onto both boxes, coupling
    weight ``rho``. The boxes are shrunk by the relative margin ``shrink`` so
    that an approximately converged iterate is still feasible for the original
    constraints, which are certified on exit.

    ``eig`` may carry a precomputed ``numpy.linalg.eigh(S)`` to share across rows.
    """
    if not 0 < beta < 0.5:
        raise InputError("beta must lie in (0, 1/2)")
    s = _cov(sigma_hat)
    x = np.asarray(x, dtype=float)
    n, p = x.shape
    row_cap = n ** beta
    start = solve_row(s, i, mu, tol=tol)
    if not start.feasible:
        return BoundedRowSolution(start.m, False)
    if np.abs(x @ start.m).max() <= row_cap * (1 + FEASIBILITY_RTOL):
        return BoundedRowSolution(start.m, True)

    lam, v = eig if eig is not None else np.linalg.eigh(s)
    lam = np.maximum(lam, 0.0)
    sqrt_n = math.sqrt(n)
    e = np.zeros(p)
    e[i] = 1.0
    mu_in = mu * (1 - shrink)
    cap_in = row_cap / sqrt_n * (1 - shrink)
    lo = np.concatenate([e - mu_in, np.full(n, -cap_in)])
    hi = np.concatenate([e + mu_in, np.full(n, cap_in)])

    def apply_a(m):
        return np.concatenate([s @ m, x @ m / sqrt_n])

    def apply_at(w):
        return s @ w[:p] + x.T @ w[p:] / sqrt_n

    # OSQP-style iteration for min m'Sm s.t. A m in [lo, hi]; the linear system
    # (2S + prox I + rho A'A) is diagonal in the eigenbasis since A'A = S^2 + S.
    prox = 1e-6
    relax = 1.6
    k_diag = 2 * lam + prox + rho * (lam * lam + lam)
    m = start.m.copy()
    z = _project_box(apply_a(m), lo, hi)
    y = np.zeros(n + p)
    for _ in range(max_iter):
        rhs = prox * m + apply_at(rho * z - y)
        m_t = v @ ((v.T @ rhs) / k_diag)
        z_t = apply_a(m_t)
        m = relax * m_t + (1 - relax) * m
        z_rel = relax * z_t + (1 - relax) * z
        z = _project_box(z_rel + y / rho, lo, hi)
        y = y + rho * (z_rel - z)
        r_prim = np.abs(apply_a(m) - z).max()
        r_dual = np.abs(2 * (s @ m) + apply_at(y)).max()
        if r_prim <= admm_tol and r_dual <= admm_tol:
            break
    feasible = (_box_violation(s, m, i) <= mu * (1 + FEASIBILITY_RTOL) + FEASIBILITY_ATOL
                and np.abs(x @ m).max() <= row_cap * (1 + FEASIBILITY_RTOL))
    return BoundedRowSolution(m, bool(feasible))


def generalized_coherence(sigma_hat, m):
    """Largest entry of ``|M S - I|``."""
    s = _cov(sigma_hat)
    m = np.asarray(m, dtype=float)
    if m.shape != s.shape:
        raise InputError(f"M has shape {m.shape}, covariance has shape {s.shape}")
    return float(np.abs(m @ s - np.eye(s.shape[0])).max())


def _thread_count():
    try:
        return max(1, int(os.environ.get("DEBIAS_THREADS", os.cpu_count() or 1)))
    except ValueError:
        return 1


def build_decorrelator(sigma_hat, opts=None, n=None, x=None):
    """Solve every row of M, inflating mu per row when a row is infeasible.

    A row that is still infeasible after ``opts.max_mu_inflations`` growth
    steps triggers the terminal fallback ``M = I``.

    Parameters
    ----------
    sigma_hat : SampleCovariance
    opts : DecorrelationOptions, optional
    n : int, optional
        Sample size, needed only to resolve the default mu when ``x`` is absent.
    x : ndarray, optional
        Design matrix; required when ``opts.row_bound_beta`` is set.
    """
    opts = opts or DecorrelationOptions()
    s = _cov(sigma_hat)
    p = s.shape[0]
    if x is not None:
        n = x.shape[0]
    if opts.mu is None and n is None:
        raise InputError("the default mu needs the sample size n")
    mu0 = opts.resolve_mu(n, p)
    bounded = opts.row_bound_beta is not None
    if bounded and x is None:
        raise InputError("row_bound_beta requires the design matrix x")
    eig = np.linalg.eigh(s) if bounded else None

    def one_row(i):
        mu = mu0
        for step in range(opts.max_mu_inflations + 1):
            if bounded:
                sol = solve_row_bounded(s, x, i, mu, opts.row_bound_beta,
                                        tol=opts.tol, eig=eig)
                kkt = 0.0
            else:
                sol = solve_row(s, i, mu, tol=opts.tol, max_iter=opts.max_iter)
                kkt = sol.kkt_residual
            if sol.feasible:
                return sol.m, True, mu, kkt
            mu *= opts.mu_growth
        return sol.m, False, mu / opts.mu_growth, kkt

    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        rows = list(pool.map(one_row, range(p)))

    m = np.array([r[0] for r in rows])
    feasible = np.array([r[1] for r in rows])
    row_mu = np.array([r[2] for r in rows])
    row_kkt = np.array([r[3] for r in rows])
    if not feasible.all():
        logger.warning("%d of %d rows infeasible after mu inflation; using M = I",
                       int((~feasible).sum()), p)
        m = np.eye(p)
        return Decorrelator(m, float(row_mu.max()), feasible, True, np.diag(s).copy(),
                            generalized_coherence(s, m), row_mu, row_kkt)
    sm = m @ s
    row_variance = np.einsum("ij,ij->i", sm, m)
    coherence = float(np.abs(sm - np.eye(p)).max())
    return Decorrelator(m, float(row_mu.max()), feasible, False, row_variance,
                        coherence, row_mu, row_kkt)


def _project_simplex(u):
    # Euclidean projection onto {u >= 0, sum u = 1}
    srt = np.sort(u)[::-1]
    css = np.cumsum(srt) - 1.0
    k = np.arange(1, u.size + 1)
    rho = np.nonzero(srt - css / k > 0)[0][-1]
    return np.maximum(u - css[rho] / (rho + 1), 0.0)


def _project_l1_ball(w, radius):
    if np.abs(w).sum() <= radius:
        return w
    return np.sign(w) * _project_simplex(np.abs(w) / radius) * radius


def compatibility_constant_bruteforce(sigma_hat, support, restarts=5, iters=3000, seed=0):
    """Upper-bound estimate of the compatibility constant phi^2(S, support).

    Minimizes ``|S| * theta' S theta / ||theta_S||_1^2`` over the cone
    ``||theta_{S^c}||_1 <= 3 ||theta_S||_1``. Normalizing ``||theta_S||_1 = 1``
    and fixing the sign pattern on the support turns each piece into a convex
    problem, solved by accelerated projected gradient from random starts.
    Only meant for small test problems (p <= 12).
    """
    s = _cov(sigma_hat)
    p = s.shape[0]
    if p > 12:
        raise ScaleError("brute-force compatibility constant is limited to p <= 12")
    support = sorted(set(int(j) for j in support))
    if not support:
        raise InputError("support must be nonempty")
    k = len(support)
    off = [j for j in range(p) if j not in support]
    step = 1.0 / (2 * max(np.linalg.eigvalsh(s).max(), 1e-12))
    rng = np.random.default_rng(seed)
    best = math.inf
    # theta and -theta give the same ratio, so fix the first sign
    for tail in itertools.product((1.0, -1.0), repeat=k - 1):
        signs = np.array((1.0,) + tail)
        for _ in range(restarts):
            u = _project_simplex(rng.random(k))
            w = _project_l1_ball(rng.standard_normal(len(off)), 3.0)
            theta = np.zeros(p)
            prev = theta.copy()
            for t in range(iters):
                theta[support] = signs * u
                theta[off] = w
                look = theta + (t / (t + 3)) * (theta - prev)
                prev = theta.copy()
                g = 2 * s @ look
                u = _project_simplex(signs * (look[support] - step * g[support]))
                w = _project_l1_ball(look[off] - step * g[off], 3.0)
            theta[support] = signs * u
            theta[off] = w
            best = min(best, k * float(theta @ s @ theta))
    return best
