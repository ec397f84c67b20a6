"""Synthetic experiments: circulant Gaussian designs, replicated noise, metrics."""

import csv
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ._normal import normal_quantile
from .data import Dataset, ProblemScale, sample_covariance
from .debias import bias_decomposition, debias
from .decorrelate import DecorrelationOptions, _thread_count, build_decorrelator
from .exceptions import InputError, NumericError, ScaleError
from .inference import test_family
from .lasso import lasso_fit, scaled_lasso_fit

logger = logging.getLogger(__name__)

NOISE_KINDS = ("gaussian", "rademacher", "centered_exponential")

# stream tags for the RNG key (seed, rep_index, tag)
_DESIGN, _SUPPORT, _NOISE = 1, 2, 3


def circulant_sigma(p, band=5, rho=0.1):
    """Symmetric circulant covariance: 1 on the diagonal, ``rho`` on the
    ``band`` nearest neighbours on each side (with wrap-around), 0 elsewhere."""
    if p < 2 * band + 1:
        raise ScaleError(f"p must be at least {2 * band + 1} so the bands do not overlap")
    sigma = np.eye(p)
    idx = np.arange(p)
    for k in range(1, band + 1):
        sigma[idx, (idx + k) % p] = rho
        sigma[(idx + k) % p, idx] = rho
    return sigma


def _rng(seed, rep, tag):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, rep, tag])))


@dataclass(frozen=True)
class SyntheticTruth:
    theta_0: np.ndarray
    support: np.ndarray
    sigma: float
    noise_kind: str

    @property
    def s0(self):
        return self.support.size


@dataclass(frozen=True)
class SimConfig:
    """One experiment configuration.

    ``lambda_scale`` and ``lambda_tilde_scale`` multiply ``sqrt(2 log p / n)``
    for the LASSO penalty (times the scaled-LASSO noise estimate) and the
    scaled-LASSO penalty; ``mu_scale`` multiplies ``sqrt(log p / n)``.
    """

    n: int
    p: int
    s0: int
    b: float
    n_reps: int = 20
    seed: int = 0
    alpha: float = 0.05
    noise_kind: str = "gaussian"
    sigma: float = 1.0
    lambda_scale: float = 4.0
    lambda_tilde_scale: float = 10.0
    mu_scale: float = 2.0
    beta: float | None = None

    def __post_init__(self):
        if not (self.n >= 1 and self.p >= 1 and 0 <= self.s0 <= self.p):
            raise InputError("need n, p >= 1 and 0 <= s0 <= p")
        if self.n_reps < 1:
            raise InputError("n_reps must be at least 1")
        if self.noise_kind not in NOISE_KINDS:
            raise InputError(f"noise_kind must be one of {NOISE_KINDS}")
        if not 0 < self.alpha < 1:
            raise InputError("alpha must lie in (0, 1)")
        if not self.sigma > 0:
            raise InputError("sigma must be positive")

    @property
    def lambda_tilde(self):
        return self.lambda_tilde_scale * math.sqrt(2 * math.log(self.p) / self.n)

    def lam(self, sigma_hat):
        return self.lambda_scale * sigma_hat * math.sqrt(2 * math.log(self.p) / self.n)

    @property
    def mu(self):
        return self.mu_scale * ProblemScale(self.n, self.p).log_ratio


@dataclass
class SimulationOutcome:
    config: SimConfig
    ell: float
    ell_s: float | None
    ell_sc: float | None
    cov: float
    cov_s: float | None
    cov_sc: float | None
    fp: float | None
    tp: float | None
    z_samples: np.ndarray
    pvals_null: np.ndarray
    delta_max_samples: np.ndarray
    sigma_hat_samples: np.ndarray
    n_failed: int = 0
    fallback_identity: bool = False
    delta_bound_violations: int = 0
    coherence: float = float("nan")
    per_coord_length: np.ndarray = field(default=None, repr=False)
    per_coord_coverage: np.ndarray = field(default=None, repr=False)
    support: np.ndarray = field(default=None, repr=False)

    @property
    def n_ok(self):
        return self.sigma_hat_samples.size

    def to_dict(self):
        out = {}
        for k, v in self.__dict__.items():
            if k == "config":
                out[k] = asdict(v)
            elif isinstance(v, np.ndarray):
                out[k] = v.tolist()
            else:
                out[k] = v
        return out


def _design(config):
    rng = _rng(config.seed, 0, _DESIGN)
    chol = np.linalg.cholesky(circulant_sigma(config.p))
    x = rng.standard_normal((config.n, config.p)) @ chol.T
    support = np.sort(_rng(config.seed, 0, _SUPPORT).choice(config.p, config.s0, replace=False))
    theta_0 = np.zeros(config.p)
    theta_0[support] = config.b
    return x, SyntheticTruth(theta_0, support, config.sigma, config.noise_kind)


def _noise(config, rep_index):
    rng = _rng(config.seed, rep_index + 1, _NOISE)
    n, sigma = config.n, config.sigma
    if config.noise_kind == "gaussian":
        return sigma * rng.standard_normal(n)
    if config.noise_kind == "rademacher":
        return sigma * (2.0 * rng.integers(0, 2, n) - 1.0)
    return sigma * (rng.standard_exponential(n) - 1.0)


def generate(config, rep_index, _design_cache=None):
    """Draw the dataset for one replicate of ``config``.

    The design and the coefficients depend only on ``config.seed``; the noise
    also depends on ``rep_index``.

    Raises
    ------
    NumericError
        If the Cholesky factorization of the covariance fails.
    """
    try:
        x, truth = _design_cache or _design(config)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"Cholesky factorization failed: {exc}") from exc
    y = x @ truth.theta_0 + _noise(config, rep_index)
    return Dataset(x, y), truth


def _replicate(config, design, s, dec, ms):
    d, truth = generate(config, design[2], design[:2])
    sfit = scaled_lasso_fit(d, config.lambda_tilde, sigma_hat=s)
    sigma_hat = sfit.sigma_hat
    fit = lasso_fit(d, config.lam(sigma_hat), sigma_hat=s, warm_start=sfit.theta)
    dfit = debias(d, fit, dec, sigma_hat)
    report = test_family(dfit, config.alpha)
    diag = bias_decomposition(dfit, truth.theta_0, dec, s)
    err_l1 = np.abs(fit.theta - truth.theta_0).sum()
    bound_ok = diag.delta_max <= math.sqrt(d.n) * dec.coherence * err_l1 + 1e-8
    z = (dfit.theta_u - truth.theta_0) / np.sqrt(dfit.q_diag)
    covered = (report.ci_lower <= truth.theta_0) & (truth.theta_0 <= report.ci_upper)
    return {
        "length": report.ci_upper - report.ci_lower,
        "covered": covered,
        "reject": report.reject,
        "p_values": report.p_values,
        "z": z,
        "delta_max": diag.delta_max,
        "bound_ok": bound_ok,
        "sigma_hat": sigma_hat,
    }


def run_configuration(config):
    """Run all replicates of ``config`` and aggregate the metrics.

    Replicates share the design, so the decorrelating matrix is built once.
    A replicate whose solver raises is logged and counted in ``n_failed``.
    """
    x, truth = _design(config)
    s = sample_covariance(x)
    opts = DecorrelationOptions(mu=config.mu, row_bound_beta=config.beta)
    dec = build_decorrelator(s, opts, x=x)
    if dec.fallback_identity:
        logger.warning("decorrelator fell back to M = I for %s", config)

    def job(rep):
        try:
            return _replicate(config, (x, truth, rep), s, dec, None)
        except (NumericError, InputError) as exc:
            logger.error("replicate %d failed: %s", rep, exc)
            return None

    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        results = list(pool.map(job, range(config.n_reps)))
    ok = [r for r in results if r is not None]
    n_failed = len(results) - len(ok)
    if not ok:
        raise NumericError("every replicate failed")

    on = truth.theta_0 != 0
    off = ~on
    length = np.mean([r["length"] for r in ok], axis=0)
    coverage = np.mean([r["covered"] for r in ok], axis=0)
    reject = np.mean([r["reject"] for r in ok], axis=0)

    def avg(v, mask):
        return float(v[mask].mean()) if mask.any() else None

    return SimulationOutcome(
        config=config,
        ell=float(length.mean()),
        ell_s=avg(length, on),
        ell_sc=avg(length, off),
        cov=float(coverage.mean()),
        cov_s=avg(coverage, on),
        cov_sc=avg(coverage, off),
        fp=avg(reject, off),
        tp=avg(reject, on),
        z_samples=np.concatenate([r["z"] for r in ok]),
        pvals_null=np.concatenate([r["p_values"][off] for r in ok]),
        delta_max_samples=np.array([r["delta_max"] for r in ok]),
        sigma_hat_samples=np.array([r["sigma_hat"] for r in ok]),
        n_failed=n_failed,
        fallback_identity=dec.fallback_identity,
        delta_bound_violations=int(sum(not r["bound_ok"] for r in ok)),
        coherence=dec.coherence,
        per_coord_length=length,
        per_coord_coverage=coverage,
        support=np.flatnonzero(on),
    )


def export_diagnostics(outcome, path):
    """Write ``qq.csv``, ``pval_cdf.csv`` and ``metrics.json`` under ``path``.

    Returns the list of written files.
    """
    if outcome is None or outcome.z_samples.size == 0:
        raise InputError("outcome has no samples to export")
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        z = np.sort(outcome.z_samples)
        m = z.size
        theo = [normal_quantile((i - 0.5) / m) for i in range(1, m + 1)]
        qq = path / "qq.csv"
        with qq.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["normal_quantile", "sample_quantile"])
            w.writerows(zip(theo, z.tolist()))
        pv = np.sort(outcome.pvals_null)
        cdf = path / "pval_cdf.csv"
        with cdf.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["p_value", "ecdf"])
            w.writerows(zip(pv.tolist(), (np.arange(1, pv.size + 1) / pv.size).tolist()))
        metrics = path / "metrics.json"
        metrics.write_text(json.dumps(outcome.to_dict(), indent=2))
    except OSError as exc:
        raise OSError(f"cannot write diagnostics to {path}: {exc}") from exc
    return [qq, cdf, metrics]
