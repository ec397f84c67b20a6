"""Regression instances, sample covariance and CSV loading."""

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError


def _as_finite(a, name, ndim):
    a = np.asarray(a, dtype=float)
    if a.ndim != ndim:
        raise InputError(f"{name} must be {ndim}-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class Dataset:
    """Design matrix ``x`` (n x p) and response ``y`` (n,)."""

    x: np.ndarray
    y: np.ndarray
    column_scale: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        x = _as_finite(self.x, "x", 2)
        y = _as_finite(self.y, "y", 1)
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise InputError(f"x must have at least one row and column, got {x.shape}")
        if x.shape[0] != y.shape[0]:
            raise InputError(
                f"x has {x.shape[0]} rows but y has length {y.shape[0]}")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def p(self):
        return self.x.shape[1]

    def standardized(self):
        """Return a copy with every column divided by its sample standard deviation.

        The divisors are kept in ``column_scale`` so coefficients and interval
        endpoints fitted on the copy can be mapped back with
        ``theta_original = theta_scaled / column_scale``. Constant columns keep
        scale 1.
        """
        sd = self.x.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
        return Dataset(self.x / sd, self.y, column_scale=sd)


@dataclass(frozen=True)
class SampleCovariance:
    sigma_hat: np.ndarray

    @property
    def p(self):
        return self.sigma_hat.shape[0]

    @property
    def diag(self):
        return np.diag(self.sigma_hat)


@dataclass(frozen=True)
class ProblemScale:
    n: int
    p: int

    @property
    def log_ratio(self):
        """sqrt(log(p) / n), the scale shared by lambda and mu defaults."""
        return math.sqrt(math.log(self.p) / self.n)


def sample_covariance(d):
    """Return ``X^T X / n`` wrapped in a :class:`SampleCovariance`.

    The result is symmetrized by averaging with its transpose so that it is
    exactly symmetric in floating point.
    """
    x = d.x if isinstance(d, Dataset) else _as_finite(d, "x", 2)
    s = x.T @ x / x.shape[0]
    s = 0.5 * (s + s.T)
    s.setflags(write=False)
    return SampleCovariance(s)


def load_csv(path, header=False, standardize=False):
    """Read a dataset whose first column is the response.

    Parameters
    ----------
    path : str or path-like
        UTF-8 CSV file with '.' as decimal separator.
    header : bool
        Skip the first row.
    standardize : bool
        Rescale every covariate column to unit sample standard deviation.
    """
    try:
        raw = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0,
                         ndmin=2, encoding="utf-8")
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if raw.shape[1] < 2:
        raise InputError(f"{path}: need a response column and at least one covariate")
    d = Dataset(raw[:, 1:], raw[:, 0])
    return d.standardized() if standardize else d
