import math

import numpy as np
import pytest

from debiased_lasso import (
    Dataset, DecorrelationOptions, InputError, bias_decomposition, build_decorrelator,
    debias, empirical_bias, lasso_fit, sample_covariance,
)
from debiased_lasso.decorrelate import Decorrelator
from debiased_lasso.simulation import SimConfig, _design, generate


def identity_decorrelator(s):
    p = s.shape[0]
    return Decorrelator(np.eye(p), 0.0, np.ones(p, bool), False, np.diag(s).copy(),
                        float(np.abs(s - np.eye(p)).max()))


def test_noiseless_exact_recovery():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((20, 5))
    theta0 = np.array([1.0, 0, 0, -2.0, 0])
    d = Dataset(x, x @ theta0)
    s = sample_covariance(d)
    dec = build_decorrelator(s, DecorrelationOptions(mu=0.1))
    f = debias(d, theta0, dec, 1.0)
    np.testing.assert_allclose(f.theta_u, theta0, atol=1e-13)
    np.testing.assert_array_equal(f.theta_n, theta0)


def test_identity_m_orthogonal_design_is_ols(rng):
    n = 6
    y = rng.standard_normal(n)
    d = Dataset(math.sqrt(n) * np.eye(n), y)
    s = sample_covariance(d)
    fit = lasso_fit(d, 0.3)
    f = debias(d, fit, identity_decorrelator(s.sigma_hat), 1.0)
    ols = np.linalg.lstsq(d.x, y, rcond=None)[0]
    np.testing.assert_allclose(f.theta_u, ols, atol=1e-12)
    np.testing.assert_allclose(f.theta_u, d.x.T @ y / n, atol=1e-12)


def test_p2_hand_instance():
    x = np.array([[1.0, 2.0], [0.5, -1.0], [2.0, 0.0]])
    y = np.array([1.0, -0.5, 2.5])
    d = Dataset(x, y)
    s = sample_covariance(d)
    dec = build_decorrelator(s, DecorrelationOptions(mu=0.05))
    theta_n = np.array([0.8, 0.1])
    f = debias(d, theta_n, dec, 0.7)
    # independent dense evaluation of theta_n + M X'(Y - X theta_n)/n
    m = dec.m
    r = [y[k] - (x[k, 0] * theta_n[0] + x[k, 1] * theta_n[1]) for k in range(3)]
    corr = [sum(x[k, j] * r[k] for k in range(3)) / 3 for j in range(2)]
    want = [theta_n[i] + m[i, 0] * corr[0] + m[i, 1] * corr[1] for i in range(2)]
    np.testing.assert_allclose(f.theta_u, want, atol=1e-12)
    np.testing.assert_allclose(f.q_diag, 0.49 * np.diag(m @ s.sigma_hat @ m.T) / 3, atol=1e-12)


def test_shape_and_sigma_checks(rng):
    d = Dataset(rng.standard_normal((5, 3)), rng.standard_normal(5))
    dec = identity_decorrelator(sample_covariance(d).sigma_hat)
    with pytest.raises(InputError):
        debias(d, np.zeros(2), dec, 1.0)
    with pytest.raises(InputError):
        debias(d, np.zeros(3), dec, 0.0)


@pytest.fixture(scope="module")
def synthetic():
    cfg = SimConfig(200, 120, 5, 1.0, seed=7)
    x, truth = _design(cfg)
    s = sample_covariance(x)
    dec = build_decorrelator(s, n=200)
    fits = []
    for rep in range(6):
        d, _ = generate(cfg, rep, (x, truth))
        fit = lasso_fit(d, 0.1, sigma_hat=s)
        fits.append((d, debias(d, fit, dec, 1.0)))
    return s, dec, truth, fits


def test_decomposition_identity_and_bound(synthetic):
    s, dec, truth, fits = synthetic
    for d, f in fits:
        diag = bias_decomposition(f, truth.theta_0, dec, s)
        np.testing.assert_allclose(diag.z + diag.delta,
                                   math.sqrt(d.n) * (f.theta_u - truth.theta_0), atol=1e-10)
        err1 = np.abs(f.theta_n - truth.theta_0).sum()
        assert diag.delta_max <= math.sqrt(d.n) * dec.coherence * err1 + 1e-8
        # variance lower bound forwarded through q_diag
        lhs = f.q_diag * d.n / f.sigma_hat**2
        assert np.all(lhs >= (1 - dec.row_mu) ** 2 / np.diag(s.sigma_hat) - 1e-8)
        assert np.all(f.q_diag > 0)


def test_delta_vanishes(synthetic):
    s, dec, truth, fits = synthetic
    d, f = fits[0]
    exact = debias(d, truth.theta_0, dec, 1.0)
    assert bias_decomposition(exact, truth.theta_0, dec, s).delta_max == 0.0
    inv = np.linalg.inv(s.sigma_hat)
    dec0 = Decorrelator(inv, 0.0, dec.row_feasible, False,
                        np.einsum("ij,jk,ik->i", inv, s.sigma_hat, inv), 0.0)
    f0 = debias(d, f.theta_n, dec0, 1.0)
    assert bias_decomposition(f0, truth.theta_0, dec0, s).delta_max <= 1e-9


def test_correction_is_linear_in_residual(synthetic):
    s, dec, truth, fits = synthetic
    d, f = fits[0]
    fitted = d.x @ f.theta_n
    d2 = Dataset(d.x, fitted + 2 * (d.y - fitted))
    f2 = debias(d2, f.theta_n, dec, 1.0)
    np.testing.assert_allclose(f2.theta_u - f.theta_n, 2 * (f.theta_u - f.theta_n), atol=1e-12)


def test_empirical_bias_trivial(synthetic):
    s, dec, truth, fits = synthetic
    f = fits[0][1]
    bu, bn = empirical_bias([f, f, f], truth.theta_0)
    np.testing.assert_allclose(bu, f.theta_u - truth.theta_0)
    np.testing.assert_allclose(bn, f.theta_n - truth.theta_0)
    with pytest.raises(InputError):
        empirical_bias([f], truth.theta_0)
    other = debias(fits[0][0], f.theta_n, identity_decorrelator(s.sigma_hat), 1.0)
    with pytest.raises(InputError):
        empirical_bias([f, other], truth.theta_0)


def test_empirical_bias_noiseless():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((30, 4))
    theta0 = np.array([0.0, 1.0, 0.0, 0.0])
    d = Dataset(x, x @ theta0)
    dec = build_decorrelator(sample_covariance(d), DecorrelationOptions(mu=0.1))
    f = debias(d, theta0, dec, 1.0)
    bu, bn = empirical_bias([f, f], theta0)
    np.testing.assert_allclose(bu, 0, atol=1e-13)
    np.testing.assert_allclose(bn, 0)


def test_debiasing_reduces_bias_on_support():
    cfg = SimConfig(1000, 600, 10, 0.5, seed=11)
    x, truth = _design(cfg)
    s = sample_covariance(x)
    dec = build_decorrelator(s, n=1000)
    lam = cfg.lam(1.0)
    fits = []
    for rep in range(20):
        d, _ = generate(cfg, rep, (x, truth))
        fits.append(debias(d, lasso_fit(d, lam, sigma_hat=s), dec, 1.0))
    bu, bn = empirical_bias(fits, truth.theta_0)
    sup = truth.support
    assert np.abs(bu[sup]).max() < np.abs(bn[sup]).max()
