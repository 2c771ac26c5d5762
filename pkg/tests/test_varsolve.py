import csv
import math

import numpy as np
import pytest

from tomofeat.fbp import fbp_feature
from tomofeat.filters import DataFilter, FbpFilter, FeatureKernel, radon_of_gaussian, sample_filter
from tomofeat.metrics import relative_l2
from tomofeat.phantom import analytic_radon, three_disc_phantom
from tomofeat.sampling import SamplingSpec, make_subset, spec_for_grid
from tomofeat.varsolve import (NumericalError, SolverConfig, add_noise, estimate_lipschitz,
                               export_objective_csv, fista, grad_adj, grad_fwd, objective_terms,
                               preprocess_rhs, smooth_gradient, soft_threshold)
from tomofeat.xform import RayTransform, Sinogram


def dense(op):
    n = op.image_shape[0]
    cols = []
    for k in range(n * n):
        e = np.zeros(n * n)
        e[k] = 1.0
        cols.append(op.forward(e.reshape(n, n)).ravel())
    return np.array(cols).T


def dense_grad(n):
    cols = []
    for k in range(n * n):
        e = np.zeros(n * n)
        e[k] = 1.0
        cols.append(grad_fwd(e.reshape(n, n)).ravel())
    return np.array(cols).T


# -- config ---------------------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(lam=-1), dict(mu=-0.1), dict(max_iters=0), dict(step=0),
                                dict(step="fast"), dict(power_iters=10), dict(data_weight=-2)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_data_weight(small_spec):
    assert SolverConfig().weight_for(small_spec) == 2.0
    assert SolverConfig().weight_for(small_spec.full()) == 1.0
    assert SolverConfig(data_weight=3.5).weight_for(small_spec) == 3.5


# -- building blocks ---------------------------------------------------------------

def test_soft_threshold_examples():
    assert soft_threshold(1.5, 1.0) == 0.5
    assert soft_threshold(-0.3, 0.5) == 0.0
    assert soft_threshold(-2.0, 0.5) == -1.5
    x = np.linspace(-3, 3, 13)
    np.testing.assert_array_equal(soft_threshold(x, 0.0), x)
    with pytest.raises(ValueError):
        soft_threshold(x, -1.0)


def test_preprocess_rhs(rng, small_spec):
    y = Sinogram(rng.standard_normal(small_spec.shape), small_spec)
    np.testing.assert_allclose(preprocess_rhs(y, DataFilter.delta(small_spec.ds)).data, y.data,
                               atol=1e-12)
    filt = sample_filter(FeatureKernel("log", alpha=0.2), small_spec)
    z = Sinogram(rng.standard_normal(small_spec.shape), small_spec)
    lhs = preprocess_rhs(y.with_data(2 * y.data - z.data), filt).data
    rhs = 2 * preprocess_rhs(y, filt).data - preprocess_rhs(z, filt).data
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)
    grad = preprocess_rhs(y, sample_filter(FeatureKernel("gaussian-gradient", alpha=0.2), small_spec))
    assert grad.channels == 2


def test_log_rhs_is_radon_of_laplacian():
    spec = SamplingSpec(300.0, 3, 300, 1.5)
    alpha, beta = 0.04, 0.05
    s2 = alpha ** 2 + beta ** 2
    y = Sinogram(np.tile(radon_of_gaussian(beta, spec.offsets), (3, 1)), spec)
    out = preprocess_rhs(y, sample_filter(FeatureKernel("log", alpha=alpha), spec)).data
    s = spec.offsets
    ref = radon_of_gaussian(math.sqrt(s2), s) * (s ** 2 / s2 - 1) / s2
    assert np.abs(out - ref).max() <= 1e-3 * np.abs(ref).max()


def test_grad_adjoint(rng):
    h = rng.standard_normal((9, 9))
    g = rng.standard_normal((2, 9, 9))
    assert np.vdot(grad_fwd(h), g) == pytest.approx(np.vdot(h, grad_adj(g)), rel=1e-13)


def test_smooth_gradient_finite_differences(rng):
    spec = SamplingSpec(30.0, 10, 12, 1.5)
    op = RayTransform(spec, 16)
    rhs = rng.standard_normal(spec.shape)
    h = rng.standard_normal((16, 16))
    mu, w = 0.3, 1.7
    grad = smooth_gradient(h, rhs, mu, op, w)
    f = lambda x: objective_terms(x, rhs, 0.0, mu, op, w)[0]
    eps = 1e-5
    for _ in range(8):
        d = rng.standard_normal((16, 16))
        fd = (f(h + eps * d) - f(h - eps * d)) / (2 * eps)
        assert fd == pytest.approx(np.vdot(grad, d), rel=1e-5)
    assert not smooth_gradient(np.zeros((16, 16)), np.zeros(spec.shape), mu, op).any()
    with pytest.raises(ValueError):
        smooth_gradient(np.zeros((15, 15)), rhs, mu, op)


def test_normal_equations_dense(rng):
    spec = SamplingSpec(20.0, 12, 8, 1.5)
    op = RayTransform(spec, 8)
    A = dense(op)
    D = dense_grad(8)
    rhs = rng.standard_normal(spec.shape)
    mu = 0.05
    h = np.linalg.solve(A.T @ A + 2 * mu * D.T @ D, A.T @ rhs.ravel()).reshape(8, 8)
    assert np.linalg.norm(smooth_gradient(h, rhs, mu, op)) <= 1e-8


def test_lipschitz_estimate(rng):
    spec = SamplingSpec(20.0, 12, 8, 1.5)
    op = RayTransform(spec, 8)
    A, D = dense(op), dense_grad(8)
    mu, w = 0.2, 3.0
    top = np.linalg.eigvalsh(w * A.T @ A + 2 * mu * D.T @ D).max()
    lip = estimate_lipschitz(op, mu, 200, weight=w)
    assert top <= lip <= 1.011 * top


# -- FISTA -----------------------------------------------------------------------

def test_zero_data_gives_zero(small_spec):
    y = Sinogram(np.zeros(small_spec.shape), small_spec)
    res = fista(y, None, 16, SolverConfig(lam=0.1, max_iters=1))
    assert not res.h.data.any() and res.iterations == 1
    assert res.trace.shape == (2, 4)


def test_fixed_point_tiny(rng):
    spec = SamplingSpec(20.0, 12, 8, 1.5)
    y = Sinogram(rng.standard_normal(spec.shape), spec)
    cfg = SolverConfig(lam=0.5, mu=0.1, max_iters=3000, record_objective=False)
    res = fista(y, None, 8, cfg)
    op = RayTransform(spec, 8)
    h = res.h.data
    step = 1.0 / res.lipschitz
    again = soft_threshold(h - step * smooth_gradient(h, y.data, cfg.mu, op,
                                                      res.meta["data_weight"]), cfg.lam * step)
    assert np.abs(again - h).max() <= 1e-6


def test_objective_decreases_overall(rng, small_spec):
    y = Sinogram(rng.standard_normal(small_spec.shape), small_spec)
    res = fista(y, sample_filter(FeatureKernel("log", alpha=0.3), small_spec), 16,
                SolverConfig(lam=0.01, mu=0.01, max_iters=200))
    obj = res.objective
    assert np.all(np.isfinite(res.trace))
    assert len(obj) == res.iterations + 1
    assert obj[-1] <= obj[0]
    for k in range(0, len(obj) - 50, 50):
        assert obj[k + 50] <= obj[k]


def test_linear_in_data_without_l1(rng, small_spec):
    y = Sinogram(rng.standard_normal(small_spec.shape), small_spec)
    cfg = SolverConfig(lam=0.0, mu=0.01, max_iters=50)
    a = fista(y, None, 16, cfg).h.data
    b = fista(y.with_data(3.0 * y.data), None, 16, cfg).h.data
    np.testing.assert_allclose(b, 3.0 * a, atol=1e-8 * np.abs(b).max())


def test_channel_decoupling(rng, small_spec):
    y = Sinogram(rng.standard_normal(small_spec.shape), small_spec)
    filt = sample_filter(FeatureKernel("gaussian-gradient", alpha=0.3), small_spec)
    cfg = SolverConfig(lam=0.01, mu=0.01, max_iters=40)
    both = fista(y, filt, 16, cfg)
    rhs = preprocess_rhs(y, filt)
    for c in range(2):
        single = fista(y, None, 16, cfg, rhs=rhs.with_data(rhs.data[c]))
        np.testing.assert_array_equal(both.h.data[c], single.h.data)


def test_divergence_is_reported(rng, small_spec):
    y = Sinogram(rng.standard_normal(small_spec.shape), small_spec)
    with pytest.raises(NumericalError):
        fista(y, None, 16, SolverConfig(lam=0.0, max_iters=100, step=10.0))


def test_matches_fbp_without_regularization():
    # lam = mu = 0 at full sampling: the least-squares feature map is the FBP one
    n, ext = 64, 0.99
    spec = spec_for_grid(48, 1.5)
    p = three_disc_phantom(n, ext)
    y = analytic_radon(p, spec)
    alpha = 3 * 2 * ext / (n - 1)
    res = fista(y, sample_filter(FeatureKernel("log", alpha=alpha), spec), n,
                SolverConfig(lam=0.0, mu=0.0, max_iters=500, record_objective=False), ext)
    ref = fbp_feature(y, FbpFilter("log", alpha), n, ext).data
    assert relative_l2(res.h.data, ref) <= 5e-2


def test_add_noise(small_spec):
    y = Sinogram(np.full(small_spec.shape, -4.0), small_spec)
    a = add_noise(y, 0.01, seed=3)
    b = add_noise(y, 0.01, seed=3)
    np.testing.assert_array_equal(a.data, b.data)
    assert np.std(a.data - y.data) == pytest.approx(0.04, rel=0.3)
    np.testing.assert_array_equal(add_noise(y, 0.0, 1).data, y.data)
    with pytest.raises(ValueError):
        add_noise(y, -0.1, 0)


def test_objective_csv(tmp_path, small_spec):
    y = Sinogram(np.ones(small_spec.shape), small_spec)
    res = fista(y, None, 16, SolverConfig(lam=0.01, mu=0.01, max_iters=5))
    path = tmp_path / "obj.csv"
    export_objective_csv(res, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["iteration", "objective", "data", "h1", "l1"]
    vals = np.array(rows[1:], dtype=float)
    assert vals.shape == (6, 5)
    np.testing.assert_allclose(vals[:, 1], vals[:, 2:].sum(axis=1), rtol=1e-12)
    res.trace = None
    with pytest.raises(ValueError):
        export_objective_csv(res, path)
