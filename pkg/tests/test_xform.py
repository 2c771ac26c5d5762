import math

import numpy as np
import pytest
from scipy.signal import fftconvolve

from tomofeat.filters import DataFilter, FeatureKernel, radon_of_gaussian, sample_filter
from tomofeat.sampling import SamplingSpec, make_subset
from tomofeat.xform import (Image, RayTransform, Sinogram, adjoint, backproject, convolve_s,
                            forward, fourier_s, inverse_fourier_s, pixel_coords)


def gaussian_image(n, alpha, extent=1.0):
    x = pixel_coords(n, extent)
    X, Y = np.meshgrid(x, x)
    return np.exp(-(X ** 2 + Y ** 2) / (2 * alpha ** 2)) / (2 * math.pi * alpha ** 2)


def gaussian_sino(spec, alpha):
    return Sinogram(np.tile(radon_of_gaussian(alpha, spec.offsets), (spec.n_angles, 1)), spec)


def test_zero_in_zero_out(small_spec):
    op = RayTransform(small_spec, 16)
    assert not op.forward(np.zeros((16, 16))).any()
    assert not op.adjoint(np.zeros(small_spec.shape)).any()
    assert not op.backproject(np.zeros(small_spec.shape)).any()


def test_dot_product(rng):
    spec = SamplingSpec(20.0, 8, 24, 1.5)
    op = RayTransform(spec, 32)
    worst = 0.0
    for _ in range(20):
        f = rng.standard_normal((32, 32))
        g = rng.standard_normal(spec.shape)
        lhs = np.vdot(op.forward(f), g)
        rhs = np.vdot(f, op.adjoint(g))
        worst = max(worst, abs(lhs - rhs) / (np.linalg.norm(f) * np.linalg.norm(g)))
    assert worst <= 1e-12


def test_dot_product_on_subset(rng):
    spec = make_subset(SamplingSpec(50.0, 50, 20, 1.5), 7, "limited", (0.2, 1.4))
    op = RayTransform(spec, 20, extent=0.9)
    f = rng.standard_normal((20, 20))
    g = rng.standard_normal(spec.shape)
    assert abs(np.vdot(op.forward(f), g) - np.vdot(f, op.adjoint(g))) <= \
        1e-12 * np.linalg.norm(f) * np.linalg.norm(g)


def test_single_bin_adjoint_is_a_strip():
    spec = SamplingSpec(20.0, 8, 24, 1.5)
    op = RayTransform(spec, 32)
    g = np.zeros(spec.shape)
    a, k = 3, 27
    g[a, k] = 1.0
    img = op.adjoint(g)
    assert img.any()
    x = pixel_coords(32, 1.0)
    X, Y = np.meshgrid(x, x)
    phi, s = spec.angles[a], spec.offsets[k]
    dist = np.abs(X * math.cos(phi) + Y * math.sin(phi) - s)
    # bilinear weights reach at most one pixel diagonal away from the sample line
    assert dist[img != 0].max() <= op.pitch * math.sqrt(2) + 1e-12


def test_linearity(rng, small_spec):
    op = RayTransform(small_spec, 16)
    f, g = rng.standard_normal((2, 16, 16))
    np.testing.assert_allclose(op.forward(2 * f - 3 * g),
                               2 * op.forward(f) - 3 * op.forward(g), atol=1e-12)


def test_gaussian_projection_moderate_grid():
    spec = SamplingSpec(100.0, 12, 64, 1.5)
    img = Image(gaussian_image(128, 0.1), 1.0)
    got = forward(img, spec).data
    ref = radon_of_gaussian(0.1, spec.offsets)
    assert np.linalg.norm(got - ref) / np.linalg.norm(np.broadcast_to(ref, got.shape)) <= 1e-2


def test_extent_mismatch():
    with pytest.raises(ValueError):
        RayTransform(SamplingSpec(10.0, 4, 4, 1.0), 16, extent=1.2)
    op = RayTransform(SamplingSpec(10.0, 4, 4, 1.5), 16)
    with pytest.raises(ValueError):
        op.forward(np.zeros((15, 15)))
    with pytest.raises(ValueError):
        op.adjoint(np.zeros((4, 8)))


def test_backproject_constant():
    spec = SamplingSpec(20.0, 16, 20, 1.5)
    img = backproject(Sinogram(np.ones(spec.shape), spec), 24).data
    np.testing.assert_allclose(img, 2 * math.pi, rtol=1e-12)


def test_backproject_ridge():
    spec = SamplingSpec(20.0, 6, 30, 1.5)
    g = np.zeros(spec.shape)
    a, k = 2, 35
    g[a, k] = 1.0
    img = backproject(Sinogram(g, spec), 41).data
    x = pixel_coords(41, 1.0)
    X, Y = np.meshgrid(x, x)
    u = (X * math.cos(spec.angles[a]) + Y * math.sin(spec.angles[a]) - spec.offsets[k]) / spec.ds
    expected = 2 * math.pi / spec.n_angles * np.clip(1 - np.abs(u), 0, None)
    np.testing.assert_allclose(img, expected, atol=1e-12)


def test_backproject_accepts_finer_offsets():
    spec = SamplingSpec(20.0, 6, 10, 1.5)
    op = RayTransform(spec, 16)
    fine = np.tile(np.linspace(-1, 1, 4 * 20 + 1), (6, 1))
    coarse = fine[:, ::4]
    # linear data: interpolation on either grid is exact
    np.testing.assert_allclose(op.backproject(fine), op.backproject(coarse), atol=1e-12)
    with pytest.raises(ValueError):
        op.backproject(np.zeros((6, 22)))


# -- convolution along s ------------------------------------------------------------

def test_delta_filter_is_identity(rng, small_spec):
    y = Sinogram(rng.standard_normal(small_spec.shape), small_spec)
    out = convolve_s(y, DataFilter.delta(small_spec.ds))
    np.testing.assert_allclose(out.data, y.data, atol=1e-12)


def test_gaussian_semigroup():
    spec = SamplingSpec(300.0, 3, 150, 1.5)
    alpha, beta = 0.05, 0.07
    y = gaussian_sino(spec, beta)
    out = convolve_s(y, sample_filter(FeatureKernel("gaussian", alpha=alpha), spec)).data
    ref = radon_of_gaussian(math.hypot(alpha, beta), spec.offsets)
    assert np.abs(out - ref).max() / ref.max() <= 1e-3


def test_direct_and_fft_agree(rng):
    spec = SamplingSpec(50.0, 5, 40, 1.5)
    y = Sinogram(rng.standard_normal(spec.shape), spec)
    filt = sample_filter(FeatureKernel("gaussian-gradient", alpha=0.1), spec)
    a = convolve_s(y, filt, "direct").data
    b = convolve_s(y, filt, "fft").data
    assert a.shape == (2,) + spec.shape
    assert np.abs(a - b).max() <= 1e-10 * np.abs(a).max()


def test_pitch_mismatch(small_spec):
    y = Sinogram(np.zeros(small_spec.shape), small_spec)
    with pytest.raises(ValueError):
        convolve_s(y, DataFilter.delta(small_spec.ds * 2))


# -- Fourier transform along s ----------------------------------------------------------

def test_fourier_slice_of_gaussian():
    spec = SamplingSpec(300.0, 2, 150, 1.5)
    alpha = 0.05
    spec_vals = fourier_s(gaussian_sino(spec, alpha), pad_to=1024)
    ref = np.exp(-alpha ** 2 * spec_vals.omega ** 2 / 2) / math.sqrt(2 * math.pi)
    assert np.abs(spec_vals.values - ref).max() <= 1e-3


def test_fourier_zero_and_roundtrip(rng, small_spec):
    zero = fourier_s(Sinogram(np.zeros(small_spec.shape), small_spec))
    assert not np.abs(zero.values).any()
    y = Sinogram(rng.standard_normal(small_spec.shape), small_spec)
    for pad in (None, 64):
        back = inverse_fourier_s(fourier_s(y, pad))
        np.testing.assert_allclose(back.data, y.data, atol=1e-12)


def test_parseval(rng, small_spec):
    y = Sinogram(rng.standard_normal(small_spec.shape), small_spec)
    sp = fourier_s(y, 80)
    d_omega = 2 * math.pi / (80 * small_spec.ds)
    lhs = np.sum(np.abs(sp.values) ** 2) * d_omega
    rhs = np.sum(y.data ** 2) * small_spec.ds
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_dual_convolution_identity():
    # R*u conv f  ~  R*(u conv_s R f) for a Gaussian f and u = R g_alpha
    n, alpha, beta = 161, 0.06, 0.05
    spec = SamplingSpec(300.0, 300, 150, 1.5)
    u_sino = gaussian_sino(spec, alpha)
    rhs = backproject(convolve_s(gaussian_sino(spec, beta),
                                 sample_filter(FeatureKernel("gaussian", alpha=alpha), spec)),
                      n).data
    bu = backproject(u_sino, n).data
    pitch = 2.0 / (n - 1)
    lhs = fftconvolve(bu, gaussian_image(n, beta), mode="same") * pitch ** 2
    x = pixel_coords(n, 1.0)
    X, Y = np.meshgrid(x, x)
    inner = X ** 2 + Y ** 2 < 0.3 ** 2
    assert np.linalg.norm((lhs - rhs)[inner]) / np.linalg.norm(rhs[inner]) <= 5e-2
