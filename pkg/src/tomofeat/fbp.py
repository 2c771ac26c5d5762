"""Filtered backprojection for images and feature maps.

``R^-1 = R* Lambda`` with ``F_s(Lambda g) = |omega| F_s g / (4 pi)``.  Feature
maps come out of the same pipeline by multiplying the ramp with a feature
window (``i omega`` for the gradient, ``-omega^2`` for the Laplacian, both
with Gaussian damping).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import fft

from .filters import FbpFilter
from .xform import Image, RayTransform, Sinogram

__all__ = ["ramp_response", "filter_projections", "fbp_feature", "fbp_reconstruct"]


def ramp_response(n_fft: int, ds: float) -> np.ndarray:
    """DFT of the spatial Ram-Lak kernel, i.e. ``|omega|`` band-limited to ``pi/ds``.

    Building the ramp from its exact spatial samples (rather than sampling
    ``|omega|`` directly) keeps the zero-frequency response correct.
    """
    n = np.concatenate([np.arange(0, n_fft // 2 + 1), np.arange(-((n_fft - 1) // 2), 0)])
    k = np.zeros(n_fft)
    k[0] = math.pi / (2 * ds ** 2)
    odd = n % 2 == 1
    k[odd] = -2.0 / (math.pi * n[odd].astype(float) ** 2 * ds ** 2)
    return fft.fft(k * ds).real


def filter_projections(sino: Sinogram, filt: FbpFilter, pad_factor: float = 2.0,
                       upsample: int = 1) -> np.ndarray:
    """Apply ``filt`` along ``s``; returns a ``(channels, m, q*(n-1)+1)`` real array.

    With ``upsample = q > 1`` the filtered projections are returned on an
    offset grid ``q`` times finer (trigonometric interpolation), which keeps
    linear interpolation during backprojection from smearing errors along
    the backprojected lines.
    """
    if sino.channels != 1:
        raise ValueError("FBP expects a single-channel sinogram")
    q = int(upsample)
    if q < 1:
        raise ValueError("upsample must be a positive integer")
    spec = sino.spec
    y = sino.channel_data()[0]
    n = spec.n_offsets
    n_fft = fft.next_fast_len(int(math.ceil(max(pad_factor, 2.0) * n)))
    omega = 2.0 * math.pi * fft.fftfreq(n_fft, d=spec.ds)
    ramp = ramp_response(n_fft, spec.ds) / (4.0 * math.pi)
    window = filt.window(omega, spec.angles)
    spectrum = fft.fft(y, n_fft, axis=-1)[None] * ramp * window
    if q > 1:
        # zero-insert in the middle of the spectrum, splitting the Nyquist bin
        half = (n_fft + 1) // 2
        fine = np.zeros(spectrum.shape[:-1] + (q * n_fft,), complex)
        fine[..., :half] = spectrum[..., :half]
        fine[..., -(n_fft - half):] = spectrum[..., half:]
        if n_fft % 2 == 0:
            nyq = spectrum[..., n_fft // 2]
            fine[..., n_fft // 2] = 0.5 * nyq
            fine[..., -(n_fft // 2)] = 0.5 * nyq
        out = q * fft.ifft(fine, axis=-1)[..., :q * (n - 1) + 1]
    else:
        out = fft.ifft(spectrum, axis=-1)[..., :n]
    return np.ascontiguousarray(out.real)


def fbp_feature(sino: Sinogram, filt: FbpFilter, grid_size: int, extent: float = 1.0,
                feature_unit: float = 1.0, pad_factor: float = 2.0, upsample: int = 4) -> Image:
    """Feature map ``R*(W * Rf)`` from a single-channel sinogram.

    The result has two channels for the gradient filter.  ``feature_unit``
    rescales derivatives to a chosen length unit (see
    :func:`tomofeat.filters.sample_filter`).
    """
    op = RayTransform(sino.spec, grid_size, extent)
    filtered = filter_projections(sino, filt, pad_factor, upsample)
    data = np.stack([op.backproject(np.ascontiguousarray(c)) for c in filtered])
    data *= float(feature_unit) ** filt.order
    return Image(data[0] if filt.channels == 1 else data, extent)


def fbp_reconstruct(sino: Sinogram, grid_size: int, extent: float = 1.0,
                    alpha: float | None = None, b: float | None = None,
                    pad_factor: float = 2.0, upsample: int = 4) -> Image:
    """Plain FBP; ``alpha`` applies Gaussian smoothing, ``b`` an ideal lowpass.

    With neither, the ramp is cut at the Nyquist frequency of the offset grid.
    Applied to data already convolved with a data filter ``u``, this yields the
    corresponding feature map.
    """
    filt = FbpFilter("ramlak", alpha=alpha, b=b)
    return fbp_feature(sino, filt, grid_size, extent, 1.0, pad_factor, upsample)
