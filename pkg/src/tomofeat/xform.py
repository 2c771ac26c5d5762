"""Discrete ray transform, its exact transpose, backprojection and
radial (``s``-variable) convolution / Fourier utilities.

Two backprojections are provided on purpose:

* :func:`adjoint` is the matrix transpose of :func:`forward` and is what the
  iterative solver needs;
* :func:`backproject` is a quadrature of the continuous dual transform
  ``R*g(x) = int_{S^1} g(theta, <theta, x>) dtheta`` and is what filtered
  backprojection needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft

from . import _kernels
from .sampling import SamplingSpec

__all__ = [
    "Image",
    "Sinogram",
    "Spectrum",
    "RayTransform",
    "pixel_coords",
    "forward",
    "adjoint",
    "backproject",
    "convolve_s",
    "fourier_s",
    "inverse_fourier_s",
]


def pixel_coords(n: int, extent: float) -> np.ndarray:
    """Pixel-centre coordinates along one axis (``n`` points on ``[-extent, extent]``)."""
    if n < 2:
        raise ValueError("grid size must be at least 2")
    return np.linspace(-extent, extent, n)


@dataclass
class Image:
    """Square pixel grid on ``[-extent, extent]^2``.

    ``data`` has shape ``(n, n)`` or ``(channels, n, n)``; row index runs
    along ``y`` and column index along ``x``.
    """

    data: np.ndarray
    extent: float = 1.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim not in (2, 3) or self.data.shape[-1] != self.data.shape[-2]:
            raise ValueError(f"image data must be (n, n) or (c, n, n), got {self.data.shape}")
        if self.data.ndim == 3 and self.data.shape[0] not in (1, 2):
            raise ValueError("images carry 1 or 2 channels")
        if self.data.shape[-1] < 2:
            raise ValueError("grid size must be at least 2")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("image contains non-finite values")

    @property
    def grid_size(self) -> int:
        return self.data.shape[-1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else self.data.shape[0]

    @property
    def pitch(self) -> float:
        return 2.0 * self.extent / (self.grid_size - 1)

    @property
    def coords(self) -> np.ndarray:
        return pixel_coords(self.grid_size, self.extent)

    def channel_data(self) -> np.ndarray:
        """Data as ``(channels, n, n)``."""
        return self.data if self.data.ndim == 3 else self.data[None]


@dataclass
class Sinogram:
    """Radon samples on ``spec``; ``data`` is ``(m, 2N_s+1)`` or ``(channels, m, 2N_s+1)``."""

    data: np.ndarray
    spec: SamplingSpec

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape[-2:] != self.spec.shape:
            raise ValueError(f"sinogram shape {self.data.shape} does not match spec {self.spec.shape}")
        if self.data.ndim == 3 and self.data.shape[0] not in (1, 2):
            raise ValueError("sinograms carry 1 or 2 channels")
        if self.data.ndim not in (2, 3):
            raise ValueError("sinogram data must be 2-D or 3-D")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("sinogram contains non-finite values")

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else self.data.shape[0]

    def channel_data(self) -> np.ndarray:
        return self.data if self.data.ndim == 3 else self.data[None]

    def with_data(self, data: np.ndarray) -> Sinogram:
        return Sinogram(data, self.spec)


class RayTransform:
    """Array-level discrete ray transform ``R_Theta`` for a fixed geometry.

    Line integrals ``int f(s*theta + t*theta_perp) dt`` are approximated by
    the composite trapezoidal rule in ``t`` with step equal to the pixel
    pitch, sampling ``f`` by bilinear interpolation.  Sample points outside
    the image square contribute zero, so the trapezoid end weights never
    come into play.
    """

    def __init__(self, spec: SamplingSpec, grid_size: int, extent: float = 1.0):
        if spec.radial_halfwidth < extent * (1 - 1e-12):
            raise ValueError(
                f"offset grid half-width {spec.radial_halfwidth} does not cover the "
                f"image disc of radius {extent}")
        self.spec = spec
        self.grid_size = int(grid_size)
        self.extent = float(extent)
        self.coords = pixel_coords(self.grid_size, self.extent)
        self.pitch = 2.0 * self.extent / (self.grid_size - 1)
        phi = spec.angles
        self._cos = np.ascontiguousarray(np.cos(phi))
        self._sin = np.ascontiguousarray(np.sin(phi))
        self._offsets = np.ascontiguousarray(spec.offsets)
        self._dt = self.pitch
        self._n_t = int(math.ceil(self.extent * math.sqrt(2.0) / self._dt)) + 1

    @property
    def image_shape(self) -> tuple[int, int]:
        return self.grid_size, self.grid_size

    @property
    def data_shape(self) -> tuple[int, int]:
        return self.spec.shape

    def forward(self, f: np.ndarray) -> np.ndarray:
        f = np.ascontiguousarray(f, dtype=float)
        if f.shape != self.image_shape:
            raise ValueError(f"expected image of shape {self.image_shape}, got {f.shape}")
        return _kernels.ray_forward(f, self._cos, self._sin, self._offsets,
                                    -self.extent, self.pitch, self._dt, self._n_t)

    def adjoint(self, g: np.ndarray) -> np.ndarray:
        g = np.ascontiguousarray(g, dtype=float)
        if g.shape != self.data_shape:
            raise ValueError(f"expected sinogram of shape {self.data_shape}, got {g.shape}")
        return _kernels.ray_adjoint(g, self._cos, self._sin, self._offsets,
                                    -self.extent, self.pitch, self._dt, self._n_t,
                                    self.grid_size)

    def backproject(self, g: np.ndarray) -> np.ndarray:
        """Quadrature of the continuous dual transform over the full circle.

        Each measured angle stands for ``2*pi/|Theta|`` of the circle; the
        opposite half is supplied by the symmetry ``Rf(-theta, -s) = Rf(theta, s)``.
        ``g`` may also be sampled ``q`` times finer in ``s`` over the same
        offset range, i.e. have ``q*(N-1)+1`` columns.
        """
        g = np.ascontiguousarray(g, dtype=float)
        m, n = self.data_shape
        cols = g.shape[-1] if g.ndim == 2 else -1
        if g.ndim != 2 or g.shape[0] != m or cols < 2 or (cols - 1) % (n - 1):
            raise ValueError(f"expected sinogram of shape {self.data_shape}, got {g.shape}")
        step = self.spec.ds * (n - 1) / (cols - 1)
        weight = 2.0 * math.pi / self.spec.n_angles
        return _kernels.backproject_linear(g, self._cos, self._sin,
                                           float(self._offsets[0]), step,
                                           self.coords, weight)


def _channelwise(fn, arr: np.ndarray) -> np.ndarray:
    if arr.ndim == 2:
        return fn(arr)
    return np.stack([fn(a) for a in arr])


def forward(img: Image, spec: SamplingSpec) -> Sinogram:
    """Sample the ray transform of ``img`` on ``spec`` (channelwise)."""
    op = RayTransform(spec, img.grid_size, img.extent)
    return Sinogram(_channelwise(op.forward, img.data), spec)


def adjoint(sino: Sinogram, grid_size: int, extent: float = 1.0) -> Image:
    """Exact transpose of :func:`forward` for an ``grid_size``-pixel image."""
    op = RayTransform(sino.spec, grid_size, extent)
    return Image(_channelwise(op.adjoint, sino.data), extent)


def backproject(sino: Sinogram, grid_size: int, extent: float = 1.0) -> Image:
    """Continuous-measure backprojection ``R*`` evaluated at the pixel centres."""
    op = RayTransform(sino.spec, grid_size, extent)
    return Image(_channelwise(op.backproject, sino.data), extent)


# -- convolution along s ------------------------------------------------------

def _conv_direct(y: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # y: (m, n); taps: (m or 1, 2L+1) centred on index L
    n = y.shape[-1]
    half = taps.shape[-1] // 2
    out = np.zeros(np.broadcast_shapes(y.shape, taps.shape[:-1] + (n,)))
    for q in range(-half, half + 1):
        w = taps[:, q + half:q + half + 1]
        if q >= 0:
            if q >= n:
                continue
            out[:, q:] += w * y[:, :n - q]
        else:
            if -q >= n:
                continue
            out[:, :n + q] += w * y[:, -q:]
    return out


def _conv_fft(y: np.ndarray, taps: np.ndarray) -> np.ndarray:
    n = y.shape[-1]
    k = taps.shape[-1]
    half = k // 2
    size = fft.next_fast_len(n + k - 1, real=True)
    full = fft.irfft(fft.rfft(y, size, axis=-1) * fft.rfft(taps, size, axis=-1), size, axis=-1)
    return full[..., half:half + n]


def convolve_s(sino: Sinogram, filt, method: str = "auto") -> Sinogram:
    """Convolve each projection with a tabulated data filter along ``s``.

    The discrete sum is scaled by the offset step, so it approximates the
    continuous convolution ``int g(theta, s - r) u(theta, r) dr``.  Output
    lives on the same offset grid as the input (data outside the grid is
    taken to be zero).  ``method`` is ``"direct"``, ``"fft"`` or ``"auto"``.

    A one-channel sinogram convolved with a two-channel filter gives a
    two-channel result.
    """
    spec = sino.spec
    if not math.isclose(filt.pitch, spec.ds, rel_tol=1e-9):
        raise ValueError(f"filter pitch {filt.pitch} does not match offset step {spec.ds}")
    coeffs = filt.coefficients  # (channels, m or 1, 2L+1)
    if coeffs.shape[1] not in (1, spec.n_angles):
        raise ValueError("filter was tabulated for a different angle set")
    y = sino.channel_data()
    nc = max(y.shape[0], coeffs.shape[0])
    if y.shape[0] not in (1, nc) or coeffs.shape[0] not in (1, nc):
        raise ValueError("channel counts of sinogram and filter are incompatible")
    if method == "auto":
        method = "fft" if coeffs.shape[-1] > 32 else "direct"
    conv = {"direct": _conv_direct, "fft": _conv_fft}.get(method)
    if conv is None:
        raise ValueError(f"unknown convolution method {method!r}")
    taps = coeffs * spec.ds
    out = np.stack([
        np.broadcast_to(conv(y[min(c, y.shape[0] - 1)], taps[min(c, coeffs.shape[0] - 1)]),
                        spec.shape)
        for c in range(nc)])
    return Sinogram(out[0] if nc == 1 and sino.data.ndim == 2 else out, spec)


# -- Fourier transform along s ------------------------------------------------

@dataclass
class Spectrum:
    """Samples of ``F_s g(phi, omega)`` at angular frequencies ``omega``."""

    values: np.ndarray
    omega: np.ndarray
    spec: SamplingSpec
    n_samples: int


def fourier_s(sino: Sinogram, pad_to: int | None = None) -> Spectrum:
    """Unitary 1-D Fourier transform along ``s`` for every angle.

    Uses ``F g(omega) = (2 pi)^(-1/2) int g(s) exp(-i s omega) ds`` evaluated by
    the rectangle rule on the offset grid (optionally zero padded to
    ``pad_to`` samples).  Frequencies are in numpy FFT order.  With the
    matching measures, ``sum |G|^2 d(omega) == sum |g|^2 ds`` holds exactly.
    """
    spec = sino.spec
    n = spec.n_offsets if pad_to is None else int(pad_to)
    if n < spec.n_offsets:
        raise ValueError("pad_to must not truncate the data")
    omega = 2.0 * np.pi * fft.fftfreq(n, d=spec.ds)
    s0 = spec.offsets[0]
    phase = np.exp(-1j * omega * s0) * (spec.ds / math.sqrt(2.0 * math.pi))
    values = fft.fft(sino.data, n, axis=-1) * phase
    return Spectrum(values, omega, spec, n)


def inverse_fourier_s(spectrum: Spectrum) -> Sinogram:
    spec = spectrum.spec
    s0 = spec.offsets[0]
    phase = np.exp(-1j * spectrum.omega * s0) * (spec.ds / math.sqrt(2.0 * math.pi))
    g = fft.ifft(spectrum.values / phase, axis=-1)[..., :spec.n_offsets]
    return Sinogram(g.real, spec)
