"""Feature kernels, their Radon-domain data filters and FBP frequency filters.

A feature kernel ``U`` (Gaussian, Gaussian gradient, Laplacian of Gaussian,
Laplacian of an ideal or triangular lowpass) is paired with its data filter
``u = R U``: convolving a sinogram with ``u`` along ``s`` yields the
sinogram of the feature map ``U * f``.

Conventions: the 1-D Fourier transform is the unitary one with kernel
``exp(-i s omega)``; convolution along ``s`` is the plain integral (no
``sqrt(2 pi)``), discretized as ``ds * sum``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .sampling import SamplingSpec

__all__ = [
    "FeatureKernel",
    "DataFilter",
    "FbpFilter",
    "radon_of_gaussian",
    "grad_data_filter",
    "log_data_filter",
    "lowpass_laplacian_coeffs",
    "ramlak_laplacian_coeffs",
    "fbp_filter_response",
    "sample_filter",
    "export_filter_csv",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def _check_alpha(alpha):
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")


def radon_of_gaussian(alpha, s):
    """Radon transform of the normalized 2-D Gaussian ``g_alpha`` (any angle)."""
    _check_alpha(alpha)
    s = np.asarray(s, dtype=float)
    return np.exp(-s ** 2 / (2 * alpha ** 2)) / (alpha * _SQRT_2PI)


def grad_data_filter(alpha, phi, s):
    """Data filter of ``grad g_alpha``; returns an array with leading axis of length 2."""
    _check_alpha(alpha)
    phi, s = np.broadcast_arrays(np.asarray(phi, dtype=float), np.asarray(s, dtype=float))
    profile = -s / (alpha ** 3 * _SQRT_2PI) * np.exp(-s ** 2 / (2 * alpha ** 2))
    return np.stack([profile * np.cos(phi), profile * np.sin(phi)])


def log_data_filter(alpha, s):
    """Data filter of the Laplacian of Gaussian, ``d^2/ds^2 R g_alpha``."""
    _check_alpha(alpha)
    s = np.asarray(s, dtype=float)
    return (np.exp(-s ** 2 / (2 * alpha ** 2)) / (alpha ** 3 * _SQRT_2PI)
            * (s ** 2 / alpha ** 2 - 1.0))


def lowpass_laplacian_coeffs(b, ell):
    """Laplacian-of-ideal-lowpass filter at its Shannon points ``s = pi*ell/b``."""
    ell = np.asarray(ell)
    l2 = np.where(ell == 0, 1, ell).astype(float) ** 2
    sign = np.where(ell % 2 == 0, 1.0, -1.0)
    vals = np.where(ell == 0, 1.0 / 3.0, 2.0 * sign / (math.pi ** 2 * l2))
    return -_SQRT_2_OVER_PI * float(b) ** 3 * vals


def ramlak_laplacian_coeffs(b, ell):
    """Ram-Lak type filter (taper ``1 - |omega|`` cut at ``b``) at ``s = pi*ell/b``.

    Band limits above 1 are equivalent to ``b = 1`` and are clamped.
    """
    b = float(b)
    if not b > 0:
        raise ValueError(f"b must be positive, got {b!r}")
    if b > 1.0:
        warnings.warn(f"ramlak filter: b={b} > 1 is equivalent to b=1; clamping", stacklevel=2)
        b = 1.0
    ell = np.asarray(ell)
    l2 = np.where(ell == 0, 1, ell).astype(float) ** 2
    even = (3 * b - 2) / (math.pi ** 2 * l2)
    odd = -(3 * b - 2) / (math.pi ** 2 * l2) + 12 * b / (math.pi ** 4 * l2 ** 2)
    vals = np.where(ell == 0, (3 * b - 4) / 12.0, np.where(ell % 2 == 0, even, odd))
    return _SQRT_2_OVER_PI * b ** 3 * vals


@dataclass(frozen=True)
class FeatureKernel:
    """Feature extraction kernel ``U``.

    ``kind`` is one of ``gaussian``, ``gaussian-gradient``, ``log``,
    ``lowpass`` (ideal), ``lowpass-laplacian`` or ``ramlak-laplacian``.
    Gaussian kinds take the width ``alpha``; band-limited kinds take the band
    limit ``b``.  ``ramlak-laplacian`` also takes ``cutoff``, the frequency at
    which its triangular taper reaches zero (``cutoff=1`` is the textbook
    ``(1 - |omega|)_+`` taper; ``None`` lets the taper end at ``b``).  ``b``
    may not exceed the cutoff.
    """

    kind: str
    alpha: float | None = None
    b: float | None = None
    cutoff: float | None = None

    GAUSSIAN_KINDS = ("gaussian", "gaussian-gradient", "log")
    BANDLIMITED_KINDS = ("lowpass", "lowpass-laplacian", "ramlak-laplacian")

    def __post_init__(self):
        if self.kind in self.GAUSSIAN_KINDS:
            _check_alpha(self.alpha if self.alpha is not None else 0.0)
        elif self.kind in self.BANDLIMITED_KINDS:
            if self.b is not None and not self.b > 0:
                raise ValueError("band limit b must be positive")
            if self.cutoff is not None and not self.cutoff > 0:
                raise ValueError("cutoff must be positive")
            if (self.kind == "ramlak-laplacian" and self.b is not None
                    and self.cutoff is not None and self.b > self.cutoff):
                warnings.warn(f"ramlak filter: b={self.b} exceeds cutoff {self.cutoff}; "
                              "clamping b to the cutoff", stacklevel=3)
                object.__setattr__(self, "b", float(self.cutoff))
        else:
            raise ValueError(f"unknown feature kernel kind {self.kind!r}")

    @property
    def channels(self) -> int:
        return 2 if self.kind == "gaussian-gradient" else 1

    @property
    def order(self) -> int:
        """Differential order; feature maps scale with ``length**-order``."""
        return {"gaussian": 0, "lowpass": 0, "gaussian-gradient": 1}.get(self.kind, 2)

    @property
    def is_bandlimited(self) -> bool:
        return self.kind in self.BANDLIMITED_KINDS


@dataclass
class DataFilter:
    """Data filter tabulated on ``ell*pitch`` for ``ell = -L..L``.

    ``coefficients`` has shape ``(channels, n_angles or 1, 2L+1)``; the angle
    axis is only longer than 1 for direction-dependent filters (gradient).
    """

    kernel: FeatureKernel | None
    pitch: float
    coefficients: np.ndarray
    angles: np.ndarray | None = None
    feature_unit: float = 1.0
    meta: dict = field(default_factory=dict)

    @property
    def half_width(self) -> int:
        return self.coefficients.shape[-1] // 2

    @property
    def channels(self) -> int:
        return self.coefficients.shape[0]

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width + 1) * self.pitch

    @classmethod
    def delta(cls, pitch: float) -> DataFilter:
        """Discrete identity: ``1/pitch`` at ``s = 0``."""
        return cls(None, pitch, np.full((1, 1, 1), 1.0 / pitch))


# tail radius (in units of alpha) where every Gaussian-family filter is < 1e-12 of its peak
_GAUSS_TAIL = 8.5


def sample_filter(kernel: FeatureKernel, spec: SamplingSpec, feature_unit: float = 1.0) -> DataFilter:
    """Tabulate the data filter of ``kernel`` on the offset step of ``spec``.

    Band-limited kernels are evaluated at their Shannon points, so their band
    limit must equal ``pi/ds``; ``b=None`` selects exactly that.  The filter
    support is never longer than needed for linear convolution on the grid.

    ``feature_unit`` is the length unit in which the feature map is
    expressed: the tabulated values are multiplied by
    ``feature_unit**order`` (e.g. pass the pixel pitch to obtain
    derivatives per pixel).
    """
    ds = spec.ds
    max_half = spec.n_offsets - 1
    scale = float(feature_unit) ** kernel.order
    if kernel.is_bandlimited:
        b_grid = math.pi / ds
        b = b_grid if kernel.b is None else kernel.b
        if not math.isclose(b, b_grid, rel_tol=1e-9):
            raise ValueError(f"band-limited kernel needs offset step pi/b = {math.pi / b}, "
                             f"spec has {ds}")
        ell = np.arange(-max_half, max_half + 1)
        # closed forms are used verbatim: they satisfy F_s u = window in the
        # unitary convention, so with plain convolution along s the Laplacian
        # feature maps come out scaled by sqrt(2 pi); the plain lowpass uses
        # the window chi/sqrt(2 pi), i.e. the discrete identity
        if kernel.kind == "lowpass":
            vals = np.where(ell == 0, b * _SQRT_2_OVER_PI, 0.0) / _SQRT_2PI
        elif kernel.kind == "lowpass-laplacian":
            vals = lowpass_laplacian_coeffs(b, ell)
        else:
            c = b if kernel.cutoff is None else kernel.cutoff
            rel = b / c
            if rel > 1.0 + 1e-12:
                raise ValueError(f"ramlak band limit {b} exceeds cutoff {c}")
            # u_{b,c}(s) = c^3 u_{b/c,1}(c s); Shannon points coincide
            vals = c ** 3 * ramlak_laplacian_coeffs(min(rel, 1.0), ell)
        coeffs = vals[None, None, :]
        angles = None
        kernel = FeatureKernel(kernel.kind, b=b, cutoff=kernel.cutoff) \
            if kernel.kind == "ramlak-laplacian" else FeatureKernel(kernel.kind, b=b)
    else:
        alpha = kernel.alpha
        half = min(int(math.ceil(_GAUSS_TAIL * alpha / ds)), max_half)
        s = np.arange(-half, half + 1) * ds
        if kernel.kind == "gaussian":
            coeffs = radon_of_gaussian(alpha, s)[None, None, :]
            angles = None
        elif kernel.kind == "log":
            coeffs = log_data_filter(alpha, s)[None, None, :]
            angles = None
        else:
            angles = spec.angles
            coeffs = grad_data_filter(alpha, angles[:, None], s[None, :])
    return DataFilter(kernel, ds, np.ascontiguousarray(coeffs * scale), angles, float(feature_unit))


def export_filter_csv(filt: DataFilter, path, angle_index: int = 0) -> None:
    """Write ``s, value[, value_2]`` rows (for direction-dependent filters at one angle)."""
    a = min(angle_index, filt.coefficients.shape[1] - 1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s"] + [f"value{c + 1}" if filt.channels > 1 else "value"
                            for c in range(filt.channels)])
        for k, s in enumerate(filt.offsets):
            w.writerow([repr(float(s))] + [repr(float(filt.coefficients[c, a, k]))
                                           for c in range(filt.channels)])


# -- FBP filters ----------------------------------------------------------------

def fbp_filter_response(kind: str, alpha, omega, phi=0.0):
    """Frequency response of an FBP filter (a multiplier on ``F_s g``).

    * ``grad``: ``(1/4pi) i omega |omega| exp(-alpha^2 omega^2/2) theta(phi)``,
      returned with a leading channel axis of length 2;
    * ``log``: ``-(1/4pi) |omega|^3 exp(-alpha^2 omega^2/2)``;
    * ``ramlak``: ``(1/4pi) |omega| exp(-alpha^2 omega^2/2)`` (plain FBP of
      the Gaussian-smoothed image).
    """
    _check_alpha(alpha)
    omega = np.asarray(omega, dtype=float)
    damp = np.exp(-alpha ** 2 * omega ** 2 / 2)
    if kind == "grad":
        phi, omega_b = np.broadcast_arrays(np.asarray(phi, dtype=float), omega)
        damp = np.exp(-alpha ** 2 * omega_b ** 2 / 2)
        base = 1j * omega_b * np.abs(omega_b) * damp / (4 * math.pi)
        return np.stack([base * np.cos(phi), base * np.sin(phi)])
    if kind == "log":
        return (-np.abs(omega) ** 3 * damp / (4 * math.pi)).astype(complex)
    if kind in ("ramlak", "ram-lak-reconstruction"):
        return (np.abs(omega) * damp / (4 * math.pi)).astype(complex)
    raise ValueError(f"unknown FBP filter kind {kind!r}")


@dataclass(frozen=True)
class FbpFilter:
    """Frequency-domain FBP filter.

    ``kind`` is ``grad``, ``log`` or ``ramlak``.  ``alpha`` is the Gaussian
    width; for ``ramlak`` it may be ``None`` together with a band limit ``b``
    (ideal lowpass window, ``None`` meaning the Nyquist band of the data).
    """

    kind: str
    alpha: float | None = None
    b: float | None = None

    def __post_init__(self):
        if self.kind == "ram-lak-reconstruction":
            object.__setattr__(self, "kind", "ramlak")
        if self.kind not in ("grad", "log", "ramlak"):
            raise ValueError(f"unknown FBP filter kind {self.kind!r}")
        if self.kind != "ramlak" or self.alpha is not None:
            _check_alpha(self.alpha if self.alpha is not None else 0.0)

    @property
    def channels(self) -> int:
        return 2 if self.kind == "grad" else 1

    @property
    def order(self) -> int:
        return {"grad": 1, "log": 2}.get(self.kind, 0)

    def window(self, omega: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """Response divided by the ramp ``|omega|/(4 pi)``; shape ``(channels, m, n)``."""
        omega = np.asarray(omega, dtype=float)[None, :]
        phi = np.asarray(phi, dtype=float)[:, None]
        if self.alpha is not None:
            damp = np.exp(-self.alpha ** 2 * omega ** 2 / 2)
        else:
            damp = np.ones_like(omega)
        if self.b is not None:
            damp = damp * (np.abs(omega) <= self.b)
        if self.kind == "grad":
            base = 1j * omega * damp
            return np.stack([base * np.cos(phi), base * np.sin(phi)])
        if self.kind == "log":
            return np.broadcast_to(-(omega ** 2) * damp, (phi.shape[0], omega.shape[1]))[None] + 0j
        return np.broadcast_to(damp, (phi.shape[0], omega.shape[1]))[None] + 0j

    def response(self, omega, phi=0.0):
        if self.kind == "ramlak" and self.alpha is None:
            omega = np.asarray(omega, dtype=float)
            w = np.abs(omega) / (4 * math.pi)
            if self.b is not None:
                w = w * (np.abs(omega) <= self.b)
            return w.astype(complex)
        return fbp_filter_response(self.kind, self.alpha, omega, phi)
