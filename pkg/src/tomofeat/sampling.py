"""Parallel-beam measurement geometry.

Angles are ``phi_j = j*pi/N_phi`` for ``j = 0..N_phi-1`` and offsets are
``s_l = l*h`` for ``l = -N_s..N_s`` with ``h = radial_halfwidth/N_s``.  A
:class:`SamplingSpec` stores the full uniform angle grid together with the
subset of it that was actually measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "SamplingSpec",
    "sampling_counts",
    "make_subset",
    "spec_for_grid",
]


def sampling_counts(bandwidth: float) -> tuple[int, int]:
    """Angular and radial counts ``(ceil(b), ceil(b/pi))`` for band limit *b*."""
    b = float(bandwidth)
    if not b > 0 or not math.isfinite(b):
        raise ValueError(f"bandwidth must be positive and finite, got {bandwidth!r}")
    return math.ceil(b), math.ceil(b / math.pi)


@dataclass(frozen=True)
class SamplingSpec:
    """Discretization contract for a sinogram.

    Parameters
    ----------
    bandwidth : float
        Essential band limit ``b`` of the imaged object.
    n_angles_full : int
        Size ``N_phi`` of the full uniform angle grid on ``[0, pi)``.
    n_radial : int
        ``N_s``; the offset grid has ``2*N_s + 1`` samples.
    radial_halfwidth : float
        Physical half-extent of the offset grid.
    angle_subset : tuple of int, optional
        Strictly increasing indices into the full angle grid.  ``None`` means
        all ``N_phi`` angles.
    """

    bandwidth: float
    n_angles_full: int
    n_radial: int
    radial_halfwidth: float = 1.0
    angle_subset: tuple[int, ...] | None = field(default=None)

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if self.n_angles_full < 1 or self.n_radial < 1:
            raise ValueError("angle and radial counts must be >= 1")
        if not self.radial_halfwidth > 0:
            raise ValueError("radial_halfwidth must be positive")
        if self.angle_subset is not None:
            idx = tuple(int(i) for i in self.angle_subset)
            if not idx:
                raise ValueError("angle_subset must not be empty")
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise ValueError("angle_subset must be strictly increasing")
            if idx[0] < 0 or idx[-1] >= self.n_angles_full:
                raise ValueError("angle_subset indices out of range")
            object.__setattr__(self, "angle_subset", idx)

    @property
    def indices(self) -> np.ndarray:
        if self.angle_subset is None:
            return np.arange(self.n_angles_full)
        return np.asarray(self.angle_subset, dtype=int)

    @property
    def full_angles(self) -> np.ndarray:
        return np.arange(self.n_angles_full) * (np.pi / self.n_angles_full)

    @property
    def angles(self) -> np.ndarray:
        """Measured angles in radians, all in ``[0, pi)``."""
        return self.indices * (np.pi / self.n_angles_full)

    @property
    def n_angles(self) -> int:
        return len(self.indices)

    @property
    def ds(self) -> float:
        return self.radial_halfwidth / self.n_radial

    @property
    def n_offsets(self) -> int:
        return 2 * self.n_radial + 1

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.n_radial, self.n_radial + 1) * self.ds

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_angles, self.n_offsets

    @property
    def is_fully_sampled(self) -> bool:
        n_phi, n_s = sampling_counts(self.bandwidth)
        complete = self.angle_subset is None or len(self.angle_subset) == self.n_angles_full
        return complete and self.n_angles_full >= n_phi and self.n_radial >= n_s

    def full(self) -> SamplingSpec:
        return replace(self, angle_subset=None)

    # -- header (de)serialization ------------------------------------------

    def to_header(self) -> dict[str, str]:
        subset = "" if self.angle_subset is None else ",".join(map(str, self.angle_subset))
        return {
            "bandwidth": repr(float(self.bandwidth)),
            "n_angles_full": str(self.n_angles_full),
            "n_radial": str(self.n_radial),
            "radial_halfwidth": repr(float(self.radial_halfwidth)),
            "angle_subset": subset,
        }

    @classmethod
    def from_header(cls, header: dict[str, str]) -> SamplingSpec:
        try:
            subset_txt = header.get("angle_subset", "").strip()
            subset = tuple(int(v) for v in subset_txt.split(",")) if subset_txt else None
            return cls(
                bandwidth=float(header["bandwidth"]),
                n_angles_full=int(header["n_angles_full"]),
                n_radial=int(header["n_radial"]),
                radial_halfwidth=float(header.get("radial_halfwidth", "1.0")),
                angle_subset=subset,
            )
        except KeyError as exc:
            raise ValueError(f"sampling header is missing key {exc.args[0]!r}") from None


def spec_for_grid(n_radial: int, radial_halfwidth: float = 1.0,
                  n_angles_full: int | None = None) -> SamplingSpec:
    """Fully sampled spec whose band limit is derived from the radial grid.

    The band limit is ``pi*N_s``; the full angle count defaults to the
    matching ``ceil(pi*N_s)``.
    """
    b = math.pi * n_radial
    if n_angles_full is None:
        n_angles_full = sampling_counts(b)[0]
    return SamplingSpec(b, n_angles_full, n_radial, radial_halfwidth)


def make_subset(full: SamplingSpec, m: int, scheme: str = "uniform",
                angle_range: tuple[float, float] | None = None) -> SamplingSpec:
    """Select ``m`` of the ``N_phi`` grid angles.

    ``scheme="uniform"`` (sparse angle) takes indices ``round(j*N_phi/m)``;
    ``scheme="limited"`` takes ``m`` contiguous indices centred inside
    ``angle_range = (lo, hi)`` (radians, half-open).
    """
    n = full.n_angles_full
    if not 1 <= m <= n:
        raise ValueError(f"m must lie in [1, {n}], got {m}")
    if scheme in ("uniform", "uniform-sparse", "sparse"):
        idx = np.floor(np.arange(m) * (n / m) + 0.5).astype(int)
    elif scheme in ("limited", "limited-view"):
        if angle_range is None:
            raise ValueError("limited-view selection needs angle_range")
        lo, hi = angle_range
        inside = np.flatnonzero((full.full_angles >= lo) & (full.full_angles < hi))
        if inside.size == 0:
            raise ValueError(f"angle range {angle_range} contains no grid angles")
        if m > inside.size:
            raise ValueError(f"angle range holds only {inside.size} grid angles, asked for {m}")
        start = (inside.size - m) // 2
        idx = inside[start:start + m]
    else:
        raise ValueError(f"unknown subset scheme {scheme!r}")
    return replace(full, angle_subset=tuple(int(i) for i in idx))
