"""Disc phantoms and their exact line integrals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sampling import SamplingSpec
from .xform import Image, Sinogram, pixel_coords

__all__ = [
    "Disc",
    "DiscPhantom",
    "rasterize",
    "analytic_radon",
    "disc_line_integrals",
    "three_disc_phantom",
    "modified_phantom",
    "parse_disc_rows",
]


@dataclass(frozen=True)
class Disc:
    center: tuple[float, float]
    radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"disc radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))


@dataclass
class DiscPhantom:
    """Sum of constant-amplitude discs sampled on an ``n x n`` grid."""

    discs: list[Disc] = field(default_factory=list)
    grid_size: int = 200
    extent: float = 1.0

    def __post_init__(self):
        self.discs = [d if isinstance(d, Disc) else Disc(*d) for d in self.discs]
        if self.grid_size < 2:
            raise ValueError("grid_size must be at least 2")
        for d in self.discs:
            if math.hypot(*d.center) + d.radius > self.extent * (1 + 1e-12):
                raise ValueError(f"{d} is not contained in the disc of radius {self.extent}")

    @property
    def pitch(self) -> float:
        return 2.0 * self.extent / (self.grid_size - 1)

    def scaled(self, factor: float) -> DiscPhantom:
        return DiscPhantom([Disc(d.center, d.radius, d.amplitude * factor) for d in self.discs],
                           self.grid_size, self.extent)


def rasterize(p: DiscPhantom) -> Image:
    """Point-sample the phantom at the pixel centres."""
    xs = pixel_coords(p.grid_size, p.extent)
    x, y = np.meshgrid(xs, xs)
    img = np.zeros_like(x)
    for d in p.discs:
        cx, cy = d.center
        img[(x - cx) ** 2 + (y - cy) ** 2 <= d.radius ** 2] += d.amplitude
    return Image(img, p.extent)


def disc_line_integrals(discs, phi, s) -> np.ndarray:
    """Exact ``Rf(phi, s)`` of a disc sum at broadcastable ``phi``, ``s``."""
    phi = np.asarray(phi, dtype=float)
    s = np.asarray(s, dtype=float)
    out = np.zeros(np.broadcast_shapes(phi.shape, s.shape))
    c, sn = np.cos(phi), np.sin(phi)
    for d in discs:
        dist = s - (d.center[0] * c + d.center[1] * sn)
        out += d.amplitude * 2.0 * np.sqrt(np.clip(d.radius ** 2 - dist ** 2, 0.0, None))
    return out


def analytic_radon(p: DiscPhantom, spec: SamplingSpec) -> Sinogram:
    """Chord-length sinogram of ``p`` on the sampling grid of ``spec``."""
    values = disc_line_integrals(p.discs, spec.angles[:, None], spec.offsets[None, :])
    return Sinogram(values, spec)


def three_disc_phantom(grid_size: int = 200, extent: float = 1.0) -> DiscPhantom:
    """Characteristic function of three disjoint discs inside the unit disc."""
    discs = [
        Disc((-0.30, -0.10), 0.45),
        Disc((0.42, 0.30), 0.25),
        Disc((0.35, -0.50), 0.18),
    ]
    return DiscPhantom(discs, grid_size, extent)


def modified_phantom(grid_size: int = 200, extent: float = 1.0,
                     weak_amplitude: float = 0.2) -> DiscPhantom:
    """Three-disc phantom plus two low-contrast discs inside the large one."""
    base = three_disc_phantom(grid_size, extent)
    weak = [
        Disc((-0.42, -0.05), 0.15, weak_amplitude),
        Disc((-0.15, -0.27), 0.10, weak_amplitude),
    ]
    return DiscPhantom(base.discs + weak, grid_size, extent)


def parse_disc_rows(text: str) -> list[Disc]:
    """Parse ``cx, cy, radius[, amplitude]`` rows (commas or whitespace)."""
    discs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [v for v in line.replace(",", " ").split()]
        if len(parts) not in (3, 4):
            raise ValueError(f"disc row {lineno}: expected 3 or 4 numbers, got {raw!r}")
        vals = [float(v) for v in parts]
        discs.append(Disc((vals[0], vals[1]), vals[2], vals[3] if len(vals) == 4 else 1.0))
    return discs
