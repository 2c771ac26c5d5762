"""Binary edge maps from feature maps: LoG zero crossings and Canny."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .xform import Image

__all__ = [
    "EdgeMap",
    "zero_crossings",
    "gradient_magnitude",
    "non_max_suppression",
    "canny",
    "write_pbm",
    "write_edge_csv",
]

# the four opposite-neighbour pairs: horizontal, vertical and both diagonals
_PAIRS = ((0, 1), (1, 0), (1, 1), (1, -1))


@dataclass
class EdgeMap:
    mask: np.ndarray
    method: str
    params: dict = field(default_factory=dict)
    extent: float = 1.0

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.ndim != 2:
            raise ValueError("edge mask must be two-dimensional")

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    def coordinates(self) -> np.ndarray:
        """``(k, 2)`` array of ``(row, col)`` indices of marked pixels."""
        return np.argwhere(self.mask)


def _neighbours(a: np.ndarray, di: int, dj: int):
    # values at (i-di, j-dj) and (i+di, j+dj), padded with NaN at the border
    p = np.pad(a, 1, constant_values=np.nan)
    n = a.shape[0]
    m = a.shape[1]
    before = p[1 - di:1 - di + n, 1 - dj:1 - dj + m]
    after = p[1 + di:1 + di + n, 1 + dj:1 + dj + m]
    return before, after


def zero_crossings(log_map: Image | np.ndarray, threshold: float = 0.005) -> EdgeMap:
    """Marr-Hildreth edges.

    The map is divided by its largest magnitude.  A pixel is marked when, for
    one of the four neighbour pairs through it, the two neighbours have
    opposite signs and differ by more than ``threshold``.
    """
    extent = log_map.extent if isinstance(log_map, Image) else 1.0
    a = log_map.data if isinstance(log_map, Image) else np.asarray(log_map, dtype=float)
    if a.ndim != 2:
        raise ValueError("zero_crossings expects a single-channel map")
    params = {"threshold": threshold}
    peak = float(np.max(np.abs(a))) if a.size else 0.0
    if peak == 0.0 or not np.isfinite(threshold):
        return EdgeMap(np.zeros(a.shape, bool), "log-zero-crossing", params, extent)
    a = a / peak
    mask = np.zeros(a.shape, bool)
    with np.errstate(invalid="ignore"):
        for di, dj in _PAIRS:
            b, c = _neighbours(a, di, dj)
            mask |= (b * c < 0) & (np.abs(b - c) > threshold)
    return EdgeMap(mask, "log-zero-crossing", params, extent)


def gradient_magnitude(grad_map: Image | np.ndarray) -> Image:
    """Pointwise Euclidean norm of a two-channel gradient map."""
    extent = grad_map.extent if isinstance(grad_map, Image) else 1.0
    g = grad_map.data if isinstance(grad_map, Image) else np.asarray(grad_map, dtype=float)
    if g.ndim != 3 or g.shape[0] != 2:
        raise ValueError("gradient map must have exactly two channels")
    return Image(np.hypot(g[0], g[1]), extent)


def non_max_suppression(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Keep pixels that are maximal along the quantized gradient direction.

    Ties are broken asymmetrically (``>=`` on one side, ``>`` on the other) so
    that a plateau two pixels wide yields a single line.
    """
    angle = np.mod(np.degrees(np.arctan2(gy, gx)), 180.0)
    sector = np.zeros(mag.shape, int)
    sector[(angle >= 22.5) & (angle < 67.5)] = 1
    sector[(angle >= 67.5) & (angle < 112.5)] = 2
    sector[(angle >= 112.5) & (angle < 157.5)] = 3
    # row/col steps along the gradient for each sector (rows grow with y)
    steps = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    p = np.pad(mag, 1)
    n, m = mag.shape
    keep = np.zeros(mag.shape, bool)
    for k, (di, dj) in steps.items():
        fwd = p[1 + di:1 + di + n, 1 + dj:1 + dj + m]
        bwd = p[1 - di:1 - di + n, 1 - dj:1 - dj + m]
        keep |= (sector == k) & (mag >= fwd) & (mag > bwd)
    return keep & (mag > 0)


def canny(grad_map: Image | np.ndarray, low: float = 0.1, high: float = 0.15) -> EdgeMap:
    """Canny detector on a precomputed gradient map.

    Thresholds apply to the magnitude divided by its maximum.  Weak pixels
    survive if their 8-connected component contains a strong pixel.
    """
    if not 0 <= low <= high:
        raise ValueError(f"thresholds must satisfy 0 <= low <= high, got {low}, {high}")
    mag_img = gradient_magnitude(grad_map)
    g = grad_map.data if isinstance(grad_map, Image) else np.asarray(grad_map, dtype=float)
    mag = mag_img.data
    params = {"low": low, "high": high}
    peak = float(mag.max()) if mag.size else 0.0
    if peak == 0.0:
        return EdgeMap(np.zeros(mag.shape, bool), "canny", params, mag_img.extent)
    mag = mag / peak
    thin = non_max_suppression(mag, g[0], g[1])
    weak = thin & (mag >= low)
    strong = thin & (mag >= high)
    labels, _ = ndimage.label(weak, structure=np.ones((3, 3)))
    hit = np.unique(labels[strong])
    mask = np.isin(labels, hit[hit > 0])
    return EdgeMap(mask, "canny", params, mag_img.extent)


def write_pbm(edges: EdgeMap, path) -> None:
    """Plain (ASCII) PBM; marked pixels are black (1)."""
    n, m = edges.mask.shape
    with open(path, "w") as fh:
        fh.write(f"P1\n# {edges.method} {edges.params}\n{m} {n}\n")
        for row in edges.mask.astype(np.uint8):
            fh.write(" ".join(map(str, row)) + "\n")


def read_pbm(path) -> np.ndarray:
    tokens = []
    with open(path) as fh:
        for line in fh:
            tokens.extend(line.split("#", 1)[0].split())
    if tokens[0] != "P1":
        raise ValueError("not a plain PBM file")
    m, n = int(tokens[1]), int(tokens[2])
    return np.array(tokens[3:3 + n * m], dtype=np.uint8).reshape(n, m).astype(bool)


def write_edge_csv(edges: EdgeMap, path) -> None:
    """Rows ``row, col, x, y`` for each marked pixel."""
    n, m = edges.mask.shape
    xs = np.linspace(-edges.extent, edges.extent, m)
    ys = np.linspace(-edges.extent, edges.extent, n)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "x", "y"])
        for i, j in edges.coordinates():
            w.writerow([int(i), int(j), repr(float(xs[j])), repr(float(ys[i]))])
