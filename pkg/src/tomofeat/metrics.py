"""Quality measures against known disc phantoms."""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from .phantom import DiscPhantom, rasterize

__all__ = ["edge_band", "artifact_ratio", "boundary_points", "boundary_coverage", "relative_l2"]


def edge_band(p: DiscPhantom, width: int = 3) -> np.ndarray:
    """Boundary pixels of the rasterized phantom dilated ``width`` times (3x3)."""
    ras = rasterize(p).data
    edge = (ras != ndimage.grey_erosion(ras, size=3)) | (ras != ndimage.grey_dilation(ras, size=3))
    if width > 0:
        edge = ndimage.binary_dilation(edge, np.ones((3, 3), bool), iterations=width)
    return edge


def artifact_ratio(feature: np.ndarray, band: np.ndarray) -> float:
    """Energy outside the edge band over energy inside (summed over channels)."""
    f = np.asarray(feature, dtype=float)
    f = f.reshape((-1,) + band.shape)
    inside = float(np.sum(f[:, band] ** 2))
    outside = float(np.sum(f[:, ~band] ** 2))
    if inside == 0.0:
        return math.inf if outside > 0 else 0.0
    return outside / inside


def boundary_points(p: DiscPhantom, disc_indices=None, spacing: float | None = None) -> list[np.ndarray]:
    """Points on each circle boundary in ``(row, col)`` pixel coordinates.

    Points are spaced about ``spacing`` pixels apart (default: half a pixel).
    """
    h = p.pitch
    spacing = 0.5 if spacing is None else spacing
    idx = range(len(p.discs)) if disc_indices is None else disc_indices
    out = []
    for k in idx:
        d = p.discs[k]
        n = max(16, int(math.ceil(2 * math.pi * d.radius / (h * spacing))))
        t = np.arange(n) * 2 * math.pi / n
        x = d.center[0] + d.radius * np.cos(t)
        y = d.center[1] + d.radius * np.sin(t)
        out.append(np.stack([(y + p.extent) / h, (x + p.extent) / h], axis=1))
    return out


def boundary_coverage(mask: np.ndarray, p: DiscPhantom, tol: float = 2.0,
                      disc_indices=None) -> float:
    """Fraction of circle-boundary points with a marked pixel within ``tol`` px."""
    mask = np.asarray(mask, bool)
    pts = np.concatenate(boundary_points(p, disc_indices))
    if not mask.any():
        return 0.0
    dist = ndimage.distance_transform_edt(~mask)
    n = mask.shape[0]
    # distance from a boundary point to the nearest marked pixel centre, checked
    # exactly over the pixels around it
    r = int(math.ceil(tol)) + 1
    hits = 0
    marked = mask
    for py, px in pts:
        i0, j0 = int(round(py)), int(round(px))
        if dist[min(max(i0, 0), n - 1), min(max(j0, 0), n - 1)] > tol + 1.5:
            continue
        lo_i, hi_i = max(i0 - r, 0), min(i0 + r + 1, n)
        lo_j, hi_j = max(j0 - r, 0), min(j0 + r + 1, n)
        ii, jj = np.nonzero(marked[lo_i:hi_i, lo_j:hi_j])
        if ii.size and np.min((ii + lo_i - py) ** 2 + (jj + lo_j - px) ** 2) <= tol * tol:
            hits += 1
    return hits / len(pts)


def relative_l2(a, b) -> float:
    """``||a - b|| / ||b||``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / nb) if nb else float(np.linalg.norm(a))
