import math

import numpy as np
import pytest

from tomofeat.metrics import artifact_ratio, boundary_coverage, boundary_points, edge_band, relative_l2
from tomofeat.phantom import DiscPhantom


def phantom():
    return DiscPhantom([((0.0, 0.0), 0.5)], 101, 1.0)


def ring_mask(p, r_px, width=0.5):
    n = p.grid_size
    i, j = np.mgrid[:n, :n]
    c = (n - 1) / 2
    return np.abs(np.hypot(i - c, j - c) - r_px) <= width


def test_edge_band_surrounds_circle():
    p = phantom()
    band = edge_band(p, width=3)
    for pts in boundary_points(p):
        for y, x in pts:
            assert band[int(round(y)), int(round(x))]
    assert not band[50, 50] and not band[0, 0]


def test_artifact_ratio():
    band = np.zeros((4, 4), bool)
    band[:2] = True
    f = np.ones((4, 4))
    f[2:] = 0.5
    assert artifact_ratio(f, band) == pytest.approx(0.25)
    assert artifact_ratio(np.stack([f, f]), band) == pytest.approx(0.25)
    assert artifact_ratio(np.zeros((4, 4)), band) == 0.0
    assert math.isinf(artifact_ratio(np.where(band, 0.0, 1.0), band))


def test_boundary_coverage():
    p = phantom()
    r_px = 0.5 / p.pitch
    assert boundary_coverage(ring_mask(p, r_px), p) == 1.0
    assert boundary_coverage(ring_mask(p, r_px + 1.0), p) == 1.0
    assert boundary_coverage(ring_mask(p, r_px + 3.0), p) == 0.0
    assert boundary_coverage(np.zeros((101, 101), bool), p) == 0.0
    half = ring_mask(p, r_px)
    half[:, :50] = False
    assert boundary_coverage(half, p) == pytest.approx(0.5, abs=0.05)


def test_relative_l2():
    assert relative_l2([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert relative_l2([0.0, 0.0], [3.0, 4.0]) == 1.0
    assert relative_l2([3.0, 4.0], [0.0, 0.0]) == 5.0
