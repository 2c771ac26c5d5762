"""Compiled inner loops for the ray transform and its transposes.

Pixel ``(i, j)`` of an ``n x n`` image sits at ``x = x0 + j*h``, ``y = x0 + i*h``
with ``x0 = -extent`` and ``h = 2*extent/(n-1)``.  Values between pixel
centres are bilinear; outside ``[-extent, extent]^2`` the image is zero.
"""

import numpy as np
from numba import config, njit, prange

if config.THREADING_LAYER == "default":
    # the bundled TBB is too old and only produces a warning
    config.THREADING_LAYER = "workqueue"


@njit(cache=True, inline="always")
def _cell(u, n):
    # lower-left index and fraction of a point in pixel units; -1 if outside
    if u < 0.0 or u > n - 1:
        return -1, 0.0
    i = int(u)
    if i > n - 2:
        i = n - 2
    return i, u - i


@njit(cache=True, inline="always")
def _slab(p, d, lo, hi, tlo, thi):
    # intersect [tlo, thi] with {t : lo <= p + t*d <= hi}
    if abs(d) < 1e-15:
        if p < lo or p > hi:
            return 1.0, -1.0
        return tlo, thi
    a = (lo - p) / d
    b = (hi - p) / d
    if a > b:
        a, b = b, a
    return max(tlo, a), min(thi, b)


@njit(cache=True, inline="always")
def _sample_range(sk, c, s_, x0, dt, n_t):
    # indices q of samples t = q*dt that can fall inside the image square
    lo, hi = x0, -x0
    pad = 1e-9 * dt
    tlo, thi = _slab(sk * c, -s_, lo - pad, hi + pad, -n_t * dt, n_t * dt)
    tlo, thi = _slab(sk * s_, c, lo - pad, hi + pad, tlo, thi)
    if tlo > thi:
        return 0, -1
    return max(-n_t, int(np.floor(tlo / dt))), min(n_t, int(np.ceil(thi / dt)))


@njit(cache=True, parallel=True)
def ray_forward(img, cos_t, sin_t, offsets, x0, h, dt, n_t):
    n = img.shape[0]
    m = cos_t.shape[0]
    ns = offsets.shape[0]
    out = np.zeros((m, ns))
    inv_h = 1.0 / h
    for a in prange(m):
        c = cos_t[a]
        s_ = sin_t[a]
        for k in range(ns):
            sk = offsets[k]
            acc = 0.0
            q0, q1 = _sample_range(sk, c, s_, x0, dt, n_t)
            for q in range(q0, q1 + 1):
                t = q * dt
                px = sk * c - t * s_
                py = sk * s_ + t * c
                j, fx = _cell((px - x0) * inv_h, n)
                if j < 0:
                    continue
                i, fy = _cell((py - x0) * inv_h, n)
                if i < 0:
                    continue
                acc += ((1.0 - fy) * ((1.0 - fx) * img[i, j] + fx * img[i, j + 1])
                        + fy * ((1.0 - fx) * img[i + 1, j] + fx * img[i + 1, j + 1]))
            out[a, k] = acc * dt
    return out


@njit(cache=True)
def ray_adjoint(sino, cos_t, sin_t, offsets, x0, h, dt, n_t, n):
    # exact transpose of ray_forward: same sample points, same weights
    m = cos_t.shape[0]
    ns = offsets.shape[0]
    out = np.zeros((n, n))
    inv_h = 1.0 / h
    for a in range(m):
        c = cos_t[a]
        s_ = sin_t[a]
        for k in range(ns):
            g = sino[a, k] * dt
            if g == 0.0:
                continue
            sk = offsets[k]
            q0, q1 = _sample_range(sk, c, s_, x0, dt, n_t)
            for q in range(q0, q1 + 1):
                t = q * dt
                px = sk * c - t * s_
                py = sk * s_ + t * c
                j, fx = _cell((px - x0) * inv_h, n)
                if j < 0:
                    continue
                i, fy = _cell((py - x0) * inv_h, n)
                if i < 0:
                    continue
                out[i, j] += g * (1.0 - fy) * (1.0 - fx)
                out[i, j + 1] += g * (1.0 - fy) * fx
                out[i + 1, j] += g * fy * (1.0 - fx)
                out[i + 1, j + 1] += g * fy * fx
    return out


@njit(cache=True, parallel=True)
def backproject_linear(sino, cos_t, sin_t, s0, ds, coords, weight):
    # sum over angles of g(phi, <x, theta>) with linear interpolation in s
    m, ns = sino.shape
    n = coords.shape[0]
    out = np.zeros((n, n))
    inv_ds = 1.0 / ds
    for i in prange(n):
        y = coords[i]
        for j in range(n):
            x = coords[j]
            acc = 0.0
            for a in range(m):
                u = (x * cos_t[a] + y * sin_t[a] - s0) * inv_ds
                if u < 0.0 or u > ns - 1:
                    continue
                k = int(u)
                if k > ns - 2:
                    k = ns - 2
                f = u - k
                acc += (1.0 - f) * sino[a, k] + f * sino[a, k + 1]
            out[i, j] = acc * weight
    return out
