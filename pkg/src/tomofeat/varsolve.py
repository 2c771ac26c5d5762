"""Variational feature reconstruction.

Minimizes ``0.5*w*||R h - u * y||^2 + mu*||grad h||^2 + lam*||h||_1`` with
FISTA.  The right-hand side ``u * y`` is the data filter applied along ``s``;
vector feature kernels give one independent problem per channel.  The data
weight ``w`` defaults to ``N_phi/|Theta|`` (the full angle count over the
measured one), so that ``lam`` and ``mu`` keep their balance against the
data term when angles are dropped; ``w = 1`` at full sampling.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .filters import DataFilter
from .sampling import SamplingSpec
from .xform import Image, RayTransform, Sinogram, convolve_s

__all__ = [
    "NumericalError",
    "SolverConfig",
    "SolveResult",
    "preprocess_rhs",
    "soft_threshold",
    "grad_fwd",
    "grad_adj",
    "smooth_gradient",
    "objective_terms",
    "estimate_lipschitz",
    "fista",
    "fista_channel",
    "add_noise",
    "export_objective_csv",
]


class NumericalError(RuntimeError):
    """Raised when the iteration diverges or produces non-finite values."""


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 0.001
    mu: float = 0.0
    max_iters: int = 500
    step: str | float = "auto"
    record_objective: bool = True
    power_iters: int = 50
    seed: int = 0
    data_weight: str | float = "auto"

    def __post_init__(self):
        if not (self.lam >= 0 and self.mu >= 0):
            raise ValueError("lam and mu must be non-negative")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be at least 1")
        if self.step != "auto" and not (isinstance(self.step, (int, float)) and self.step > 0):
            raise ValueError(f"step must be 'auto' or a positive number, got {self.step!r}")
        if self.power_iters < 30:
            raise ValueError("power_iters must be at least 30")
        if self.data_weight != "auto" and not (
                isinstance(self.data_weight, (int, float)) and self.data_weight > 0):
            raise ValueError(f"data_weight must be 'auto' or positive, got {self.data_weight!r}")

    def weight_for(self, spec: SamplingSpec) -> float:
        if self.data_weight == "auto":
            return spec.n_angles_full / spec.n_angles
        return float(self.data_weight)


@dataclass
class SolveResult:
    h: Image
    iterations: int
    lipschitz: float
    trace: np.ndarray | None = None   # (iterations+1, 4): objective, data, h1, l1
    meta: dict = field(default_factory=dict)

    @property
    def objective(self) -> np.ndarray | None:
        return None if self.trace is None else self.trace[:, 0]


def preprocess_rhs(y: Sinogram, filt: DataFilter) -> Sinogram:
    """Filtered data ``u * y`` (two channels for a gradient filter)."""
    return convolve_s(y, filt)


def soft_threshold(x, tau):
    """Proximal map of ``tau*||.||_1``."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def grad_fwd(h: np.ndarray) -> np.ndarray:
    """Forward differences with zero extension; shape ``(2, n, n)`` (d/dx, d/dy)."""
    g = np.zeros((2,) + h.shape)
    g[0, :, :-1] = h[:, 1:] - h[:, :-1]
    g[0, :, -1] = -h[:, -1]
    g[1, :-1, :] = h[1:, :] - h[:-1, :]
    g[1, -1, :] = -h[-1, :]
    return g


def grad_adj(g: np.ndarray) -> np.ndarray:
    """Exact transpose of :func:`grad_fwd`."""
    gx, gy = g
    out = -gx - gy
    out[:, 1:] += gx[:, :-1]
    out[1:, :] += gy[:-1, :]
    return out


def _laplace_term(h: np.ndarray) -> np.ndarray:
    return grad_adj(grad_fwd(h))


def smooth_gradient(h: np.ndarray, rhs: np.ndarray, mu: float, op: RayTransform,
                    weight: float = 1.0) -> np.ndarray:
    """Gradient ``w R^T(R h - rhs) + 2 mu grad^T grad h`` of the smooth part."""
    h = np.asarray(h, dtype=float)
    if h.shape != op.image_shape or np.shape(rhs) != op.data_shape:
        raise ValueError("shape mismatch between iterate, data and operator")
    out = op.adjoint(op.forward(h) - rhs)
    if weight != 1.0:
        out *= weight
    if mu:
        out += 2.0 * mu * _laplace_term(h)
    return out


def objective_terms(h: np.ndarray, rhs: np.ndarray, lam: float, mu: float,
                    op: RayTransform, weight: float = 1.0) -> tuple:
    """``(total, data, h1, l1)`` with the weights already applied."""
    residual = op.forward(h) - rhs
    data = 0.5 * weight * float(np.sum(residual ** 2))
    h1 = mu * float(np.sum(grad_fwd(h) ** 2)) if mu else 0.0
    l1 = lam * float(np.sum(np.abs(h))) if lam else 0.0
    return data + h1 + l1, data, h1, l1


def estimate_lipschitz(op: RayTransform, mu: float, n_iter: int = 50, seed: int = 0,
                      weight: float = 1.0) -> float:
    """Power iteration on ``w R^T R + 2 mu grad^T grad``, inflated by 1%."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.image_shape)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(n_iter):
        v = weight * op.adjoint(op.forward(x))
        if mu:
            v += 2.0 * mu * _laplace_term(x)
        lam = float(np.vdot(x, v))
        nv = np.linalg.norm(v)
        if nv == 0:
            break
        x = v / nv
    return 1.01 * max(lam, np.finfo(float).tiny)


def fista_channel(rhs: np.ndarray, op: RayTransform, cfg: SolverConfig,
                  lipschitz: float, weight: float = 1.0
                  ) -> tuple[np.ndarray, np.ndarray | None, int]:
    """FISTA for a single channel; returns ``(h, trace, iterations)``."""
    step = 1.0 / lipschitz
    tau = cfg.lam * step
    h = np.zeros(op.image_shape)
    z = h.copy()
    t = 1.0
    init = objective_terms(h, rhs, cfg.lam, cfg.mu, op, weight)
    limit = 10.0 * init[0]
    trace = [init] if cfg.record_objective else None
    for k in range(int(cfg.max_iters)):
        g = smooth_gradient(z, rhs, cfg.mu, op, weight)
        h_new = soft_threshold(z - step * g, tau)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        z = h_new + ((t - 1.0) / t_new) * (h_new - h)
        h, t = h_new, t_new
        if cfg.record_objective:
            terms = objective_terms(h, rhs, cfg.lam, cfg.mu, op, weight)
            trace.append(terms)
            val = terms[0]
        elif k % 50 == 49 or k == cfg.max_iters - 1:
            val = objective_terms(h, rhs, cfg.lam, cfg.mu, op, weight)[0]
        else:
            continue
        if not math.isfinite(val) or (init[0] > 0 and val > limit):
            raise NumericalError(
                f"FISTA diverged at iteration {k + 1}: objective {val:.6g} "
                f"exceeds 10x the initial value {init[0]:.6g} (step {step:.3g})")
    return h, (np.array(trace) if trace is not None else None), int(cfg.max_iters)


def fista(y: Sinogram, filt: DataFilter | None, grid_size: int, cfg: SolverConfig,
          extent: float = 1.0, rhs: Sinogram | None = None) -> SolveResult:
    """Reconstruct the feature map of ``filt`` from data ``y``.

    Pass ``filt=None`` (or a precomputed ``rhs``) to reconstruct from data that
    is already filtered.  Channels are solved independently with a shared step.
    """
    spec: SamplingSpec = y.spec
    op = RayTransform(spec, grid_size, extent)
    if rhs is None:
        rhs = y if filt is None else preprocess_rhs(y, filt)
    weight = cfg.weight_for(spec)
    if cfg.step == "auto":
        lip = estimate_lipschitz(op, cfg.mu, cfg.power_iters, cfg.seed, weight)
    else:
        lip = 1.0 / float(cfg.step)
    channels = rhs.channel_data()
    hs, traces = [], []
    iters = 0
    for c in channels:
        h, tr, iters = fista_channel(np.ascontiguousarray(c), op, cfg, lip, weight)
        hs.append(h)
        traces.append(tr)
    data = hs[0] if len(hs) == 1 else np.stack(hs)
    trace = None
    if cfg.record_objective:
        trace = np.sum(traces, axis=0)
    return SolveResult(Image(data, extent), iters, lip, trace,
                       {"lam": cfg.lam, "mu": cfg.mu, "channels": len(hs), "data_weight": weight})


def add_noise(sino: Sinogram, eta: float, seed: int) -> Sinogram:
    """Add i.i.d. Gaussian noise with standard deviation ``eta*max|y|``."""
    if eta < 0:
        raise ValueError("eta must be non-negative")
    rng = np.random.default_rng(seed)
    sigma = eta * float(np.max(np.abs(sino.data))) if sino.data.size else 0.0
    return sino.with_data(sino.data + sigma * rng.standard_normal(sino.data.shape))


def export_objective_csv(result: SolveResult, path) -> None:
    """Write ``iteration, objective, data, h1, l1`` rows."""
    if result.trace is None:
        raise ValueError("objective was not recorded")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "objective", "data", "h1", "l1"])
        for i, row in enumerate(result.trace):
            w.writerow([i] + [repr(float(v)) for v in row])
