"""Command-line driver: phantom, simulate, fbp-feature, reconstruct, edges, pipeline.

All stages read one INI-style config file (``--config``).  Exit codes: 0 on
success, 2 for configuration or input errors, 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import edges as edges_mod
from . import io
from .fbp import fbp_feature
from .filters import FbpFilter, FeatureKernel, export_filter_csv, sample_filter
from .phantom import (DiscPhantom, analytic_radon, modified_phantom, parse_disc_rows,
                      rasterize, three_disc_phantom)
from .sampling import SamplingSpec, make_subset, sampling_counts
from .varsolve import NumericalError, SolverConfig, add_noise, export_objective_csv, fista
from .xform import Image, Sinogram, forward

log = logging.getLogger("tomofeat")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

_FBP_KINDS = {"log": "log", "grad": "grad", "gaussian-gradient": "grad", "ramlak": "ramlak"}


class ConfigError(ValueError):
    pass


def shipped_configs() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("tomofeat.configs").iterdir()
                  if p.name.endswith(".cfg"))


def load_config(path: str) -> configparser.ConfigParser:
    """Read a config file; a bare name refers to a shipped config."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    p = Path(path)
    if not p.exists() and path in shipped_configs():
        text = resources.files("tomofeat.configs").joinpath(path + ".cfg").read_text()
    elif p.exists():
        text = p.read_text()
    else:
        raise ConfigError(f"config file {path!r} not found (shipped: {', '.join(shipped_configs())})")
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    return cp


def _get(cp, section, key, conv=str, default=None, required=False):
    if not cp.has_section(section) or not cp.has_option(section, key):
        if required:
            raise ConfigError(f"[{section}] {key} is required")
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is invalid") from None


# -- config sections -----------------------------------------------------------

def build_phantom(cp) -> DiscPhantom:
    kind = _get(cp, "phantom", "kind", default="three-disc")
    n = _get(cp, "phantom", "grid_size", int, 200)
    extent = _get(cp, "phantom", "extent", float, 0.995)
    try:
        if kind == "three-disc":
            return three_disc_phantom(n, extent)
        if kind == "modified":
            return modified_phantom(n, extent, _get(cp, "phantom", "weak_amplitude", float, 0.2))
        if kind == "discs":
            return DiscPhantom(parse_disc_rows(_get(cp, "phantom", "discs", default="")), n, extent)
        if kind == "empty":
            return DiscPhantom([], n, extent)
    except ValueError as exc:
        raise ConfigError(f"[phantom]: {exc}") from None
    raise ConfigError(f"[phantom] kind = {kind!r} is unknown")


def build_spec(cp) -> SamplingSpec:
    n_radial = _get(cp, "sampling", "n_radial", int, 150)
    half = _get(cp, "sampling", "radial_halfwidth", float, 1.5)
    b = _get(cp, "sampling", "bandwidth", float, math.pi * n_radial)
    n_full = _get(cp, "sampling", "n_angles_full", int, sampling_counts(b)[0])
    try:
        spec = SamplingSpec(b, n_full, n_radial, half)
        m = _get(cp, "sampling", "angles", int, n_full)
        scheme = _get(cp, "sampling", "scheme", default="uniform")
        rng = _get(cp, "sampling", "angle_range", default=None)
        angle_range = None
        if rng:
            lo, hi = (float(v) for v in rng.replace(",", " ").split())
            angle_range = (lo, hi)
        if m != n_full or scheme != "uniform":
            spec = make_subset(spec, m, scheme, angle_range)
    except ValueError as exc:
        raise ConfigError(f"[sampling]: {exc}") from None
    return spec


def _feature_unit(cp, section, pitch) -> float:
    unit = _get(cp, section, "feature_unit", default="pixel")
    if unit == "pixel":
        return pitch
    if unit == "physical":
        return 1.0
    try:
        return float(unit)
    except ValueError:
        raise ConfigError(f"[{section}] feature_unit = {unit!r} is invalid") from None


def _alpha(cp, section, pitch):
    a_px = _get(cp, section, "alpha_px", float)
    a = _get(cp, section, "alpha", float)
    if a_px is not None:
        return a_px * pitch
    return a


@dataclass
class RunSpec:
    name: str
    kernel: FeatureKernel
    feature_unit: float
    solver: SolverConfig


def build_runs(cp, pitch: float) -> list[RunSpec]:
    runs = []
    for sec in cp.sections():
        if not sec.startswith("run."):
            continue
        kind = _get(cp, sec, "filter", required=True)
        try:
            kernel = FeatureKernel(kind, alpha=_alpha(cp, sec, pitch),
                                   cutoff=_get(cp, sec, "cutoff", float))
            weight = _get(cp, sec, "data_weight", default="auto")
            step = _get(cp, sec, "step", default="auto")
            solver = SolverConfig(
                lam=_get(cp, sec, "lam", float, 0.001),
                mu=_get(cp, sec, "mu", float, 0.0),
                max_iters=_get(cp, sec, "iters", int, 500),
                seed=_get(cp, sec, "seed", int, 0),
                data_weight=weight if weight == "auto" else float(weight),
                step=step if step == "auto" else float(step),
            )
        except ValueError as exc:
            raise ConfigError(f"[{sec}]: {exc}") from None
        runs.append(RunSpec(sec[4:], kernel, _feature_unit(cp, sec, pitch), solver))
    return runs


# -- stages ----------------------------------------------------------------------

def _export_image(img: Image, stem: Path) -> None:
    io.write_image(img, stem.with_suffix(".img"))
    data = img.data
    if img.channels == 2:
        data = edges_mod.gradient_magnitude(img).data
    io.write_pgm(data, stem.with_suffix(".pgm"))


def stage_phantom(cp, out: Path) -> Image:
    img = rasterize(build_phantom(cp))
    _export_image(img, out / "phantom")
    return img


def stage_simulate(cp, out: Path, seed: int | None, image_path: str | None = None) -> Sinogram:
    spec = build_spec(cp)
    if image_path:
        sino = forward(io.read_image(image_path), spec)
    else:
        sino = analytic_radon(build_phantom(cp), spec)
    eta = _get(cp, "noise", "eta", float, 0.0)
    if eta > 0:
        if seed is None:
            seed = _get(cp, "noise", "seed", int)
        if seed is None:
            raise ConfigError("noisy simulation needs a seed ([noise] seed or --seed)")
        sino = add_noise(sino, eta, seed)
    io.write_sinogram(sino, out / "sinogram.sino")
    return sino


def stage_fbp(cp, sino: Sinogram, out: Path) -> dict[str, Image]:
    n = _get(cp, "phantom", "grid_size", int, 200)
    extent = _get(cp, "phantom", "extent", float, 0.995)
    pitch = 2 * extent / (n - 1)
    kinds = _get(cp, "fbp", "kinds", default="")
    results = {}
    for kind in kinds.replace(",", " ").split():
        if kind not in _FBP_KINDS:
            raise ConfigError(f"[fbp] kind {kind!r} is unknown")
        alpha = _alpha(cp, "fbp", pitch)
        try:
            filt = FbpFilter(_FBP_KINDS[kind], alpha=alpha)
        except ValueError as exc:
            raise ConfigError(f"[fbp]: {exc}") from None
        img = fbp_feature(sino, filt, n, extent, _feature_unit(cp, "fbp", pitch))
        _export_image(img, out / f"fbp-{kind}")
        results[f"fbp-{kind}"] = img
    return results


def stage_reconstruct(cp, sino: Sinogram, out: Path) -> dict[str, Image]:
    n = _get(cp, "phantom", "grid_size", int, 200)
    extent = _get(cp, "phantom", "extent", float, 0.995)
    pitch = 2 * extent / (n - 1)
    results = {}
    for run in build_runs(cp, pitch):
        try:
            filt = sample_filter(run.kernel, sino.spec, run.feature_unit)
        except ValueError as exc:
            raise ConfigError(f"[run.{run.name}]: {exc}") from None
        log.info("run %s: %s lam=%g mu=%g iters=%d", run.name, run.kernel.kind,
                 run.solver.lam, run.solver.mu, run.solver.max_iters)
        res = fista(sino, filt, n, run.solver, extent)
        export_filter_csv(filt, out / f"{run.name}-filter.csv")
        export_objective_csv(res, out / f"{run.name}-objective.csv")
        _export_image(res.h, out / run.name)
        results[run.name] = res.h
    return results


def stage_edges(cp, maps: dict[str, Image], out: Path) -> dict[str, edges_mod.EdgeMap]:
    if not cp.has_section("edges"):
        return {}
    wanted = _get(cp, "edges", "maps", default="all")
    names = list(maps) if wanted.strip() == "all" else wanted.replace(",", " ").split()
    threshold = _get(cp, "edges", "threshold", float, 0.005)
    low = _get(cp, "edges", "low", float, 0.1)
    high = _get(cp, "edges", "high", float, 0.15)
    result = {}
    for name in names:
        if name not in maps:
            raise ConfigError(f"[edges] map {name!r} was not produced")
        img = maps[name]
        try:
            if img.channels == 2:
                em = edges_mod.canny(img, low, high)
            else:
                em = edges_mod.zero_crossings(img, threshold)
        except ValueError as exc:
            raise ConfigError(f"[edges]: {exc}") from None
        edges_mod.write_pbm(em, out / f"{name}-edges.pbm")
        edges_mod.write_edge_csv(em, out / f"{name}-edges.csv")
        result[name] = em
    return result


# -- entry point -----------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="config file or shipped config name")
    common.add_argument("--seed", type=int, default=None, help="noise seed (overrides config)")
    common.add_argument("--out-dir", default=".", help="output directory")
    common.add_argument("--threads", type=int, default=None, help="worker threads")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="tomofeat", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("phantom", parents=[common], help="rasterize the configured phantom")
    s = sub.add_parser("simulate", parents=[common], help="simulate (noisy) sinogram data")
    s.add_argument("--image", help="image file to project instead of the analytic phantom")
    f = sub.add_parser("fbp-feature", parents=[common], help="FBP feature maps ([fbp] kinds)")
    f.add_argument("--sinogram", required=True)
    r = sub.add_parser("reconstruct", parents=[common], help="variational runs ([run.*])")
    r.add_argument("--sinogram", required=True)
    e = sub.add_parser("edges", parents=[common], help="edge maps from feature-map files")
    e.add_argument("--image", required=True, nargs="+")
    sub.add_parser("pipeline", parents=[common], help="simulate, reconstruct and detect edges")
    return p


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.threads:
            import numba
            numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
        cp = load_config(args.config)
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "phantom":
            stage_phantom(cp, out)
        elif args.command == "simulate":
            stage_simulate(cp, out, args.seed, args.image)
        elif args.command == "fbp-feature":
            stage_fbp(cp, io.read_sinogram(args.sinogram), out)
        elif args.command == "reconstruct":
            stage_reconstruct(cp, io.read_sinogram(args.sinogram), out)
        elif args.command == "edges":
            maps = {Path(p).stem: io.read_image(p) for p in args.image}
            if not cp.has_section("edges"):
                cp.add_section("edges")
            cp.set("edges", "maps", " ".join(maps))
            stage_edges(cp, maps, out)
        else:
            stage_phantom(cp, out)
            sino = stage_simulate(cp, out, args.seed)
            maps = stage_fbp(cp, sino, out)
            maps.update(stage_reconstruct(cp, sino, out))
            found = stage_edges(cp, maps, out)
            summary = {"maps": sorted(maps), "edges": {k: v.count for k, v in found.items()}}
            (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    except (ConfigError, FileNotFoundError) as exc:
        print(f"tomofeat: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"tomofeat: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"tomofeat: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
