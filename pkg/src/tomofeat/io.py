"""File formats for sinograms, images and image exports.

Sinogram and image files share one layout: ``key = value`` header lines, a
line ``end_header``, then the payload.  ``format = binary`` stores
little-endian float64 values in C order; ``format = csv`` stores one row of
comma-separated values per line (channels stacked along rows).
"""

from __future__ import annotations

import io as _io
from pathlib import Path

import numpy as np

from .sampling import SamplingSpec
from .xform import Image, Sinogram

__all__ = [
    "write_sinogram",
    "read_sinogram",
    "write_image",
    "read_image",
    "write_pgm",
    "read_pgm",
]

_MAGIC = "tomofeat"
_END = "end_header"


def _write(path, kind: str, header: dict, data: np.ndarray, fmt: str) -> None:
    if fmt not in ("binary", "csv"):
        raise ValueError(f"unknown payload format {fmt!r}")
    data = np.asarray(data, dtype=np.float64)
    head = {"type": kind, "format": fmt, "shape": ",".join(map(str, data.shape))}
    head.update(header)
    lines = [_MAGIC] + [f"{k} = {v}" for k, v in head.items()] + [_END]
    text = "\n".join(lines) + "\n"
    with open(path, "wb") as fh:
        fh.write(text.encode("ascii"))
        if fmt == "binary":
            fh.write(data.astype("<f8").tobytes(order="C"))
        else:
            buf = _io.StringIO()
            np.savetxt(buf, data.reshape(-1, data.shape[-1]), delimiter=",", fmt="%.17g")
            fh.write(buf.getvalue().encode("ascii"))


def _read(path, kind: str) -> tuple[dict, np.ndarray]:
    raw = Path(path).read_bytes()
    header = {}
    pos = 0
    first = True
    while True:
        nl = raw.find(b"\n", pos)
        if nl < 0:
            raise ValueError(f"{path}: missing {_END!r} line")
        line = raw[pos:nl].decode("ascii").strip()
        pos = nl + 1
        if first:
            if line != _MAGIC:
                raise ValueError(f"{path}: not a {_MAGIC} file")
            first = False
            continue
        if line == _END:
            break
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}: malformed header line {line!r}")
        header[key.strip()] = value.strip()
    if header.get("type") != kind:
        raise ValueError(f"{path}: expected a {kind} file, found {header.get('type')!r}")
    shape = tuple(int(v) for v in header["shape"].split(","))
    payload = raw[pos:]
    if header["format"] == "binary":
        data = np.frombuffer(payload, dtype="<f8")
        if data.size != int(np.prod(shape)):
            raise ValueError(f"{path}: payload has {data.size} values, header says {shape}")
        data = data.reshape(shape).astype(np.float64)
    elif header["format"] == "csv":
        data = np.loadtxt(_io.StringIO(payload.decode("ascii")), delimiter=",", ndmin=2)
        data = data.reshape(shape)
    else:
        raise ValueError(f"{path}: unknown payload format {header['format']!r}")
    return header, data


def write_sinogram(sino: Sinogram, path, fmt: str = "binary") -> None:
    header = sino.spec.to_header()
    header["channels"] = str(sino.channels)
    _write(path, "sinogram", header, sino.data, fmt)


def read_sinogram(path) -> Sinogram:
    header, data = _read(path, "sinogram")
    return Sinogram(data, SamplingSpec.from_header(header))


def write_image(img: Image, path, fmt: str = "binary") -> None:
    header = {"extent": repr(float(img.extent)), "channels": str(img.channels)}
    _write(path, "image", header, img.data, fmt)


def read_image(path) -> Image:
    header, data = _read(path, "image")
    return Image(data, float(header.get("extent", "1.0")))


def write_pgm(data: np.ndarray, path, bits: int = 16) -> tuple[float, float]:
    """Min-max scaled binary PGM; returns ``(lo, hi)`` and records it in a comment.

    Pixel value ``v`` maps back to ``lo + v*(hi - lo)/maxval``.
    """
    a = np.asarray(data, dtype=float)
    if a.ndim != 2:
        raise ValueError("PGM export needs a single-channel image")
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    maxval = 255 if bits == 8 else 65535
    lo, hi = float(a.min()), float(a.max())
    span = hi - lo
    q = np.zeros(a.shape) if span == 0 else (a - lo) / span * maxval
    q = np.rint(q).astype(">u2" if bits == 16 else "u1")
    n, m = a.shape
    head = f"P5\n# scale lo={lo!r} hi={hi!r}\n{m} {n}\n{maxval}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(head + q.tobytes())
    return lo, hi


def read_pgm(path) -> tuple[np.ndarray, float, float]:
    """Read a file written by :func:`write_pgm`; returns ``(values, lo, hi)``."""
    raw = Path(path).read_bytes()
    tokens, pos, lo, hi = [], 0, 0.0, 1.0
    while len(tokens) < 4:
        nl = raw.find(b"\n", pos)
        line = raw[pos:nl].decode("ascii")
        pos = nl + 1
        if line.startswith("#"):
            for part in line[1:].split():
                if part.startswith("lo="):
                    lo = float(part[3:])
                elif part.startswith("hi="):
                    hi = float(part[3:])
            continue
        tokens.extend(line.split())
    if tokens[0] != "P5":
        raise ValueError("not a binary PGM file")
    m, n, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    dtype = ">u2" if maxval > 255 else "u1"
    q = np.frombuffer(raw[pos:], dtype=dtype, count=n * m).reshape(n, m)
    return lo + q.astype(float) * (hi - lo) / maxval, lo, hi
