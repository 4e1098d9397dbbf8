"""Binary PGM images with a linear-scaling sidecar, and CSV sinograms."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Tuple, Union

import numpy as np

__all__ = ["read_pgm", "read_sinogram_csv", "write_pgm", "write_sinogram_csv"]

PathLike = Union[str, Path]


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".scale")


def write_pgm(path: PathLike, image, bits: int = 16) -> Tuple[float, float]:
    """Write ``image`` as a P5 graymap, rescaled linearly onto the full integer range.

    The offset and step needed to recover float values are stored as JSON in
    ``<path>.scale``. Returns ``(offset, step)``.
    """
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("expected a 2-D image")
    path = Path(path)
    maxval = (1 << bits) - 1
    lo, hi = float(img.min()), float(img.max())
    step = (hi - lo) / maxval if hi > lo else 1.0
    q = np.rint((img - lo) / step).clip(0, maxval)
    raw = q.astype(">u2" if bits == 16 else "u1").tobytes()
    H, W = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{W} {H}\n{maxval}\n".encode("ascii"))
        fh.write(raw)
    _sidecar(path).write_text(json.dumps({"offset": lo, "step": step, "bits": bits}) + "\n")
    return lo, step


def _tokens(buf: bytes, count: int):
    # header tokens, skipping '#' comments; returns tokens and offset after the last one
    out, pos = [], 0
    while len(out) < count:
        while buf[pos : pos + 1].isspace():
            pos += 1
        if buf[pos : pos + 1] == b"#":
            pos = buf.index(b"\n", pos) + 1
            continue
        start = pos
        while not buf[pos : pos + 1].isspace():
            pos += 1
        out.append(buf[start:pos])
    return out, pos + 1


def read_pgm(path: PathLike, rescale: bool = True) -> np.ndarray:
    """Read a P5 graymap; apply the sidecar scaling when present and ``rescale``."""
    path = Path(path)
    buf = path.read_bytes()
    (magic, w, h, mx), pos = _tokens(buf, 4)
    if magic != b"P5":
        raise ValueError(f"{path} is not a binary PGM")
    W, H, maxval = int(w), int(h), int(mx)
    dtype = ">u2" if maxval > 255 else "u1"
    q = np.frombuffer(buf, dtype=dtype, count=W * H, offset=pos).reshape(H, W).astype(float)
    side = _sidecar(path)
    if rescale and side.exists():
        meta = json.loads(side.read_text())
        return meta["offset"] + meta["step"] * q
    return q


def write_sinogram_csv(path: PathLike, sinogram) -> None:
    """One row per angle, one column per detector bin."""
    sino = np.atleast_2d(np.asarray(sinogram, dtype=float))
    np.savetxt(path, sino, delimiter=",", fmt="%.17g")


def read_sinogram_csv(path: PathLike) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", ndmin=2))
