"""Synthetic test images: an ellipse phantom with exact line integrals and a star field."""

from __future__ import annotations

import math
from typing import Iterable, Sequence, Tuple

import numpy as np

__all__ = [
    "SHEPP_LOGAN_MODIFIED",
    "ellipse_phantom",
    "ellipse_sinogram",
    "star_field",
]

# (intensity, semi-axis a, semi-axis b, x0, y0, rotation in degrees) on [-1, 1]^2,
# the high-contrast variant of the Shepp-Logan head
SHEPP_LOGAN_MODIFIED: Tuple[Tuple[float, ...], ...] = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
)


def _pixel_grid(N: int, supersample: int) -> Tuple[np.ndarray, np.ndarray]:
    # sub-pixel centres in image coordinates, y pointing up, row 0 on top
    q = supersample
    sub = (np.arange(N * q) + 0.5) / q
    x = sub - 0.5 * N
    y = 0.5 * N - sub
    return np.meshgrid(x, y, indexing="xy")


def ellipse_phantom(
    N: int, ellipses: Iterable[Sequence[float]] = SHEPP_LOGAN_MODIFIED, supersample: int = 4
) -> np.ndarray:
    """Pixel averages of a sum of constant-intensity ellipses scaled to the ``N x N`` grid."""
    X, Y = _pixel_grid(N, supersample)
    scale = 0.5 * N
    img = np.zeros_like(X)
    for rho, a, b, x0, y0, phi in ellipses:
        c, s = math.cos(math.radians(phi)), math.sin(math.radians(phi))
        dx, dy = X - x0 * scale, Y - y0 * scale
        u = (dx * c + dy * s) / (a * scale)
        v = (-dx * s + dy * c) / (b * scale)
        img += rho * (u * u + v * v <= 1.0)
    q = supersample
    return img.reshape(N, q, N, q).mean(axis=(1, 3))


def ellipse_sinogram(
    N: int,
    angles_deg: Sequence[float],
    offsets: Sequence[float],
    ellipses: Iterable[Sequence[float]] = SHEPP_LOGAN_MODIFIED,
) -> np.ndarray:
    """Exact line integrals of the continuous ellipse phantom, angle-major."""
    th = np.deg2rad(np.asarray(angles_deg, dtype=float))[:, None]
    s = np.asarray(offsets, dtype=float)[None, :]
    scale = 0.5 * N
    out = np.zeros((th.shape[0], s.shape[1]))
    for rho, a, b, x0, y0, phi in ellipses:
        a_, b_ = a * scale, b * scale
        shift = s - (x0 * np.cos(th) + y0 * np.sin(th)) * scale
        ang = th - math.radians(phi)
        r2 = (a_ * np.cos(ang)) ** 2 + (b_ * np.sin(ang)) ** 2
        inside = shift**2 < r2
        chord = np.where(inside, 2.0 * a_ * b_ * np.sqrt(np.maximum(r2 - shift**2, 0.0)) / r2, 0.0)
        out += rho * chord
    return out.ravel()


def star_field(
    N: int,
    n_stars: int = 40,
    seed=0,
    pad: int = 0,
    width_range: Tuple[float, float] = (1.0, 3.0),
    margin: int = -1,
) -> np.ndarray:
    """Gaussian blobs of random position, width and brightness on a dark sky.

    The image is ``(N + 2 pad)`` square. Centres fall inside the central
    ``N x N`` window, at least ``margin`` pixels from its edge (default
    ``N // 4``), so the sky stays dark near the border as in astronomical
    frames. ``seed`` is an integer or a ready :class:`numpy.random.Generator`.
    """
    if isinstance(seed, np.random.Generator):
        rng = seed
    else:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    if margin < 0:
        margin = N // 4
    if 2 * margin >= N:
        raise ValueError("margin leaves no room for stars")
    size = N + 2 * pad
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    img = np.zeros((size, size))
    pos = rng.uniform(pad + margin, pad + N - margin, size=(n_stars, 2))
    width = rng.uniform(*width_range, size=n_stars)
    bright = rng.lognormal(mean=0.0, sigma=0.8, size=n_stars)
    for (py, px), w, b in zip(pos, width, bright):
        img += b * np.exp(-((yy - py) ** 2 + (xx - px) ** 2) / (2.0 * w * w))
    return img
