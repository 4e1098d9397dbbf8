"""Parallel-beam Radon operator with intersection-length weights.

Pixels are unit squares tiling ``[-N/2, N/2]^2``; row ``i`` of the image sits
at ``y`` in ``[N/2 - i - 1, N/2 - i]`` and column ``j`` at ``x`` in
``[j - N/2, j + 1 - N/2]``. Ray ``(theta, s)`` is the line
``x cos(theta) + y sin(theta) = s``. A ray running exactly along a pixel edge
is charged to the pixel on its positive side (clamped at the far boundary),
so every ray's weights add up to its chord through the closed square.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
import scipy.sparse

from .. import kernels

__all__ = ["RadonOperator", "SinogramGeometry", "radon_apply", "radon_build", "exact_cos_sin"]


def exact_cos_sin(theta_deg) -> Tuple[np.ndarray, np.ndarray]:
    """Cosine and sine of angles in degrees, exact at multiples of 90."""
    th = np.asarray(theta_deg, dtype=float)
    rad = np.deg2rad(th)
    c, s = np.cos(rad), np.sin(rad)
    quarter = np.isclose(np.mod(th, 90.0), 0.0, atol=1e-12)
    q = np.mod(np.round(th / 90.0), 4).astype(int)
    c = np.where(quarter, np.array([1.0, 0.0, -1.0, 0.0])[q], c)
    s = np.where(quarter, np.array([0.0, 1.0, 0.0, -1.0])[q], s)
    return c, s


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SinogramGeometry:
    N: int
    angles: Tuple[float, ...] = tuple(float(a) for a in range(180))
    N_s: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("image side must be positive")
        angles = tuple(float(a) for a in self.angles)
        if not angles:
            raise ValueError("need at least one projection angle")
        if any(b <= a for a, b in zip(angles, angles[1:])):
            raise ValueError("angles must be strictly increasing")
        if angles[0] < 0 or angles[-1] >= 180:
            raise ValueError("angles must lie in [0, 180)")
        object.__setattr__(self, "angles", angles)
        if self.N_s == 0:
            object.__setattr__(self, "N_s", _round_half_up(self.N * math.sqrt(2.0)))
        if self.N_s < 1:
            raise ValueError("need at least one ray per angle")

    @classmethod
    def uniform(cls, N: int, n_angles: int = 180) -> "SinogramGeometry":
        """``n_angles`` equispaced angles over ``[0, 180)``."""
        return cls(N, tuple(180.0 * i / n_angles for i in range(n_angles)))

    @property
    def span(self) -> float:
        """Distance from the first ray to the last."""
        return float(self.N_s - 1)

    @property
    def offsets(self) -> np.ndarray:
        if self.N_s == 1:
            return np.zeros(1)
        return np.linspace(-0.5 * self.span, 0.5 * self.span, self.N_s)

    @property
    def n_rays(self) -> int:
        return len(self.angles) * self.N_s

    def ray(self, alpha: int) -> Tuple[float, float]:
        """``(theta in degrees, s)`` of ray ``alpha`` (angle-major)."""
        a, b = divmod(alpha, self.N_s)
        return self.angles[a], float(self.offsets[b])


@dataclass(frozen=True)
class RadonOperator:
    geometry: SinogramGeometry
    matrix: scipy.sparse.csr_matrix = field(repr=False)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    def row(self, alpha: int) -> Tuple[np.ndarray, np.ndarray]:
        lo, hi = self.matrix.indptr[alpha], self.matrix.indptr[alpha + 1]
        return self.matrix.indices[lo:hi], self.matrix.data[lo:hi]

    def apply(self, image) -> np.ndarray:
        return radon_apply(self, image)

    def adjoint(self, sinogram) -> np.ndarray:
        y = np.asarray(sinogram, dtype=float).ravel()
        if y.size != self.matrix.shape[0]:
            raise ValueError(f"sinogram has {y.size} entries, expected {self.matrix.shape[0]}")
        return self.matrix.T @ y

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def sinogram_image(self, b) -> np.ndarray:
        """Reshape a measurement vector to ``(angles, detector bins)``."""
        return np.asarray(b).reshape(len(self.geometry.angles), self.geometry.N_s)


def radon_build(geometry: SinogramGeometry) -> RadonOperator:
    """Trace every ray through the pixel grid and store intersection lengths."""
    c, s = exact_cos_sin(geometry.angles)
    indptr, idx, val = kernels.radon_rows(
        int(geometry.N), np.ascontiguousarray(c), np.ascontiguousarray(s), geometry.offsets
    )
    mat = scipy.sparse.csr_matrix(
        (val, idx, indptr), shape=(geometry.n_rays, geometry.N * geometry.N)
    )
    mat.sum_duplicates()
    return RadonOperator(geometry, mat)


def radon_apply(op: RadonOperator, image) -> np.ndarray:
    x = np.asarray(image, dtype=float).ravel()
    n = op.geometry.N
    if x.size != n * n:
        raise ValueError(f"image has {x.size} pixels, geometry expects {n}x{n}")
    return op.matrix @ x


def chord_length(N: float, theta_deg: float, s: float) -> float:
    """Length of ``{x cos + y sin = s}`` inside the closed square ``[-N/2, N/2]^2``."""
    c, sn = (float(v) for v in exact_cos_sin(theta_deg))
    half = 0.5 * N
    px, py, dx, dy = s * c, s * sn, -sn, c
    lo, hi = -math.inf, math.inf
    for p, d in ((px, dx), (py, dy)):
        if d == 0.0:
            if abs(p) > half:
                return 0.0
            continue
        t0, t1 = (-half - p) / d, (half - p) / d
        lo, hi = max(lo, min(t0, t1)), min(hi, max(t0, t1))
    return max(0.0, hi - lo)


def chord_lengths(geometry: SinogramGeometry) -> np.ndarray:
    return np.array([chord_length(geometry.N, *geometry.ray(a)) for a in range(geometry.n_rays)])

