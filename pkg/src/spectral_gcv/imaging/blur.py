"""Gaussian point-spread blur and its cosine-transform diagonalisation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
import scipy.fft
import scipy.ndimage
import scipy.sparse

from ..spectral import SingularSystem

__all__ = [
    "BlurOperator",
    "DctSpectral",
    "PsfKernel",
    "apply_blur",
    "blur_matrix",
    "blur_matrix_row",
    "dct_spectral_decomposition",
    "devectorize",
    "gaussian_psf",
    "make_inverse_crime_free_data",
    "vectorize",
]

BOUNDARY_CONDITIONS = ("zero", "reflective")


@dataclass(frozen=True)
class PsfKernel:
    K: int
    sigma: float
    weights: np.ndarray = field(repr=False)

    @property
    def M(self) -> int:
        return (self.K - 1) // 2

    def is_symmetric(self, tol: float = 1e-14) -> bool:
        w = self.weights
        return bool(
            np.allclose(w, w[::-1, ::-1], atol=tol, rtol=0) and np.allclose(w, w.T, atol=tol, rtol=0)
        )


def gaussian_psf(sigma: float, K: int) -> PsfKernel:
    """Sampled Gaussian ``exp(-(m^2 + n^2) / (2 sigma^2))`` on ``{-M..M}^2``, normalised to sum 1."""
    if K < 1 or K % 2 == 0:
        raise ValueError(f"kernel size must be odd and positive, got {K}")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    M = (K - 1) // 2
    r = np.arange(-M, M + 1)
    w = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2.0 * sigma**2))
    return PsfKernel(K, float(sigma), w / w.sum())


def vectorize(image) -> np.ndarray:
    """Row-major stacking: ``u[i W + j] = f[i, j]``."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("expected a 2-D image")
    return image.reshape(-1).copy()


def devectorize(vec, H: int, W: int) -> np.ndarray:
    vec = np.asarray(vec)
    if vec.size != H * W:
        raise ValueError(f"vector of length {vec.size} does not hold a {H}x{W} image")
    return vec.reshape(H, W).copy()


def _check_bc(bc: str) -> None:
    if bc not in BOUNDARY_CONDITIONS:
        raise ValueError(f"boundary condition must be one of {BOUNDARY_CONDITIONS}, got {bc!r}")


def apply_blur(image, psf: PsfKernel, bc: str = "reflective") -> np.ndarray:
    """``g[i,j] = sum_{m,n} f[i-m, j-n] w[m,n]`` with zero or half-sample reflected reads."""
    _check_bc(bc)
    f = np.asarray(image, dtype=float)
    mode = "constant" if bc == "zero" else "reflect"
    return scipy.ndimage.convolve(f, psf.weights, mode=mode, cval=0.0)


def _reflect_index(i: int, n: int) -> int:
    # half-sample symmetric extension with period 2n: ... b a | a b c | c b ...
    i = i % (2 * n)
    return i if i < n else 2 * n - 1 - i


def blur_matrix_row(alpha: int, H: int, W: int, psf: PsfKernel, bc: str = "reflective"):
    """Sparse row ``A[alpha, :]`` as sorted ``(columns, values)``."""
    _check_bc(bc)
    if not 0 <= alpha < H * W:
        raise ValueError(f"row index {alpha} outside [0, {H * W})")
    i, j = divmod(alpha, W)
    M = psf.M
    acc = {}
    for mm in range(-M, M + 1):
        for nn in range(-M, M + 1):
            r, c = i - mm, j - nn
            if not (0 <= r < H and 0 <= c < W):
                if bc == "zero":
                    continue
                r, c = _reflect_index(r, H), _reflect_index(c, W)
            beta = r * W + c
            acc[beta] = acc.get(beta, 0.0) + psf.weights[mm + M, nn + M]
    cols = np.array(sorted(acc), dtype=np.int64)
    return cols, np.array([acc[c] for c in cols])


def blur_matrix(H: int, W: int, psf: PsfKernel, bc: str = "reflective") -> scipy.sparse.csr_matrix:
    """Assemble ``A`` row by row. Intended for small images."""
    indptr = [0]
    indices, data = [], []
    for alpha in range(H * W):
        cols, vals = blur_matrix_row(alpha, H, W, psf, bc)
        indices.append(cols)
        data.append(vals)
        indptr.append(indptr[-1] + cols.size)
    return scipy.sparse.csr_matrix(
        (np.concatenate(data), np.concatenate(indices), np.array(indptr)), shape=(H * W, H * W)
    )


@dataclass(frozen=True)
class BlurOperator:
    H: int
    W: int
    psf: PsfKernel
    bc: str = "reflective"

    def __post_init__(self):
        _check_bc(self.bc)

    def apply(self, image) -> np.ndarray:
        return apply_blur(np.asarray(image).reshape(self.H, self.W), self.psf, self.bc)

    def matvec(self, u) -> np.ndarray:
        return vectorize(self.apply(devectorize(u, self.H, self.W)))

    def rmatvec(self, y) -> np.ndarray:
        return self.matrix().T @ np.asarray(y, dtype=float)

    def matrix(self) -> scipy.sparse.csr_matrix:
        return blur_matrix(self.H, self.W, self.psf, self.bc)

    def spectral(self) -> "DctSpectral":
        if self.H != self.W:
            raise ValueError("cosine diagonalisation implemented for square images")
        return dct_spectral_decomposition(self.psf, self.H, self.bc)


def _dct2(x):
    return scipy.fft.dctn(x, type=2, norm="ortho")


def _idct2(x):
    return scipy.fft.idctn(x, type=2, norm="ortho")


@dataclass(frozen=True)
class DctSpectral:
    """``A = C^T diag(lam) C`` with ``C`` the orthonormal 2-D DCT-II.

    Singular values are ``|lam|`` in descending order; ``order`` maps the
    sorted position to the flattened DCT index and ``signs`` carries
    ``sign(lam)`` into the left singular vectors.
    """

    N: int
    eigenvalues: np.ndarray = field(repr=False)
    order: np.ndarray = field(repr=False)
    sigmas: np.ndarray = field(repr=False)
    signs: np.ndarray = field(repr=False)

    def forward(self, image) -> np.ndarray:
        """``C x`` flattened and permuted into descending-singular-value order."""
        return _dct2(np.asarray(image, dtype=float).reshape(self.N, self.N)).ravel()[self.order]

    def backward(self, coeffs) -> np.ndarray:
        """Inverse of :meth:`forward`, returning an ``N x N`` image."""
        flat = np.zeros(self.N * self.N)
        c = np.asarray(coeffs, dtype=float)
        flat[self.order[: c.size]] = c
        return _idct2(flat.reshape(self.N, self.N))

    def data_coefficients(self, data) -> np.ndarray:
        """``(b, u_j)`` with ``u_j = sign_j C^T e_j``."""
        return self.signs * self.forward(data)

    def apply(self, image) -> np.ndarray:
        return _idct2((_dct2(np.asarray(image, dtype=float)).ravel() * self.eigenvalues).reshape(self.N, self.N))

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.sigmas > 0))

    def system(self) -> SingularSystem:
        r = self.rank
        m = self.N * self.N
        return SingularSystem(
            m=m,
            sigmas=self.sigmas[:r],
            transform=lambda b: self.data_coefficients(np.asarray(b).reshape(self.N, self.N)),
            right_evaluator=lambda j: vectorize(self.backward(np.eye(1, m, j - 1).ravel())),
        )


def dct_spectral_decomposition(psf: PsfKernel, N: int, bc: str = "reflective") -> DctSpectral:
    """Eigenvalues of the reflective-boundary blur from one impulse response.

    With ``e_1`` the unit impulse at pixel (0, 0), ``lam = C(A e_1) / C(e_1)``
    elementwise. Valid only for a symmetric PSF under reflective boundaries.
    """
    if bc != "reflective":
        raise ValueError("cosine diagonalisation requires reflective boundary conditions")
    if not psf.is_symmetric():
        raise ValueError("cosine diagonalisation requires a symmetric PSF")
    e1 = np.zeros((N, N))
    e1[0, 0] = 1.0
    lam = (_dct2(apply_blur(e1, psf, "reflective")) / _dct2(e1)).ravel()
    sig = np.abs(lam)
    order = np.argsort(-sig, kind="stable")
    return DctSpectral(N, lam, order, sig[order], np.where(lam[order] < 0, -1.0, 1.0))


def make_inverse_crime_free_data(padded_image, psf: PsfKernel, N: int) -> Tuple[np.ndarray, np.ndarray]:
    """Blur an enlarged image with zero boundaries and crop the central ``N x N`` of both.

    Returns ``(cropped_true, cropped_blurred)``.
    """
    img = np.asarray(padded_image, dtype=float)
    H, W = img.shape
    if H < N or W < N or (H - N) % 2 or (W - N) % 2:
        raise ValueError("padded image must exceed N by an even margin on each axis")
    pad = min(H - N, W - N) // 2
    if pad < psf.M:
        raise ValueError(f"padding {pad} is smaller than the PSF half-width {psf.M}")
    blurred = apply_blur(img, psf, "zero")
    r0, c0 = (H - N) // 2, (W - N) // 2
    crop = (slice(r0, r0 + N), slice(c0, c0 + N))
    return img[crop].copy(), blurred[crop].copy()


def default_kernel_size(N: int) -> int:
    """Kernel spanning the image, rounded down to odd."""
    return N if N % 2 == 1 else N - 1

