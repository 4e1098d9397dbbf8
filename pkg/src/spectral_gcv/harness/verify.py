"""Invariant suites run by ``spectral-gcv verify``.

Each suite returns a :class:`SuiteResult` with the worst measured deviation
and the tolerance it was held to. ``sigma_perturbation`` multiplies the
closed-form singular values by ``1 + p`` before comparison; a nonzero value
is a sensitivity canary and must make the eigensystem suite fail.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from .. import green
from ..imaging import blur, radon
from ..spectral import symmetric_eigendecomposition
from ..stochastics import (
    omega_membership_batch,
    omega_shift,
    p_eps_estimate,
    sqrt_envelope_fit,
    substream,
)

__all__ = ["SUITES", "SuiteResult", "run_suites"]


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str
    seconds: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.passed))
        object.__setattr__(self, "measured", float(self.measured))
        object.__setattr__(self, "tolerance", float(self.tolerance))

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.name}: measured={self.measured:.3e} tol={self.tolerance:.1e} {self.detail} ({self.seconds:.2f}s)"


def closed_form_svd(m_values=(1, 2, 4, 8, 16, 32), sigma_perturbation: float = 0.0, **_) -> SuiteResult:
    """Closed-form ``sigma_{k,m}^2`` against Jacobi eigenvalues of ``T_m``."""
    worst = 0.0
    for m in m_values:
        _, _, _, t = green.build_matrices(m)
        w, _ = symmetric_eigendecomposition(t)
        sig = green.discrete_singular_value(np.arange(1, m + 1), m) * (1.0 + sigma_perturbation)
        worst = max(worst, float(np.max(np.abs(sig**2 - w) / w)))
    s11 = (green.discrete_singular_value(1, 1) * (1.0 + sigma_perturbation)) ** 2
    base_err = abs(s11 - 1.0 / 48.0)
    ok = worst <= 1e-9 and base_err <= 1e-12
    return SuiteResult(
        "closed_form_svd", ok, worst, 1e-9, f"m={list(m_values)} |sigma_11^2-1/48|={base_err:.1e}"
    )


def trig_identity(m_max: int = 20, **_) -> SuiteResult:
    """Discrete sine orthogonality by direct summation, every case."""
    worst = 0.0
    for m in range(1, m_max + 1):
        l = np.arange(1, m + 1)
        j = np.arange(1, 5 * (m + 1) + 1)
        k = np.arange(1, m + 1)
        direct = np.sin(np.pi * np.outer(j, l) / (m + 1)) @ np.sin(np.pi * np.outer(l, k) / (m + 1))
        closed = green.trig_orthogonality(j[:, None], k[None, :], m)
        worst = max(worst, float(np.max(np.abs(direct - closed))))
    return SuiteResult("trig_orthogonality", worst <= 1e-10, worst, 1e-10, f"m<={m_max}, j<=5(m+1)")


def _gauss_cross_gram(m: int, j_max: int, nodes: int = 40) -> np.ndarray:
    # (v_j, v_{k,m}) by Gauss-Legendre on each smooth piece between collocation nodes
    x0, w0 = np.polynomial.legendre.leggauss(nodes)
    edges = np.concatenate(([0.0], green.collocation_points(m), [1.0]))
    lo, hi = edges[:-1, None], edges[1:, None]
    x = (0.5 * (hi - lo) * x0 + 0.5 * (hi + lo)).ravel()
    w = (0.5 * (hi - lo) * w0).ravel()
    model = green.GreenModel(m)
    kap = green.kernel_value(x[:, None], model.xis[None, :])
    vk = np.stack([kap @ model.right_coefficients(k) for k in range(1, m + 1)], axis=1)
    vj = math.sqrt(2.0) * np.sin(np.pi * np.outer(x, np.arange(1, j_max + 1)))
    return (vj * w[:, None]).T @ vk


def cross_gram_quadrature(m_max: int = 16, j_max: int = 50, **_) -> SuiteResult:
    worst = 0.0
    for m in range(1, m_max + 1):
        quad = _gauss_cross_gram(m, j_max)
        j = np.arange(1, j_max + 1)[:, None]
        k = np.arange(1, m + 1)[None, :]
        worst = max(worst, float(np.max(np.abs(quad - green.cross_gram(j, k, m)))))
    return SuiteResult("cross_gram_quadrature", worst <= 1e-8, worst, 1e-8, f"m<={m_max}, j<={j_max}")


def concentration(
    seed: int = 0, m: int = 512, t: int = 64, runs: int = 10_000, reps: int = 100_000, **_
) -> SuiteResult:
    """Membership frequency of the concentration event against its lower bound, and the envelope fit."""
    eps = 1.0 / 12.0
    rng = substream(seed, 9, 0)
    member = np.empty(runs, dtype=bool)
    for lo in range(0, runs, 1000):
        hi = min(runs, lo + 1000)
        member[lo:hi] = omega_membership_batch(rng.standard_normal((hi - lo, m)), eps, t, 1.0)
    freq = float(member.mean())
    # p_eps at a non-integer argument: round up, the stricter of the two choices
    t_arg = math.ceil(omega_shift(eps, t))
    p_hat, _ = p_eps_estimate(eps, t_arg, reps, substream(seed, 9, 1))
    ts = [100, 1000, 10000]
    ps = [p_eps_estimate(eps, tt, reps, substream(seed, 9, 2, i))[0] for i, tt in enumerate(ts)]
    _, r2 = sqrt_envelope_fit(ts, ps)
    ok = freq >= 1.0 - p_hat and r2 >= 0.95
    return SuiteResult(
        "concentration",
        ok,
        freq,
        1.0 - p_hat,
        f"frequency vs 1-p_hat({t_arg}), envelope R^2={r2:.4f}",
    )


def operators(seed: int = 0, **_) -> SuiteResult:
    """Cosine diagonalisation against convolution, adjoints, and Radon chord sums."""
    rng = substream(seed, 9, 3)
    worst_dct = 0.0
    for N, sigma, K in ((8, 1.0, 5), (64, 4.0, 63)):
        psf = blur.gaussian_psf(sigma, K)
        spec = blur.dct_spectral_decomposition(psf, N)
        for _ in range(10):
            x = rng.standard_normal((N, N))
            direct = blur.apply_blur(x, psf, "reflective")
            rel = np.linalg.norm(spec.apply(x) - direct) / np.linalg.norm(direct)
            worst_dct = max(worst_dct, float(rel))
    geo = radon.SinogramGeometry.uniform(32, 60)
    op = radon.radon_build(geo)
    chord = float(np.max(np.abs(op.row_sums() - radon.chord_lengths(geo))))
    x = rng.standard_normal(32 * 32)
    y = rng.standard_normal(geo.n_rays)
    adj = abs(float(op.apply(x) @ y - x @ op.adjoint(y))) / (np.linalg.norm(x) * np.linalg.norm(y))
    ok = worst_dct <= 1e-8 and chord <= 1e-9 and adj <= 1e-10
    return SuiteResult(
        "operators",
        ok,
        max(worst_dct, chord),
        1e-8,
        f"dct={worst_dct:.1e} chord={chord:.1e} adjoint={adj:.1e}",
    )


SUITES: Dict[str, Callable[..., SuiteResult]] = {
    "closed_form_svd": closed_form_svd,
    "trig_orthogonality": trig_identity,
    "cross_gram_quadrature": cross_gram_quadrature,
    "concentration": concentration,
    "operators": operators,
}


def run_suites(
    names: Optional[List[str]] = None,
    seed: int = 0,
    m_max: int = 32,
    sigma_perturbation: float = 0.0,
) -> List[SuiteResult]:
    """Run the named suites (all by default) in a fixed order."""
    names = list(SUITES) if names is None else names
    m_values = tuple(m for m in (1, 2, 4, 8, 16, 32, 64, 128) if m <= m_max)
    results = []
    for name in names:
        t0 = time.perf_counter()
        res = SUITES[name](seed=seed, m_values=m_values, sigma_perturbation=sigma_perturbation)
        results.append(
            SuiteResult(res.name, res.passed, res.measured, res.tolerance, res.detail, time.perf_counter() - t0)
        )
    return results
