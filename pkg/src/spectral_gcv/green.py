"""Closed-form singular system of the Green's-function integral operator.

The operator is ``(Kf)(x) = int_0^1 kappa(x, y) f(y) dy`` on ``L^2(0, 1)``
with ``kappa(x, y) = min(x, y) (1 - max(x, y))``, observed through point
evaluations at the collocation nodes ``xi_l = l / (m + 1)``, ``l = 1..m``.

Continuous system: ``sigma_j = 1 / (pi j)**2``, ``v_j = sqrt(2) sin(pi j x)``.
Semi-discrete system: ``u_{k,m} = z_{k,m} = sqrt(2/(m+1)) sin(k pi xi)`` and
``v_{k,m} = sum_l (z_{k,m})_l kappa(xi_l, .) / sigma_{k,m}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np
import scipy.fft

from .spectral import GcvParams, ObservationCoefficients, SingularSystem, l2_constant

__all__ = [
    "GreenModel",
    "SampledSource",
    "build_matrices",
    "cross_gram",
    "cross_gram_sign",
    "derivative_norms",
    "discrete_singular_value",
    "discretization_residual",
    "exact_collocation_data",
    "kernel_value",
    "project_source",
    "s_matrix_eigenvalue",
    "sample_source",
    "source_rng",
    "t0_constant",
    "t0_rate_bound",
    "tail_truncation_bound",
    "trial_error",
    "trial_errors",
    "trig_orthogonality",
]

DEFAULT_BANDWIDTH = 2**14


def kernel_value(x, y, form: str = "min"):
    """Green's function of ``-u'' = f`` with homogeneous Dirichlet conditions.

    ``form="max"`` evaluates ``max(x(1-y), y(1-x))`` instead. That variant is
    not the Green's function and exists only so tests can show it is
    inconsistent with the closed-form singular values.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any((x < 0) | (x > 1) | (y < 0) | (y > 1)):
        raise ValueError("kernel arguments must lie in [0, 1]")
    if form == "min":
        out = np.minimum(x, y) * (1.0 - np.maximum(x, y))
    elif form == "max":
        out = np.maximum(x * (1.0 - y), y * (1.0 - x))
    else:
        raise ValueError(f"unknown kernel form {form!r}")
    return out[()] if out.ndim == 0 else out


def continuous_singular_value(j):
    j = np.asarray(j, dtype=float)
    return 1.0 / (np.pi * j) ** 2


def discrete_singular_value(k, m: int):
    """``sigma_{k,m} = sqrt(1 - 2/3 sin^2 a) / (4 (m+1)^{3/2} sin^2 a)``, ``a = k pi / (2(m+1))``."""
    k_arr = np.asarray(k)
    if np.any(k_arr < 1) or np.any(k_arr > m):
        raise ValueError(f"index must lie in [1, {m}]")
    s2 = np.sin(k_arr * np.pi / (2.0 * (m + 1))) ** 2
    out = np.sqrt(1.0 - 2.0 / 3.0 * s2) / (4.0 * (m + 1) ** 1.5 * s2)
    return float(out) if np.ndim(out) == 0 else out


def s_matrix_eigenvalue(k, m: int):
    """Eigenvalue of ``S_m = (kappa(xi_s, xi_t))`` for eigenvector ``z_{k,m}``.

    ``S_m`` is positive definite (it equals ``Delta_m^{-1} / (m+1)``), so no
    alternating sign appears.
    """
    k_arr = np.asarray(k)
    if np.any(k_arr < 1) or np.any(k_arr > m):
        raise ValueError(f"index must lie in [1, {m}]")
    half = k_arr * np.pi / (2.0 * (m + 1))
    out = 1.0 / (2.0 * (m + 1)) / np.tan(half) / np.sin(2.0 * half)
    return float(out) if np.ndim(out) == 0 else out


def collocation_points(m: int) -> np.ndarray:
    return np.arange(1, m + 1) / (m + 1.0)


def build_matrices(m: int, form: str = "min"):
    """``(Delta_m, R_m, S_m, T_m)``.

    ``T_m`` is the Gram matrix of ``kappa(xi_i, .)``, evaluated from its
    closed form ``xi_i (1 - xi_j)(2 xi_j - xi_i^2 - xi_j^2) / 6`` for ``i <= j``.
    """
    if m < 1:
        raise ValueError("m must be positive")
    xi = collocation_points(m)
    eye = np.eye(m)
    off = np.eye(m, k=1) + np.eye(m, k=-1)
    delta = 2.0 * eye - off
    r = 4.0 * eye + off
    s = kernel_value(xi[:, None], xi[None, :], form=form)
    lo = np.minimum.outer(xi, xi)
    hi = np.maximum.outer(xi, xi)
    t = lo * (1.0 - hi) * (2.0 * hi - lo**2 - hi**2) / 6.0
    return delta, r, s, t


def _sine_matrix(m: int) -> np.ndarray:
    l = np.arange(1, m + 1)
    return np.sin(np.pi * np.outer(l, l) / (m + 1))


def cross_gram_sign(j, k, m: int):
    """Selection rule: +1, -1 or 0 for ``j = t(m+1) + s``."""
    j = np.asarray(j, dtype=np.int64)
    k = np.asarray(k, dtype=np.int64)
    t, s = np.divmod(j, m + 1)
    plus = (s == k) & (t % 2 == 0)
    minus = (s + k == m + 1) & (t % 2 == 1)
    return plus.astype(np.int64) - minus.astype(np.int64)


def trig_orthogonality(j, k, m: int):
    """Case value of ``sum_{l=1}^m sin(j pi l/(m+1)) sin(k pi l/(m+1))``."""
    if np.any(np.asarray(j) < 1) or np.any(np.asarray(k) < 1) or np.any(np.asarray(k) > m):
        raise ValueError("need j >= 1 and 1 <= k <= m")
    out = cross_gram_sign(j, k, m) * (m + 1) / 2.0
    return float(out) if np.ndim(out) == 0 else out


def cross_gram(j, k, m: int):
    """``(v_j, v_{k,m})`` in ``L^2(0, 1)``."""
    if np.any(np.asarray(j) < 1):
        raise ValueError("continuous index must be >= 1")
    sign = cross_gram_sign(j, k, m)
    out = sign * math.sqrt(m + 1) * continuous_singular_value(j) / discrete_singular_value(k, m)
    return float(out) if np.ndim(out) == 0 else out


def _alias_target(j: np.ndarray, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Discrete index (1..m, or 0 for none) and sign that continuous index ``j`` folds onto."""
    t, s = np.divmod(j, m + 1)
    even = t % 2 == 0
    target = np.where(even, s, m + 1 - s)
    sign = np.where(even, 1.0, -1.0)
    dead = s == 0
    return np.where(dead, 0, target), np.where(dead, 0.0, sign)


def _fold(values: np.ndarray, m: int) -> np.ndarray:
    """``out[k-1] = sum_j sign(j, k) values[j-1]`` over ``j = 1..len(values)``."""
    j = np.arange(1, values.size + 1)
    target, sign = _alias_target(j, m)
    out = np.bincount(target, weights=sign * values, minlength=m + 1)
    return out[1:]


@dataclass(frozen=True)
class GreenModel:
    m: int
    xis: np.ndarray = field(init=False, repr=False)
    sigmas_discrete: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be positive")
        m = self.m
        object.__setattr__(self, "xis", collocation_points(m))
        object.__setattr__(self, "sigmas_discrete", discrete_singular_value(np.arange(1, m + 1), m))

    @cached_property
    def z_vectors(self) -> np.ndarray:
        """Dense ``m x m`` matrix whose column ``k-1`` is ``z_{k,m}``."""
        return math.sqrt(2.0 / (self.m + 1)) * _sine_matrix(self.m)

    @staticmethod
    def sigma_continuous(k):
        return continuous_singular_value(k)

    @staticmethod
    def eigenvalue_continuous(k):
        return (np.pi * np.asarray(k, dtype=float)) ** 2

    def left_transform(self, data) -> np.ndarray:
        """``(data, z_{k,m})`` for all ``k`` via a type-I sine transform."""
        data = np.asarray(data, dtype=float)
        return scipy.fft.dst(data, type=1, axis=-1) / math.sqrt(2.0 * (self.m + 1))

    def right_coefficients(self, k: int) -> np.ndarray:
        """Coefficients of ``v_{k,m}`` over the dictionary ``kappa(xi_l, .)``."""
        l = np.arange(1, self.m + 1)
        z = math.sqrt(2.0 / (self.m + 1)) * np.sin(k * np.pi * l / (self.m + 1))
        return z / self.sigmas_discrete[k - 1]

    def right_vector_values(self, k: int, x) -> np.ndarray:
        """Point values of ``v_{k,m}``."""
        x = np.asarray(x, dtype=float)
        kap = kernel_value(x[..., None], self.xis)
        return kap @ self.right_coefficients(k)

    def system(self, dense: bool = False) -> SingularSystem:
        return SingularSystem(
            m=self.m,
            sigmas=self.sigmas_discrete,
            left_vectors=self.z_vectors if dense else None,
            right_evaluator=self.right_coefficients,
            transform=None if dense else self.left_transform,
        )


@dataclass(frozen=True)
class SampledSource:
    """Random source ``f = sum_{j<=D} sigma_j^s X_j v_j`` with ``X_j`` i.i.d. standard normal."""

    s: float
    D: int
    draws: np.ndarray = field(repr=False)
    seed: Optional[int] = None

    @property
    def f_coeffs(self) -> np.ndarray:
        j = np.arange(1, self.D + 1)
        return continuous_singular_value(j) ** self.s * self.draws

    @property
    def rho(self) -> float:
        """Norm of the generating element ``h``."""
        return float(np.linalg.norm(self.draws))

    def values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        j = np.arange(1, self.D + 1)
        return math.sqrt(2.0) * np.sin(np.pi * np.multiply.outer(x, j)) @ self.f_coeffs


def source_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def sample_source(s: float, D: int = DEFAULT_BANDWIDTH, seed=0, draws=None) -> SampledSource:
    """Draw a source of smoothness ``s``; ``draws`` overrides the Gaussian ``X_j``."""
    if D < 1:
        raise ValueError("bandwidth D must be >= 1")
    if not s > 0:
        raise ValueError("smoothness s must be positive")
    if draws is None:
        x = source_rng(seed).standard_normal(D)
    else:
        x = np.broadcast_to(np.asarray(draws, dtype=float), (D,)).copy()
    return SampledSource(float(s), int(D), x, seed)


def exact_collocation_data(src: SampledSource, m: int) -> np.ndarray:
    """``(K f)(xi_l) = sqrt(2) sum_j (j pi)^{-2(s+1)} X_j sin(j pi xi_l)``."""
    j = np.arange(1, src.D + 1)
    amp = continuous_singular_value(j) * src.f_coeffs
    folded = _fold(amp, m)
    # sum_k folded_k sin(k pi l/(m+1)) is half a type-I DST
    return math.sqrt(2.0) * 0.5 * scipy.fft.dst(folded, type=1)


def project_source(src: SampledSource, model: GreenModel) -> np.ndarray:
    """``(f, v_{k,m})`` for ``k = 1..m``, exact for a source band-limited to ``D``."""
    j = np.arange(1, src.D + 1)
    folded = _fold(continuous_singular_value(j) * src.f_coeffs, model.m)
    return math.sqrt(model.m + 1) * folded / model.sigmas_discrete


def projection_series(a: np.ndarray, model: GreenModel, l) -> np.ndarray:
    """``(P f, v_l) = sum_k a_k (v_{k,m}, v_l)`` for continuous indices ``l``."""
    l = np.asarray(l, dtype=np.int64)
    target, sign = _alias_target(l, model.m)
    padded = np.concatenate(([0.0], a / model.sigmas_discrete))
    return sign * math.sqrt(model.m + 1) * continuous_singular_value(l) * padded[target]


def discretization_residual(src: SampledSource, model: GreenModel, a: Optional[np.ndarray] = None) -> float:
    """``sum_{l<=D} ((P f, v_l) - f_l)^2`` with ``P`` the projection onto span ``v_{k,m}``."""
    if a is None:
        a = project_source(src, model)
    l = np.arange(1, src.D + 1)
    return float(np.sum((projection_series(a, model, l) - src.f_coeffs) ** 2))


def trial_errors(
    src: SampledSource,
    model: GreenModel,
    obs: ObservationCoefficients,
    a: Optional[np.ndarray] = None,
    residual: Optional[float] = None,
) -> np.ndarray:
    """``e_k`` for every ``k = 0..m`` in one pass.

    ``a`` (the projections of the source) and ``residual`` (the third term)
    do not depend on the noise and may be passed in precomputed.
    """
    if a is None:
        a = project_source(src, model)
    if residual is None:
        residual = discretization_residual(src, model, a)
    head = np.concatenate(([0.0], np.cumsum((obs.coeffs / model.sigmas_discrete - a) ** 2)))
    tail = np.append(np.cumsum((a**2)[::-1])[::-1], 0.0)
    return np.sqrt(head + tail + residual)


def trial_error(src, model, obs, k: int, **kw) -> float:
    if not 0 <= k <= model.m:
        raise ValueError(f"k must lie in [0, {model.m}]")
    return float(trial_errors(src, model, obs, **kw)[k])


def tail_truncation_bound(s: float, m: int, D: int) -> float:
    """Bound on ``E|e_k^2 - ||f_k - f||^2|`` caused by dropping modes beyond ``D``.

    ``(3 / pi^4) D^{-3} max_{j<=m} sigma_j^{2s-2}``; for ``s`` in
    {1/4, 3/4, 5/4} this is ``(3/pi^4)`` times ``(m pi)^3/D^3``, ``m pi/D^3``,
    ``1/(pi D^3)``.
    """
    j = np.array([1.0, float(m)])
    worst = np.max(continuous_singular_value(j) ** (2.0 * s - 2.0))
    return 3.0 / np.pi**4 / float(D) ** 3 * float(worst)


def derivative_norms(src: SampledSource) -> Tuple[float, float]:
    """``(||f'||, ||f''||)`` by term-wise differentiation of the sine series."""
    w = np.pi * np.arange(1, src.D + 1)
    f = src.f_coeffs
    return float(np.sqrt(np.sum((w * f) ** 2))), float(np.sqrt(np.sum((w**2 * f) ** 2)))


def t0_constant(s: float) -> float:
    """``(3^s / (2^{4s-1} pi^4))^{1/(5+4s)}``."""
    return (3.0**s / (2.0 ** (4.0 * s - 1.0) * np.pi**4)) ** (1.0 / (5.0 + 4.0 * s))


def t0_rate_bound(
    s: float,
    rho: float,
    delta: float,
    m: int,
    deriv_norms: Tuple[float, float],
    params: GcvParams = GcvParams(),
    exponent: Optional[float] = None,
) -> float:
    """Rate bound for smooth sources: stochastic term plus spline interpolation term.

    The stochastic term is ``L (delta / sqrt(m+1))^p rho^{5/(5+4s)}`` with
    ``L = sqrt(3) C_s^{5/2} L2 pi^2 / eps^4`` and ``p`` defaulting to
    ``4s / (5+4s)``.
    """
    if not s > 0.75:
        raise ValueError("rate bound requires s > 3/4")
    eps = float(Fraction(params.epsilon))
    if exponent is None:
        exponent = 4.0 * s / (5.0 + 4.0 * s)
    pref = math.sqrt(3.0) * t0_constant(s) ** 2.5 * l2_constant(params.epsilon) * np.pi**2 / eps**4
    stochastic = pref * (delta / math.sqrt(m + 1)) ** exponent * rho ** (5.0 / (5.0 + 4.0 * s))
    d1, d2 = deriv_norms
    if s <= 1.25:
        spline = d1 / (math.sqrt(2.0) * (m + 1))
    else:
        spline = d2 / (2.0 * (m + 1) ** 2)
    return float(stochastic + spline)
