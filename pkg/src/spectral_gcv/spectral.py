"""Spectral cut-off regularisation with the generalised cross-validation rule.

Everything here works on the singular system of a semi-discrete forward
operator ``K_m`` and on the data expanded in its left singular basis. The
functions are operator agnostic; :mod:`spectral_gcv.green` and
:mod:`spectral_gcv.imaging` supply concrete systems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import kernels

__all__ = [
    "BoundIndexError",
    "CutoffEstimate",
    "GcvParams",
    "ObservationCoefficients",
    "OracleIndices",
    "SingularSystem",
    "cutoff_estimate",
    "dense_svd",
    "gcv_score",
    "gcv_scores",
    "l2_constant",
    "optimal_index",
    "oracle_indices",
    "project_observations",
    "select_gcv_index",
    "strong_oracle",
    "symmetric_eigendecomposition",
    "theorem_l2_bound",
    "weak_oracle",
]


class BoundIndexError(IndexError):
    """The index ``ceil(s / eps**2)`` of the error bound lies beyond the spectrum."""


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SingularSystem:
    """Singular values and left basis of a semi-discrete operator.

    ``sigmas`` holds the ``r <= m`` strictly positive singular values in
    non-increasing order. The left basis is given either densely as the
    columns of ``left_vectors`` (``m x m``; the first ``r`` columns pair with
    ``sigmas``) or through ``transform``, a callable mapping a data vector to
    its length-``m`` coefficient vector in the same ordering. ``right_evaluator``
    returns, for a 1-based index ``j``, whatever representation of ``v_j`` the
    producer documents (coefficients in a function dictionary or a dense
    vector).
    """

    m: int
    sigmas: np.ndarray
    left_vectors: Optional[np.ndarray] = None
    right_evaluator: Optional[Callable[[int], np.ndarray]] = field(default=None, compare=False)
    transform: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        sig = np.asarray(self.sigmas, dtype=float)
        if sig.ndim != 1 or sig.size == 0 or sig.size > self.m:
            raise ValueError(f"need 1 <= len(sigmas) <= m={self.m}, got {sig.shape}")
        if np.any(sig <= 0):
            raise ValueError("singular values must be strictly positive")
        if np.any(np.diff(sig) > 0):
            raise ValueError("singular values must be non-increasing")
        object.__setattr__(self, "sigmas", sig)
        if self.left_vectors is None and self.transform is None:
            raise ValueError("either left_vectors or transform is required")
        if self.left_vectors is not None:
            u = np.asarray(self.left_vectors, dtype=float)
            if u.shape != (self.m, self.m):
                raise ValueError(f"left_vectors must be {self.m}x{self.m}, got {u.shape}")
            object.__setattr__(self, "left_vectors", u)

    @property
    def rank(self) -> int:
        return self.sigmas.size

    def sigma(self, j: int) -> float:
        """1-based singular value lookup."""
        return float(self.sigmas[j - 1])


@dataclass(frozen=True)
class ObservationCoefficients:
    m: int
    coeffs: np.ndarray
    delta_true: Optional[float] = None

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.m,):
            raise ValueError(f"expected {self.m} coefficients, got shape {c.shape}")
        if self.delta_true is not None and self.delta_true < 0:
            raise ValueError("delta_true must be nonnegative")
        object.__setattr__(self, "coeffs", c)

    def tail_energy(self) -> np.ndarray:
        """``tail[k] = sum_{j>k} c_j**2`` for ``k = 0..m``."""
        c2 = self.coeffs**2
        return np.append(np.cumsum(c2[::-1])[::-1], 0.0)


@dataclass(frozen=True)
class CutoffEstimate:
    k: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.k != len(self.amplitudes):
            raise ValueError("k must equal the number of amplitudes")


@dataclass(frozen=True)
class OracleIndices:
    t: int
    s: int

    def __post_init__(self):
        if self.t > self.s:
            raise ValueError(f"weak oracle {self.t} exceeds strong oracle {self.s}")


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    # recover the intended rational from binary floats like 1/12
    return Fraction(x).limit_denominator(10**9)


@dataclass(frozen=True)
class GcvParams:
    """Oscillation tolerance and the admissible GCV range ``k <= m * k_max_fraction``."""

    epsilon: Union[Fraction, float, str] = Fraction(1, 12)
    k_max_fraction: Union[Fraction, float, str] = Fraction(1, 2)

    def __post_init__(self):
        eps = _as_fraction(self.epsilon)
        frac = _as_fraction(self.k_max_fraction)
        if not 0 < eps <= Fraction(1, 12):
            raise ValueError(f"epsilon must lie in (0, 1/12], got {eps}")
        if not 0 < frac <= 1:
            raise ValueError(f"k_max_fraction must lie in (0, 1], got {frac}")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "k_max_fraction", frac)

    def k_max(self, m: int) -> int:
        return math.floor(m * self.k_max_fraction)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def project_observations(
    data, system: SingularSystem, delta_true: Optional[float] = None
) -> ObservationCoefficients:
    """Expand ``data`` in the left singular basis of ``system``."""
    data = np.asarray(data, dtype=float).ravel()
    if data.size != system.m:
        raise ValueError(f"data has {data.size} entries, system expects {system.m}")
    if system.transform is not None:
        coeffs = np.asarray(system.transform(data), dtype=float)
    else:
        coeffs = system.left_vectors.T @ data
    return ObservationCoefficients(system.m, coeffs, delta_true)


def gcv_scores(obs: ObservationCoefficients, k_max: Optional[int] = None) -> np.ndarray:
    """Vector of ``Psi_m(k)`` for ``k = 0..k_max`` (default ``m - 1``)."""
    m = obs.m
    if k_max is None:
        k_max = m - 1
    if not 0 <= k_max < m:
        raise ValueError(f"k_max must lie in [0, {m - 1}], got {k_max}")
    ks = np.arange(k_max + 1)
    return obs.tail_energy()[: k_max + 1] / (1.0 - ks / m) ** 2


def gcv_score(obs: ObservationCoefficients, k: int) -> float:
    """``Psi_m(k) = sum_{j>k} c_j**2 / (1 - k/m)**2``, defined for ``0 <= k < m``."""
    m = obs.m
    if not 0 <= k < m:
        raise ValueError(f"GCV score needs 0 <= k < m={m}, got {k}")
    tail = float(np.sum(obs.coeffs[k:] ** 2))
    return tail / (1.0 - k / m) ** 2


def select_gcv_index(
    obs: ObservationCoefficients, params: GcvParams = GcvParams(), k_limit: Optional[int] = None
) -> int:
    """Minimiser of the GCV functional over ``0 <= k <= floor(m * k_max_fraction)``.

    Ties go to the smallest ``k``. ``k_limit`` additionally caps the range,
    e.g. at the numerical rank of a rank-deficient operator.
    """
    if obs.m < 2:
        raise ValueError("GCV needs m >= 2")
    k_max = min(params.k_max(obs.m), obs.m - 1)
    if k_limit is not None:
        k_max = min(k_max, k_limit)
    return int(np.argmin(gcv_scores(obs, k_max)))


def cutoff_estimate(obs: ObservationCoefficients, system: SingularSystem, k: int) -> CutoffEstimate:
    if not 0 <= k <= system.rank:
        raise ValueError(f"truncation index must lie in [0, {system.rank}], got {k}")
    return CutoffEstimate(k, obs.coeffs[:k] / system.sigmas[:k])


def _check_oracle_inputs(f_coeffs, sigmas, delta):
    f = np.asarray(f_coeffs, dtype=float)
    s = np.asarray(sigmas, dtype=float)
    if f.shape != s.shape or f.ndim != 1:
        raise ValueError("f_coeffs and sigmas must be equal-length sequences")
    if not delta > 0:
        raise ValueError("delta must be positive")
    return f, s


def _last_satisfying(lhs: np.ndarray, rhs: np.ndarray) -> int:
    # scan everything; the satisfying set need not be contiguous for arbitrary spectra
    ok = np.flatnonzero(lhs <= rhs)
    return int(ok[-1])


def weak_oracle(f_coeffs, sigmas, delta: float) -> int:
    """Largest ``k`` with ``k delta**2 <= sum_{j>k} sigma_j**2 f_j**2``."""
    f, s = _check_oracle_inputs(f_coeffs, sigmas, delta)
    m = f.size
    energy = (s * f) ** 2
    tail = np.append(np.cumsum(energy[::-1])[::-1], 0.0)
    ks = np.arange(m + 1)
    return _last_satisfying(ks * delta**2, tail)


def strong_oracle(f_coeffs, sigmas, delta: float) -> int:
    """Largest ``k`` with ``k delta**2 / sigma_k**2 <= sum_{j>k} f_j**2`` (``k = 0`` always admissible)."""
    f, s = _check_oracle_inputs(f_coeffs, sigmas, delta)
    m = f.size
    tail = np.append(np.cumsum((f**2)[::-1])[::-1], 0.0)
    lhs = np.empty(m + 1)
    lhs[0] = 0.0
    lhs[1:] = np.arange(1, m + 1) * delta**2 / s**2
    return _last_satisfying(lhs, tail)


def oracle_indices(f_coeffs, sigmas, delta: float) -> OracleIndices:
    return OracleIndices(weak_oracle(f_coeffs, sigmas, delta), strong_oracle(f_coeffs, sigmas, delta))


def optimal_index(errors: Sequence[float]) -> int:
    """Argmin over the full range; smallest index on ties."""
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        raise ValueError("need at least one error value")
    return int(np.argmin(e))


def l2_constant(epsilon) -> float:
    """``sqrt(1 + eps) / eps + sqrt(34 eps + 36)``."""
    eps = float(_as_fraction(epsilon))
    return math.sqrt(1.0 + eps) / eps + math.sqrt(34.0 * eps + 36.0)


def theorem_l2_bound(
    s_oracle: int,
    delta: float,
    sigma_lookup: Union[Callable[[int], float], Sequence[float]],
    params: GcvParams = GcvParams(),
    m: Optional[int] = None,
) -> float:
    """High-probability bound ``L * sqrt(s) * delta / sigma_{ceil(s/eps**2)}``.

    ``sigma_lookup`` is either a 1-based callable or a sequence of the ``m``
    singular values. Raises :class:`BoundIndexError` when the bound index
    exceeds ``m``.
    """
    if s_oracle < 0:
        raise ValueError("oracle index must be nonnegative")
    if s_oracle == 0:
        return 0.0
    if not callable(sigma_lookup):
        seq = np.asarray(sigma_lookup, dtype=float)
        m = seq.size if m is None else m
        lookup = lambda j: float(seq[j - 1])  # noqa: E731
    else:
        lookup = sigma_lookup
    idx = math.ceil(Fraction(s_oracle) / params.epsilon**2)
    if m is not None and idx > m:
        raise BoundIndexError(f"bound index {idx} exceeds m={m}")
    return l2_constant(params.epsilon) * math.sqrt(s_oracle) * delta / lookup(idx)


def symmetric_eigendecomposition(a, sym_tol: float = 1e-12):
    """Eigenpairs of a dense symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues non-increasing and
    eigenvectors as orthonormal columns.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if a.size and np.max(np.abs(a - a.T)) > sym_tol * scale:
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    w, v, _ = kernels.jacobi_eigh(np.ascontiguousarray(a), 1e-15, 100)
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def dense_svd(a, full_matrices: bool = False):
    """``(U, sigma, Vt)`` with ``a = U diag(sigma) Vt`` and sigma non-increasing.

    LAPACK's divide-and-conquer routine via numpy; ``full_matrices`` completes
    ``U`` to a square orthogonal matrix.
    """
    a = np.asarray(a, dtype=float)
    u, s, vt = np.linalg.svd(a, full_matrices=full_matrices)
    return u, s, vt
