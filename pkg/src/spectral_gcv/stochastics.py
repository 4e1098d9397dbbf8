"""Noise, SNR bookkeeping, the concentration event and box-plot statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from . import kernels

__all__ = [
    "BoxStats",
    "NoiseRealization",
    "add_noise",
    "box_stats",
    "delta_to_snr",
    "draw_noise",
    "omega_membership",
    "omega_membership_batch",
    "omega_shift",
    "p_eps_estimate",
    "snr_to_delta",
    "sqrt_envelope_fit",
    "substream",
]


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream for ``key`` under ``master_seed``.

    Streams depend only on ``(master_seed, key)``, never on which worker
    consumes them or in what order.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class NoiseRealization:
    m: int
    eps: np.ndarray = field(repr=False)
    delta: float

    @property
    def vector(self) -> np.ndarray:
        return self.delta * self.eps


def draw_noise(m: int, delta: float, rng: np.random.Generator) -> NoiseRealization:
    return NoiseRealization(m, rng.standard_normal(m), float(delta))


def snr_to_delta(g_exact, snr: float) -> float:
    """Noise level giving ``||g|| / (sqrt(m) delta) = snr``."""
    g = np.asarray(g_exact, dtype=float).ravel()
    norm = float(np.linalg.norm(g))
    if norm == 0.0:
        raise ValueError("zero signal has no SNR")
    if not snr > 0:
        raise ValueError("snr must be positive")
    return norm / (math.sqrt(g.size) * snr)


def delta_to_snr(g_exact, delta: float) -> float:
    g = np.asarray(g_exact, dtype=float).ravel()
    return float(np.linalg.norm(g)) / (math.sqrt(g.size) * delta)


def add_noise(g_exact, delta: float, rng: np.random.Generator) -> np.ndarray:
    """``g + delta * Z`` with fresh standard normal ``Z`` drawn from ``rng``."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    g = np.asarray(g_exact, dtype=float)
    z = rng.standard_normal(g.shape)
    return g + delta * z


def omega_membership(noise_coeffs, eps_tol: float, t: int, delta: float) -> bool:
    """Exhaustive check of the concentration event.

    True iff ``|sum_{j=k+1}^l n_j^2 - (l-k) delta^2| <= eps (l-k) delta^2`` for
    all ``t <= l <= m`` and ``0 <= k <= l/2``. Costs ``O(m^2)``.
    """
    n = np.asarray(noise_coeffs, dtype=float)
    m = n.size
    if not 1 <= t <= m:
        raise ValueError(f"t must lie in [1, {m}]")
    return bool(kernels.omega_check(np.ascontiguousarray(n**2), float(delta) ** 2, float(eps_tol), int(t)))


def omega_membership_batch(noise_coeffs, eps_tol: float, t: int, delta: float) -> np.ndarray:
    """Row-wise :func:`omega_membership` for an ``(runs, m)`` array."""
    n = np.atleast_2d(np.asarray(noise_coeffs, dtype=float))
    if not 1 <= t <= n.shape[1]:
        raise ValueError(f"t must lie in [1, {n.shape[1]}]")
    return kernels.omega_check_batch(np.ascontiguousarray(n**2), float(delta) ** 2, float(eps_tol), int(t))


def omega_shift(eps_tol: float, t: float) -> float:
    """Argument ``(2/3) (eps / (1 + eps)) t`` at which ``p_eps`` bounds the event."""
    return 2.0 / 3.0 * eps_tol / (1.0 + eps_tol) * t


def p_eps_estimate(
    eps_tol: float,
    t: int,
    reps: int,
    rng: np.random.Generator,
    method: str = "chisquare",
    chunk: int = 2**22,
) -> Tuple[float, float]:
    """Monte Carlo estimate of ``(3/eps) E|t^{-1} sum_{j<=t} (eps_j^2 - 1)|``.

    Returns ``(estimate, standard_error)``. For Gaussian noise the sum of
    ``t`` squared draws is chi-square with ``t`` degrees of freedom, which
    ``method="chisquare"`` samples directly; ``method="direct"`` squares and
    sums explicit normal draws.
    """
    if reps < 1000:
        raise ValueError("need at least 1000 repetitions")
    if t < 1:
        raise ValueError("t must be positive")
    if method == "chisquare":
        sums = rng.chisquare(t, size=reps)
    elif method == "direct":
        sums = np.empty(reps)
        per = max(1, chunk // t)
        for lo in range(0, reps, per):
            hi = min(reps, lo + per)
            sums[lo:hi] = np.sum(rng.standard_normal((hi - lo, t)) ** 2, axis=1)
    else:
        raise ValueError(f"unknown method {method!r}")
    dev = np.abs(sums / t - 1.0)
    scale = 3.0 / eps_tol
    return float(scale * dev.mean()), float(scale * dev.std(ddof=1) / math.sqrt(reps))


def sqrt_envelope_fit(ts: Sequence[float], values: Sequence[float]) -> Tuple[float, float]:
    """Least-squares fit ``values ~ C / sqrt(t)``; returns ``(C, R^2)``."""
    x = 1.0 / np.sqrt(np.asarray(ts, dtype=float))
    y = np.asarray(values, dtype=float)
    c = float(x @ y / (x @ x))
    ss_res = float(np.sum((y - c * x) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return c, (1.0 - ss_res / ss_tot) if ss_tot > 0 else 1.0


@dataclass(frozen=True)
class BoxStats:
    q25: float
    median: float
    q75: float
    whisker_low: float
    whisker_high: float
    outliers: List[float]

    def as_dict(self) -> dict:
        return {
            "q25": self.q25,
            "median": self.median,
            "q75": self.q75,
            "whisker_low": self.whisker_low,
            "whisker_high": self.whisker_high,
            "outliers": list(self.outliers),
        }


def box_stats(samples, whisker_factor: float = 6.0) -> BoxStats:
    """Quartiles (linear interpolation) with whiskers at ``whisker_factor`` box heights.

    Each whisker ends at the most extreme sample within ``whisker_factor * IQR``
    of its box edge; everything beyond is an outlier, reported in sample order.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("box statistics need at least one sample")
    q25, med, q75 = np.quantile(x, [0.25, 0.5, 0.75], method="linear")
    reach = whisker_factor * (q75 - q25)
    lo_lim, hi_lim = q25 - reach, q75 + reach
    inside = x[(x >= lo_lim) & (x <= hi_lim)]
    outliers = x[(x < lo_lim) | (x > hi_lim)]
    return BoxStats(
        float(q25),
        float(med),
        float(q75),
        float(inside.min()),
        float(inside.max()),
        [float(v) for v in outliers],
    )
