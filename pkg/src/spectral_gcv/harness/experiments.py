"""Monte Carlo runners for the integral-equation, deblurring and CT experiments.

Every trial draws its noise from its own substream keyed by
``(experiment, smoothness index, snr index, trial)`` under the master seed,
so results do not depend on how trials are spread over worker threads.
Records come back ordered by ``(smoothness, snr, trial)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .. import green
from ..imaging import blur, phantoms, radon
from ..spectral import (
    BoundIndexError,
    GcvParams,
    ObservationCoefficients,
    SingularSystem,
    dense_svd,
    optimal_index,
    oracle_indices,
    project_observations,
    select_gcv_index,
    theorem_l2_bound,
)
from ..stochastics import box_stats, omega_membership, snr_to_delta, substream
from .config import ExperimentConfig

__all__ = [
    "CtContext",
    "DeblurContext",
    "IntegralContext",
    "SummaryTable",
    "TrialRecord",
    "build_ct_context",
    "build_deblur_context",
    "build_integral_context",
    "run_ct",
    "run_deblur",
    "run_experiment",
    "run_integral",
    "spectral_errors",
    "summarize",
    "write_outputs",
]

# stream keys
_EXPERIMENT_KEY = {"integral": 1, "deblur": 2, "ct": 3}
_SOURCE, _NOISE, _PHANTOM = 0, 1, 2


@dataclass(frozen=True)
class TrialRecord:
    """Raw outcome of one trial. ``e_opt <= e_gcv`` is not enforced.

    The integral experiment also fills the oracle indices, membership of the
    concentration event at the weak oracle, and the projected-space error
    against its high-probability bound (``l2_bound`` is ``None`` when the
    bound index falls outside the spectrum).
    """

    experiment: str
    smoothness: Optional[float]
    snr: float
    trial: int
    k_gcv: int
    k_opt: int
    e_gcv: float
    e_opt: float
    omega_member: Optional[bool] = None
    t_weak: Optional[int] = None
    s_strong: Optional[int] = None
    l2_error: Optional[float] = None
    l2_bound: Optional[float] = None
    wall_time: float = 0.0

    @property
    def ratio(self) -> float:
        return self.e_gcv / self.e_opt if self.e_opt > 0 else math.inf


CSV_FIELDS = [f.name for f in fields(TrialRecord) if f.name != "wall_time"]


def spectral_errors(coeffs, sigmas, a, x_norm2: float, residual: float = 0.0) -> np.ndarray:
    """``||x_k - x||`` for ``k = 0..r`` in an orthonormal right basis.

    ``x_k = sum_{j<=k} c_j / sigma_j v_j``; ``a`` holds ``(x, v_j)`` for at
    least ``j <= r``. The tail uses ``||x||^2 - sum_{j<=k} a_j^2`` so that
    incomplete right bases work too. ``residual`` adds a fixed squared error.
    """
    s = np.asarray(sigmas, dtype=float)
    r = s.size
    c = np.asarray(coeffs, dtype=float)[:r]
    a = np.asarray(a, dtype=float)[:r]
    head = np.concatenate(([0.0], np.cumsum((c / s - a) ** 2)))
    tail = np.maximum(x_norm2 - np.concatenate(([0.0], np.cumsum(a**2))), 0.0)
    return np.sqrt(head + tail + residual)


def _params(cfg: ExperimentConfig) -> GcvParams:
    return GcvParams(cfg.epsilon_fraction, cfg.k_max_fraction)


def _run_ordered(tasks: Sequence, fn: Callable, threads: int) -> List:
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def _timed(fn):
    def wrapper(task):
        t0 = time.perf_counter()
        rec = fn(task)
        return _replace_time(rec, time.perf_counter() - t0)

    return wrapper


def _replace_time(rec: TrialRecord, dt: float) -> TrialRecord:
    data = {f.name: getattr(rec, f.name) for f in fields(TrialRecord)}
    data["wall_time"] = dt
    return TrialRecord(**data)


# ---------------------------------------------------------------------------
# integral equation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntegralContext:
    """Noise-independent quantities for one smoothness level."""

    s: float
    model: green.GreenModel
    system: SingularSystem
    source: green.SampledSource
    g_exact: np.ndarray
    a: np.ndarray
    residual: float
    f_norm: float


def build_integral_context(cfg: ExperimentConfig, s: float, model: Optional[green.GreenModel] = None) -> IntegralContext:
    """One shared Gaussian draw ``X_j`` serves every smoothness level."""
    model = model or green.GreenModel(cfg.m)
    draws = substream(cfg.master_seed, _EXPERIMENT_KEY["integral"], _SOURCE).standard_normal(cfg.D)
    src = green.sample_source(s, cfg.D, seed=None, draws=draws)
    g = green.exact_collocation_data(src, cfg.m)
    a = green.project_source(src, model)
    res = green.discretization_residual(src, model, a)
    return IntegralContext(
        s, model, model.system(), src, g, a, res, float(np.linalg.norm(src.f_coeffs))
    )


def integral_trial(
    cfg: ExperimentConfig, ctx: IntegralContext, s_idx: int, snr_idx: int, trial: int
) -> TrialRecord:
    params = _params(cfg)
    snr = float(cfg.snr[snr_idx])
    delta = snr_to_delta(ctx.g_exact, snr)
    rng = substream(cfg.master_seed, _EXPERIMENT_KEY["integral"], _NOISE, s_idx, snr_idx, trial)
    noise = delta * rng.standard_normal(cfg.m)
    obs = project_observations(ctx.g_exact + noise, ctx.system, delta)
    model = ctx.model
    proj = green.trial_errors(ctx.source, model, obs, ctx.a, residual=0.0)
    errs = np.sqrt(proj**2 + ctx.residual) / ctx.f_norm
    k_gcv = select_gcv_index(obs, params)
    k_opt = optimal_index(errs)
    orc = oracle_indices(ctx.a, model.sigmas_discrete, delta)
    omega = omega_membership(model.left_transform(noise), float(params.epsilon), max(orc.t, 1), delta)
    try:
        bound = theorem_l2_bound(orc.s, delta, model.sigmas_discrete, params, cfg.m)
    except BoundIndexError:
        bound = None
    return TrialRecord(
        experiment="integral",
        smoothness=ctx.s,
        snr=snr,
        trial=trial,
        k_gcv=k_gcv,
        k_opt=k_opt,
        e_gcv=float(errs[k_gcv]),
        e_opt=float(errs[k_opt]),
        omega_member=bool(omega),
        t_weak=orc.t,
        s_strong=orc.s,
        l2_error=float(proj[k_gcv]),
        l2_bound=bound,
    )


def run_integral(cfg: ExperimentConfig) -> List[TrialRecord]:
    model = green.GreenModel(cfg.m)
    records: List[TrialRecord] = []
    for s_idx, s in enumerate(cfg.smoothness):
        ctx = build_integral_context(cfg, float(s), model)
        tasks = [(i, t) for i in range(len(cfg.snr)) for t in range(cfg.trials)]
        fn = _timed(lambda it: integral_trial(cfg, ctx, s_idx, it[0], it[1]))
        records.extend(_run_ordered(tasks, fn, cfg.threads))
    return records


# ---------------------------------------------------------------------------
# shared imaging trial
# ---------------------------------------------------------------------------


def _imaging_trial(
    name: str,
    cfg: ExperimentConfig,
    b_exact: np.ndarray,
    coeffs_of: Callable[[np.ndarray], np.ndarray],
    m: int,
    sigmas: np.ndarray,
    a: np.ndarray,
    x_norm2: float,
    snr_idx: int,
    trial: int,
) -> TrialRecord:
    snr = float(cfg.snr[snr_idx])
    delta = snr_to_delta(b_exact, snr)
    rng = substream(cfg.master_seed, _EXPERIMENT_KEY[name], _NOISE, 0, snr_idx, trial)
    data = b_exact + delta * rng.standard_normal(b_exact.shape)
    obs = ObservationCoefficients(m, coeffs_of(data), delta)
    errs = spectral_errors(obs.coeffs, sigmas, a, x_norm2) / math.sqrt(x_norm2)
    k_gcv = select_gcv_index(obs, _params(cfg), k_limit=sigmas.size)
    k_opt = optimal_index(errs)
    return TrialRecord(
        experiment=name,
        smoothness=None,
        snr=snr,
        trial=trial,
        k_gcv=k_gcv,
        k_opt=k_opt,
        e_gcv=float(errs[k_gcv]),
        e_opt=float(errs[k_opt]),
    )


def _run_imaging(name: str, cfg: ExperimentConfig, b_exact, coeffs_of, m, sigmas, a, x_norm2):
    tasks = [(i, t) for i in range(len(cfg.snr)) for t in range(cfg.trials)]
    fn = _timed(
        lambda it: _imaging_trial(name, cfg, b_exact, coeffs_of, m, sigmas, a, x_norm2, it[0], it[1])
    )
    return _run_ordered(tasks, fn, cfg.threads)


# ---------------------------------------------------------------------------
# deblurring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeblurContext:
    psf: blur.PsfKernel
    spectral: blur.DctSpectral
    x_true: np.ndarray
    b_exact: np.ndarray
    a: np.ndarray

    @property
    def system(self) -> SingularSystem:
        return self.spectral.system()


def build_deblur_context(cfg: ExperimentConfig) -> DeblurContext:
    """Star field blurred without inverse crime, plus the cosine diagonalisation."""
    N = cfg.N
    psf = blur.gaussian_psf(cfg.psf_sigma, cfg.effective_kernel_size)
    rng = substream(cfg.master_seed, _EXPERIMENT_KEY["deblur"], _PHANTOM)
    scene = phantoms.star_field(N, cfg.n_stars, seed=rng, pad=psf.M)
    x_true, b_exact = blur.make_inverse_crime_free_data(scene, psf, N)
    spec = blur.dct_spectral_decomposition(psf, N, "reflective")
    return DeblurContext(psf, spec, x_true, b_exact, spec.forward(x_true))


def run_deblur(cfg: ExperimentConfig) -> List[TrialRecord]:
    ctx = build_deblur_context(cfg)
    spec = ctx.spectral
    r = spec.rank
    return _run_imaging(
        "deblur",
        cfg,
        ctx.b_exact,
        spec.data_coefficients,
        cfg.N * cfg.N,
        spec.sigmas[:r],
        ctx.a,
        float(np.sum(ctx.x_true**2)),
    )


# ---------------------------------------------------------------------------
# computed tomography
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CtContext:
    operator: radon.RadonOperator
    U: np.ndarray
    sigmas: np.ndarray
    Vt: np.ndarray
    x_true: np.ndarray
    b_exact: np.ndarray
    a: np.ndarray

    @property
    def m(self) -> int:
        return self.operator.shape[0]

    @property
    def rank(self) -> int:
        return self.sigmas.size

    def coefficients(self, data) -> np.ndarray:
        """``(b, u_j)`` for ``j <= r``, then the rest of ``||b||^2`` in one slot.

        The left basis beyond the rank is any orthonormal completion; taking
        the normalised out-of-range residual as its first vector leaves one
        nonzero coefficient, which is all the selection rule needs.
        """
        b = np.asarray(data, dtype=float).ravel()
        r = self.rank
        c = np.zeros(self.m)
        c[:r] = self.U[:, :r].T @ b
        if r < self.m:
            c[r] = math.sqrt(max(float(b @ b) - float(c[:r] @ c[:r]), 0.0))
        return c

    @property
    def system(self) -> SingularSystem:
        return SingularSystem(
            m=self.m,
            sigmas=self.sigmas,
            transform=self.coefficients,
            right_evaluator=lambda j: self.Vt[j - 1].copy(),
        )


def numerical_rank(sigmas: np.ndarray, shape: Tuple[int, int]) -> int:
    """Count of singular values above ``max(shape) * eps * sigma_1``."""
    if sigmas.size == 0 or sigmas[0] == 0:
        return 0
    tol = max(shape) * np.finfo(float).eps * sigmas[0]
    return int(np.count_nonzero(sigmas > tol))


def build_ct_context(cfg: ExperimentConfig) -> CtContext:
    """Pixelised ellipse phantom as ground truth.

    Exact data are ``A x`` by default; ``ct_data="analytic"`` uses the
    continuous phantom's line integrals instead.
    """
    geo = radon.SinogramGeometry.uniform(cfg.N, cfg.n_angles)
    op = radon.radon_build(geo)
    U, sig, Vt = dense_svd(op.to_dense())
    r = numerical_rank(sig, op.shape)
    x_true = phantoms.ellipse_phantom(cfg.N, cfg.ellipses).ravel()
    if cfg.ct_data == "analytic":
        b_exact = phantoms.ellipse_sinogram(cfg.N, geo.angles, geo.offsets, cfg.ellipses)
    else:
        b_exact = op.apply(x_true)
    return CtContext(op, U, sig[:r], Vt[:r], x_true, b_exact, Vt[:r] @ x_true)


def run_ct(cfg: ExperimentConfig) -> List[TrialRecord]:
    ctx = build_ct_context(cfg)
    return _run_imaging(
        "ct", cfg, ctx.b_exact, ctx.coefficients, ctx.m, ctx.sigmas, ctx.a, float(ctx.x_true @ ctx.x_true)
    )


# ---------------------------------------------------------------------------
# aggregation and output
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SummaryTable:
    """Per ``(experiment, smoothness, snr)`` statistics of the trial records."""

    experiment: str
    rows: List[dict]

    def to_json(self) -> str:
        return json.dumps({"experiment": self.experiment, "rows": self.rows}, indent=2, sort_keys=True) + "\n"

    def row(self, snr: float, smoothness: Optional[float] = None) -> dict:
        for r in self.rows:
            if r["snr"] == snr and r["smoothness"] == smoothness:
                return r
        raise KeyError((smoothness, snr))


def _mean_std(x: np.ndarray) -> Tuple[float, float]:
    return float(np.mean(x)), float(np.std(x, ddof=1)) if x.size > 1 else 0.0


def summarize(records: Sequence[TrialRecord]) -> SummaryTable:
    if not records:
        raise ValueError("no records to summarise")
    groups: Dict[Tuple, List[TrialRecord]] = {}
    for rec in records:
        groups.setdefault((rec.smoothness, rec.snr), []).append(rec)
    rows = []
    for (s, snr), recs in groups.items():
        eg = np.array([r.e_gcv for r in recs])
        eo = np.array([r.e_opt for r in recs])
        mg, sg = _mean_std(eg)
        mo, so = _mean_std(eo)
        row = {
            "smoothness": s,
            "snr": snr,
            "trials": len(recs),
            "e_gcv_mean": mg,
            "e_gcv_std": sg,
            "e_opt_mean": mo,
            "e_opt_std": so,
            "e_gcv_box": box_stats(eg).as_dict(),
            "e_opt_box": box_stats(eo).as_dict(),
            "k_gcv_median": float(np.median([r.k_gcv for r in recs])),
            "k_opt_median": float(np.median([r.k_opt for r in recs])),
        }
        if recs[0].omega_member is not None:
            row["omega_frequency"] = float(np.mean([r.omega_member for r in recs]))
            with_bound = [r for r in recs if r.l2_bound is not None]
            row["l2_bound_excluded"] = len(recs) - len(with_bound)
            row["l2_bound_frequency"] = (
                float(np.mean([r.l2_error <= r.l2_bound for r in with_bound])) if with_bound else None
            )
        rows.append(row)
    return SummaryTable(records[0].experiment, rows)


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_csv(records: Sequence[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for rec in records:
        w.writerow([_csv_value(getattr(rec, f)) for f in CSV_FIELDS])
    return buf.getvalue()


def _smoothness_tag(s: Optional[float]) -> str:
    return "" if s is None else "_s" + repr(float(s)).replace(".", "p")


def write_outputs(records: Sequence[TrialRecord], out_dir) -> Dict[str, Path]:
    """One CSV per ``(experiment, smoothness)``, one JSON summary, and a separate timing file.

    Only the timing file depends on the machine; everything else is a pure
    function of the configuration and master seed.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = records[0].experiment
    written: Dict[str, Path] = {}
    by_s: Dict[Optional[float], List[TrialRecord]] = {}
    for rec in records:
        by_s.setdefault(rec.smoothness, []).append(rec)
    for s, recs in by_s.items():
        p = out / f"{name}{_smoothness_tag(s)}.csv"
        p.write_text(records_csv(recs))
        written[f"csv{_smoothness_tag(s)}"] = p
    p = out / f"{name}_summary.json"
    p.write_text(summarize(records).to_json())
    written["summary"] = p
    p = out / f"{name}_timings.csv"
    p.write_text(
        "smoothness,snr,trial,wall_time\n"
        + "".join(f"{_csv_value(r.smoothness)},{r.snr!r},{r.trial},{r.wall_time!r}\n" for r in records)
    )
    written["timings"] = p
    return written


_RUNNERS = {"integral": run_integral, "deblur": run_deblur, "ct": run_ct}


def run_experiment(cfg: ExperimentConfig) -> List[TrialRecord]:
    cfg.validate()
    try:
        runner = _RUNNERS[cfg.experiment]
    except KeyError:
        raise ValueError(f"{cfg.experiment!r} is not a Monte Carlo experiment") from None
    return runner(cfg)
