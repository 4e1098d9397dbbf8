"""Command line entry point: ``spectral-gcv {integral,deblur,ct,verify}``.

Exit status is 0 on success, 1 when a verification suite fails and 2 on a
configuration error. The worker count comes from ``--threads``, else from
the ``SPECTRAL_GCV_THREADS`` environment variable, else from the config.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

from .config import ConfigError, ExperimentConfig, load_config
from .experiments import run_experiment, summarize, write_outputs
from .verify import run_suites

__all__ = ["THREADS_ENV", "main"]

THREADS_ENV = "SPECTRAL_GCV_THREADS"


def _snr_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}") from exc


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spectral-gcv", description=__doc__.splitlines()[0])
    p.add_argument("experiment", choices=["integral", "deblur", "ct", "verify"])
    p.add_argument("--config", type=Path, help="JSON file of ExperimentConfig fields")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--trials", type=int, help="trials per (smoothness, SNR)")
    p.add_argument("--snr", type=_snr_list, help="comma-separated SNR values")
    p.add_argument("--out", type=str, help="output directory")
    p.add_argument("--threads", type=int, help=f"worker threads (overrides ${THREADS_ENV})")
    return p


def _threads(flag: Optional[int]) -> Optional[int]:
    if flag is not None:
        return flag
    env = os.environ.get(THREADS_ENV)
    if env is None or env == "":
        return None
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides = dict(
        experiment=args.experiment,
        master_seed=args.seed,
        trials=args.trials,
        snr=args.snr,
        out=args.out,
        threads=_threads(args.threads),
    )
    if args.config is not None:
        return load_config(args.config, **overrides)
    try:
        return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None}).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if cfg.experiment == "verify":
        results = run_suites(
            seed=cfg.master_seed, m_max=cfg.verify_m_max, sigma_perturbation=cfg.canary_sigma_perturbation
        )
        for r in results:
            print(r.line())
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        report = [
            {"name": r.name, "passed": r.passed, "measured": r.measured, "tolerance": r.tolerance, "detail": r.detail}
            for r in results
        ]
        (out / "verify_report.json").write_text(json.dumps(report, indent=2) + "\n")
        return 0 if all(r.passed for r in results) else 1

    records = run_experiment(cfg)
    paths = write_outputs(records, cfg.out)
    for row in summarize(records).rows:
        tag = "" if row["smoothness"] is None else f"s={row['smoothness']:g} "
        print(
            f"{tag}snr={row['snr']:g}  e_gcv={row['e_gcv_mean']:.3e}+-{row['e_gcv_std']:.1e}  "
            f"e_opt={row['e_opt_mean']:.3e}+-{row['e_opt_std']:.1e}"
        )
    print("wrote " + ", ".join(str(p) for p in paths.values()))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
