"""Experiment configuration: defaults, JSON loading and validation."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..imaging.phantoms import SHEPP_LOGAN_MODIFIED

__all__ = ["EXPERIMENTS", "ConfigError", "ExperimentConfig", "default_config", "load_config"]

EXPERIMENTS = ("integral", "deblur", "ct", "verify")

INTEGRAL_SNRS = tuple(10.0**p for p in range(0, 9))
IMAGING_SNRS = tuple(10.0**p for p in range(-3, 4))


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    """Everything that determines an experiment's output.

    Fields that do not apply to the chosen experiment are ignored. Imaging
    experiments use ``N``, the integral experiment ``m`` and ``D``.
    """

    experiment: str = "integral"
    m: int = 512
    N: Optional[int] = None
    D: int = 2**14
    smoothness: List[float] = field(default_factory=lambda: [0.25, 0.75, 1.25])
    snr: Optional[List[float]] = None
    trials: Optional[int] = None
    master_seed: int = 0
    epsilon: float = 1.0 / 12.0
    k_max_fraction: float = 0.5
    out: str = "results"
    threads: int = 1
    # deblurring
    psf_sigma: float = 4.0
    kernel_size: int = 0
    n_stars: int = 40
    # computed tomography
    n_angles: int = 180
    dense_threshold: int = 32
    ct_data: str = "discrete"
    ellipses: List[List[float]] = field(default_factory=lambda: [list(e) for e in SHEPP_LOGAN_MODIFIED])
    # verification
    verify_m_max: int = 32
    canary_sigma_perturbation: float = 0.0

    def __post_init__(self):
        # experiment-specific defaults for fields left unset
        integral_like = self.experiment in ("integral", "verify")
        if self.snr is None:
            self.snr = list(INTEGRAL_SNRS if integral_like else IMAGING_SNRS)
        if self.trials is None:
            self.trials = 200 if integral_like else 1000
        if self.N is None:
            self.N = 32 if self.experiment == "ct" else 256

    @property
    def epsilon_fraction(self) -> Fraction:
        return Fraction(self.epsilon).limit_denominator(10**9)

    @property
    def effective_kernel_size(self) -> int:
        if self.kernel_size:
            return self.kernel_size
        return self.N if self.N % 2 == 1 else self.N - 1

    def validate(self) -> "ExperimentConfig":
        problems = []
        if self.experiment not in EXPERIMENTS:
            problems.append(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            problems.append("trials must be >= 1")
        if not self.snr or any(not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)) for v in self.snr):
            problems.append("snr values must be positive and finite")
        if self.m < 2:
            problems.append("m must be >= 2")
        if self.D < 1:
            problems.append("D must be >= 1")
        if not self.smoothness or any(not s > 0 for s in self.smoothness):
            problems.append("smoothness values must be positive")
        if not 0 < self.epsilon <= 1.0 / 12.0 + 1e-15:
            problems.append("epsilon must lie in (0, 1/12]")
        if not 0 < self.k_max_fraction <= 1:
            problems.append("k_max_fraction must lie in (0, 1]")
        if self.threads < 1:
            problems.append("threads must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            problems.append("master_seed must be an unsigned 64-bit integer")
        if not isinstance(self.N, int) or self.N < 1:
            problems.append("N must be >= 1")
        if self.psf_sigma <= 0:
            problems.append("psf_sigma must be positive")
        k = self.effective_kernel_size
        if k < 1 or k % 2 == 0:
            problems.append(f"kernel_size must be odd, got {k}")
        if self.n_stars < 1:
            problems.append("n_stars must be >= 1")
        if self.n_angles < 1:
            problems.append("n_angles must be >= 1")
        if self.experiment == "ct" and self.N > self.dense_threshold:
            problems.append(
                f"N={self.N} exceeds the dense SVD threshold {self.dense_threshold}; "
                "the CT singular system is computed densely, so use N <= 32 "
                "or raise dense_threshold knowingly"
            )
        if self.ct_data not in ("discrete", "analytic"):
            problems.append("ct_data must be 'discrete' or 'analytic'")
        if any(len(e) != 6 for e in self.ellipses):
            problems.append("each ellipse needs (intensity, a, b, x0, y0, angle)")
        if self.verify_m_max < 1:
            problems.append("verify_m_max must be >= 1")
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "ExperimentConfig":
        data = self.to_dict()
        data.update({k: v for k, v in changes.items() if v is not None})
        return ExperimentConfig(**data)


def default_config(experiment: str, **overrides) -> ExperimentConfig:
    cfg = ExperimentConfig(experiment=experiment, **{k: v for k, v in overrides.items() if v is not None})
    return cfg.validate()


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a JSON object of :class:`ExperimentConfig` fields, then apply ``overrides``."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        cfg = ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()
