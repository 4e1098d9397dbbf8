"""Experiment configuration, Monte Carlo runners, verification suites and the CLI."""

from .config import ConfigError, ExperimentConfig, default_config, load_config
from .experiments import (
    SummaryTable,
    TrialRecord,
    run_ct,
    run_deblur,
    run_experiment,
    run_integral,
    summarize,
    write_outputs,
)
from .verify import SuiteResult, run_suites
