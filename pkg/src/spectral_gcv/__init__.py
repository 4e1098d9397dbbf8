"""Spectral cut-off regularisation with generalised cross-validation.

Submodules
----------
spectral
    Operator-agnostic GCV selection, oracle indices and error bounds.
green
    Closed-form semi-discrete singular system of the Green's-function kernel.
stochastics
    Seeded noise, SNR conversion, the concentration event, box statistics.
imaging
    Gaussian blur with cosine diagonalisation and a parallel-beam Radon operator.
harness
    Experiment runners, verification suites and the command line.
"""

from .spectral import (
    BoundIndexError,
    CutoffEstimate,
    GcvParams,
    ObservationCoefficients,
    OracleIndices,
    SingularSystem,
    cutoff_estimate,
    dense_svd,
    gcv_score,
    gcv_scores,
    l2_constant,
    optimal_index,
    oracle_indices,
    project_observations,
    select_gcv_index,
    strong_oracle,
    symmetric_eigendecomposition,
    theorem_l2_bound,
    weak_oracle,
)

__version__ = "0.1.0"
