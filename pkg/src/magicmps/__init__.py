"""MPS simulation of Haar-random brick-wall circuits with stabilizer Renyi
entropy estimation by perfect Pauli sampling."""

__version__ = "0.1.0"

from .exact import haar_m2
from .experiments import (
    AveragedPoint,
    DeviationPoint,
    ExperimentConfig,
    FitResult,
    compute_deviations,
    fit_beta_vs_n,
    fit_log_linear,
    run_experiment1,
    run_experiment2,
    saturation_time,
)
from .mps import EntropyProfile, MpsState, TruncationReport
from .random_circuits import BrickworkSchedule, SeedTree, brickwork, derive_stream, haar_unitary
from .sampling import (
    SampleRecord,
    SreEstimate,
    draw_samples,
    estimate_sre,
    exact_sre_small,
    pauli_expectation_mps,
    pauli_sample,
)

__all__ = [
    "__version__",
    "MpsState",
    "EntropyProfile",
    "TruncationReport",
    "BrickworkSchedule",
    "SeedTree",
    "brickwork",
    "derive_stream",
    "haar_unitary",
    "SampleRecord",
    "SreEstimate",
    "pauli_sample",
    "draw_samples",
    "estimate_sre",
    "exact_sre_small",
    "pauli_expectation_mps",
    "haar_m2",
    "ExperimentConfig",
    "AveragedPoint",
    "DeviationPoint",
    "FitResult",
    "run_experiment1",
    "run_experiment2",
    "compute_deviations",
    "fit_log_linear",
    "fit_beta_vs_n",
    "saturation_time",
]
