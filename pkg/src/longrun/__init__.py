"""Exact longest-run test for heteroscedasticity in nonparametric regression."""

from .combinatorics import (
    CriticalValueRecord,
    RunLengthDistribution,
    count_constrained,
    critical_value,
    longest_run,
    null_distribution,
    p_value,
)
from .errors import EstimationError, PreconditionError, SampleTooSmallError, SimulationError
from .estimation import Dataset, MeanEstimatorSpec, ResidualSequence, fit_mean
from .lrt import TestReport, dichotomize, run_test
from .simulation import MonteCarloConfig, PowerEstimate, SimulationModel, estimate_power, generate, reproduce_table

__all__ = [
    "CriticalValueRecord",
    "Dataset",
    "EstimationError",
    "MeanEstimatorSpec",
    "MonteCarloConfig",
    "PowerEstimate",
    "PreconditionError",
    "ResidualSequence",
    "RunLengthDistribution",
    "SampleTooSmallError",
    "SimulationError",
    "SimulationModel",
    "TestReport",
    "count_constrained",
    "critical_value",
    "dichotomize",
    "estimate_power",
    "fit_mean",
    "generate",
    "longest_run",
    "null_distribution",
    "p_value",
    "reproduce_table",
    "run_test",
]
