"""Experiment driver: configuration, sweeps, stability checks and the CLI."""

from .config import (ExperimentConfig, IndexFunctionSpec, IndexSpec, NoisePlan, OutputSpec, ProblemSpec,
                     RuleSpec, SolverSpec, TruthSpec, load_config)
from .experiments import (CSV_HEADER, RateReport, RateRow, build_context, run_lepskij_experiment,
                          run_rate_experiment, run_stochastic_experiment)
from .stability import check_interpolation_Y, verify_autoconvolution_stability, verify_exponential_stability

__all__ = [
    "CSV_HEADER",
    "ExperimentConfig",
    "IndexFunctionSpec",
    "IndexSpec",
    "NoisePlan",
    "OutputSpec",
    "ProblemSpec",
    "RuleSpec",
    "SolverSpec",
    "TruthSpec",
    "RateReport",
    "RateRow",
    "build_context",
    "load_config",
    "run_lepskij_experiment",
    "run_rate_experiment",
    "run_stochastic_experiment",
    "check_interpolation_Y",
    "verify_autoconvolution_stability",
    "verify_exponential_stability",
]
