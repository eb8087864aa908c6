"""Parameter estimation for diffusions observed only above a threshold."""

from hde.asymptotics import SigmaMatrix, empirical_sigma, sigma_quadrature, standardize_errors
from hde.censor import (PartialObservations, ThresholdSpec, apply_threshold, effective_threshold,
                        usable_pairs)
from hde.contrast import g_contrast, l_contrast, limit_surfaces
from hde.estimate import EstimationResult, minimize_scalar, two_stage_estimate
from hde.harness import ExperimentConfig, run_experiment, run_replication
from hde.model import DiffusionModel, ParamPoint, ParamRectangle, builtin_model
from hde.simulate import SamplingScheme, Trajectory, euler_maruyama_path, scheme_from_rate

__version__ = "0.1.0"

__all__ = [
    "DiffusionModel", "ParamPoint", "ParamRectangle", "builtin_model",
    "SamplingScheme", "Trajectory", "euler_maruyama_path", "scheme_from_rate",
    "ThresholdSpec", "PartialObservations", "effective_threshold", "apply_threshold",
    "usable_pairs", "g_contrast", "l_contrast", "limit_surfaces",
    "minimize_scalar", "two_stage_estimate", "EstimationResult",
    "SigmaMatrix", "sigma_quadrature", "empirical_sigma", "standardize_errors",
    "ExperimentConfig", "run_experiment", "run_replication",
]
