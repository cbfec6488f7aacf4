"""Spatial covariance estimation from analog-beamformed power measurements.

A receiver that can only probe the channel through one beamforming vector
at a time sees a sequence of scalar powers. This package fits the full
receive-side spatial covariance to such probes by penalized maximum
likelihood (exact, over the PSD cone) or by a faster approximation over
nonnegative probe-dyad coefficients, and benchmarks both against a pick-
the-strongest-probe baseline via Monte Carlo beamforming-loss sweeps.
"""

from .channel import (ArrayGeometry, MultiClusterScene, PathCluster, SceneSamplerConfig,
                      SinglePathScene, array_response, load_scene, sample_scene, save_scene,
                      scene_covariance)
from .estimators import ApproxMLCovariance, ExactMLCovariance, MaxPowerBeam
from .exact import neg_log_likelihood, objective, objective_gradient, solve_exact_ml
from .glm import (GlmProblem, coupling_matrix, glm_gradient, glm_objective, reconstruct_q,
                  solve_approx_ml)
from .harness import (ExperimentPlan, SweepRow, TrialReport, aggregate_reports,
                      beamforming_loss, max_power_beam, read_sweep_csv, run_sweep, run_trial,
                      write_sweep_csv)
from .linalg import (EigenDecomposition, NumericError, check_hermitian, hermitian_eig,
                     hermitize, max_eigenvector, psd_project)
from .measurement import (MeasurementSet, check_measurement_data, expected_power,
                          load_measurements, sample_directions, sample_powers,
                          save_measurements)
from .solver import SolveConfig, SolveTrace

__version__ = "0.1.0"

__all__ = [
    "ApproxMLCovariance",
    "ArrayGeometry",
    "EigenDecomposition",
    "ExactMLCovariance",
    "ExperimentPlan",
    "GlmProblem",
    "MaxPowerBeam",
    "MeasurementSet",
    "MultiClusterScene",
    "NumericError",
    "PathCluster",
    "SceneSamplerConfig",
    "SinglePathScene",
    "SolveConfig",
    "SolveTrace",
    "SweepRow",
    "TrialReport",
    "aggregate_reports",
    "array_response",
    "beamforming_loss",
    "check_hermitian",
    "check_measurement_data",
    "coupling_matrix",
    "expected_power",
    "glm_gradient",
    "glm_objective",
    "hermitian_eig",
    "hermitize",
    "load_measurements",
    "load_scene",
    "max_eigenvector",
    "max_power_beam",
    "neg_log_likelihood",
    "objective",
    "objective_gradient",
    "psd_project",
    "read_sweep_csv",
    "reconstruct_q",
    "run_sweep",
    "run_trial",
    "sample_directions",
    "sample_powers",
    "sample_scene",
    "save_measurements",
    "save_scene",
    "scene_covariance",
    "solve_approx_ml",
    "solve_exact_ml",
    "write_sweep_csv",
]
