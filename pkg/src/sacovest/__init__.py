"""Nonsmooth stochastic approximation with online batch-means covariance estimation."""

from . import errors
from .covest import BatchMeansState, MeanState, bm_direct, bm_finalize, bm_update, update_mean
from .inference import (
    ConfidenceInterval,
    RateFit,
    confidence_interval,
    coverage_study,
    limiting_sigma,
    normal_cdf,
    normal_quantile,
    rate_fit,
    wald_test,
)
from .numerics import RngStream, gaussian_vector, operator_norm, solve_linear, spd_factor
from .problems import (
    PROBLEM_IDS,
    BoxQP,
    EntropyGame,
    GroundTruth,
    L1Quad,
    NoiseModel,
    NonconvexParabola,
    make_problem,
    mc_sigma,
    project_box,
    project_simplex,
    qre_oracle,
    soft_threshold,
)
from .sa_engine import RunConfig, RunResult, replicate, run, stopping_time
from .schedules import BatchSchedule, StepSchedule, validate_pair

__version__ = "0.1.0"

__all__ = [
    "BatchMeansState", "BatchSchedule", "BoxQP", "ConfidenceInterval", "EntropyGame",
    "GroundTruth", "L1Quad", "MeanState", "NoiseModel", "NonconvexParabola",
    "PROBLEM_IDS", "RateFit", "RngStream", "RunConfig", "RunResult", "StepSchedule",
    "bm_direct", "bm_finalize", "bm_update", "confidence_interval", "coverage_study",
    "errors", "gaussian_vector", "limiting_sigma", "make_problem", "mc_sigma",
    "normal_cdf", "normal_quantile", "operator_norm", "project_box", "project_simplex",
    "qre_oracle", "rate_fit", "replicate", "run", "soft_threshold", "solve_linear",
    "spd_factor", "stopping_time", "update_mean", "validate_pair", "wald_test",
]
