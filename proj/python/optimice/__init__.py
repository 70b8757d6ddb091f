"""Batch Bayesian optimization with MICE, Morris screening and emulator sweeps."""

from ._optimice import (
    ConfigError,
    Emulator,
    EvaluationError,
    NumericalError,
    beta_schedule,
    branin,
    evaluation_count,
    lhd,
    optimize,
    prediction_count,
    rosenbrock,
    screen,
    sweep,
)

__all__ = [
    "ConfigError",
    "Emulator",
    "EvaluationError",
    "NumericalError",
    "beta_schedule",
    "branin",
    "evaluation_count",
    "lhd",
    "optimize",
    "prediction_count",
    "rosenbrock",
    "screen",
    "sweep",
]
