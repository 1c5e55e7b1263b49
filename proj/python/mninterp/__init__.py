"""Minimum-norm interpolation solvers and Monte Carlo experiments."""

import json as _json

from ._core import (
    ConfigError,
    DimensionError,
    Error,
    EstimatorError,
    IllPosedError,
    IoError,
    UnsupportedError,
    anderson_gap,
    dual_norm,
    estimate_decomposition,
    estimate_M,
    estimate_M_star,
    fit_loglog_slope,
    lambda_k,
    norm,
    philox4x32,
    predicted_delta_bound,
    report,
    sample_design,
    solve,
    solve_min_l2_in_ball,
)
from ._core import run_experiment as _run_experiment


def run_experiment(config):
    """Run a scenario from a config dict (or JSON text) and return its summary."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _run_experiment(text)


__all__ = [
    "ConfigError",
    "DimensionError",
    "Error",
    "EstimatorError",
    "IllPosedError",
    "IoError",
    "UnsupportedError",
    "anderson_gap",
    "dual_norm",
    "estimate_decomposition",
    "estimate_M",
    "estimate_M_star",
    "fit_loglog_slope",
    "lambda_k",
    "norm",
    "philox4x32",
    "predicted_delta_bound",
    "report",
    "run_experiment",
    "sample_design",
    "solve",
    "solve_min_l2_in_ball",
]
