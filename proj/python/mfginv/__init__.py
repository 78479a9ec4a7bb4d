"""Forward and inverse solvers for one-dimensional periodic mean-field games."""

import json as _json

from ._core import (
    ConfigError,
    Error,
    Problem,
    eci_update,
    from_hopf_cole,
    generate_measurement,
    invert,
    measurement_term,
    run_config,
    solve_forward,
    to_hopf_cole,
)


def problem(config):
    """Build a Problem from a config mapping using the command-line schema."""
    return Problem.from_json(_json.dumps(config))


__all__ = [
    "ConfigError",
    "Error",
    "Problem",
    "eci_update",
    "from_hopf_cole",
    "generate_measurement",
    "invert",
    "measurement_term",
    "problem",
    "run_config",
    "solve_forward",
    "to_hopf_cole",
]
