"""Projection-free solvers for fully composite stochastic optimization.

Thin wrapper around the C++ extension module.
"""

from ._compfw import (  # noqa: F401
    ConfigError,
    OracleError,
    ParseError,
    Problem,
    fit_rate,
    lmo_l1_ball,
    lmo_nuclear_ball,
    load_libsvm,
    make_custom_quadratic,
    make_cvar_portfolio,
    make_matrix_completion,
    make_minimax_regression,
    run,
    run_acceptance,
    sample_noise_vector,
    solve_lp,
    vbe_constant,
)

__all__ = [
    "ConfigError",
    "OracleError",
    "ParseError",
    "Problem",
    "fit_rate",
    "lmo_l1_ball",
    "lmo_nuclear_ball",
    "load_libsvm",
    "make_custom_quadratic",
    "make_cvar_portfolio",
    "make_matrix_completion",
    "make_minimax_regression",
    "run",
    "run_acceptance",
    "sample_noise_vector",
    "solve_lp",
    "vbe_constant",
]
