"""Smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import compfw


def test_quadratic_run_is_deterministic():
    prob = compfw.make_custom_quadratic(d=4, components=2, noise_family="gaussian",
                                        noise_scale=0.3, seed=7)
    a = compfw.run(prob, variant="variant2", iterations=64, seed=1)
    b = compfw.run(prob, variant="variant2", iterations=64, seed=1)
    assert np.array_equal(a["gap"], b["gap"])
    assert np.array_equal(a["final_y"], b["final_y"])
    assert a["min_gap"] >= -1e-8
    assert np.all(a["gap"] >= -1e-8)


def test_gap_decreases_on_a_deterministic_convex_problem():
    prob = compfw.make_custom_quadratic(d=3, components=2, convex=True, seed=3)
    short = compfw.run(prob, variant="deterministic", schedule="deterministic_convex",
                       iterations=10)
    long = compfw.run(prob, variant="deterministic", schedule="deterministic_convex",
                      iterations=1000)
    assert long["min_gap"] <= short["min_gap"] + 1e-12


def test_minimax_and_cvar_tasks_run():
    mm = compfw.make_minimax_regression(m=3, d=8, tau=1.0, samples_per_group=10, seed=1)
    rec = compfw.run(mm, variant="variant1", iterations=32, seed=2)
    assert rec["min_gap"] >= -1e-8
    assert len(rec["k"]) == 33  # record_every defaults to 1 at this horizon

    cv = compfw.make_cvar_portfolio(d=4, scenarios=12, seed=1)
    rec = compfw.run(cv, variant="variant2", iterations=32, seed=2)
    y = rec["final_y"]
    assert math.isclose(sum(y[:-1]), 1.0, abs_tol=1e-8)
    assert -1.0 - 1e-9 <= y[-1] <= 1.0 + 1e-9


def test_lmo_and_lp():
    assert compfw.lmo_l1_ball([3.0, -5.0, 1.0], 2.0) == [0.0, 2.0, 0.0]
    g = np.diag([3.0, 1.0])
    out = compfw.lmo_nuclear_ball(g, 1.0)
    assert out.shape == (2, 2)
    assert abs(out[0, 0] + 1.0) < 1e-8

    sol = compfw.solve_lp(
        c=[-1.0, -1.0],
        A=np.array([[1.0, 1.0]]),
        b=[1.0],
        sense=["<="],
        lower=[0.0, 0.0],
        upper=[10.0, 10.0],
    )
    assert sol["status"] == "optimal"
    assert abs(sol["objective"] + 1.0) < 1e-9


def test_fit_rate_and_noise():
    pts = [(k, k ** -0.25) for k in (64, 128, 256, 512)]
    fit = compfw.fit_rate(pts)
    assert abs(fit["slope"] + 0.25) < 1e-9
    assert fit["r_squared"] > 0.999

    assert compfw.vbe_constant(2.0) == 1.0
    assert compfw.vbe_constant(1.5) == 2.0

    noise = compfw.sample_noise_vector("gaussian", 1.0, 2.0, 1000, seed=4)
    assert abs(float(np.mean(noise))) < 0.15


def test_errors_surface_as_python_exceptions():
    with pytest.raises(compfw.ConfigError):
        compfw.vbe_constant(3.0)
    with pytest.raises(compfw.ConfigError):
        compfw.make_matrix_completion(rows=10, cols=10, rank=1, density=0.001)
