"""Tests for the Nystrom assembly, Newton driver, and solve entry points."""

import math

import numpy as np
import pytest

from mhfie.problem import (
    KernelSpec,
    Nonlinearity,
    ProblemSpec,
    exact_smooth_integral,
    get_problem,
)
from mhfie.solver import (
    AssemblyError,
    NonConvergenceError,
    SolverConfig,
    assemble_nystrom,
    newton_driver,
    solve,
    solve_2d,
    solve_linear,
    solve_nonlinear,
    solve_smoothed,
    verify_residual,
)


def identity_like_nonlinearity() -> Nonlinearity:
    # same action as the identity but without the fast-path flag, so the
    # solver is forced through the Newton route
    return Nonlinearity(
        psi=lambda s, u: u,
        dpsi_du=lambda s, u: np.ones_like(np.asarray(u, dtype=float)),
    )


def test_config_validation():
    with pytest.raises(ValueError, match="n must"):
        SolverConfig(n=-1)
    with pytest.raises(ValueError, match="ni must"):
        SolverConfig(n=4, ni=-2)
    with pytest.raises(ValueError, match="alpha"):
        SolverConfig(n=4, alpha=0.0)
    with pytest.raises(ValueError, match="alpha2"):
        SolverConfig(n=4, alpha2=-1.0)
    with pytest.raises(ValueError, match="method"):
        SolverConfig(n=4, method="spline")
    with pytest.raises(ValueError, match="newton_tol"):
        SolverConfig(n=4, newton_tol=0.0)
    with pytest.raises(ValueError, match="newton_max_iter"):
        SolverConfig(n=4, newton_max_iter=0)
    with pytest.raises(ValueError, match="damping"):
        SolverConfig(n=4, damping="cubic")
    assert SolverConfig(n=4).ni_value == 5
    assert SolverConfig(n=4, ni=9).ni_value == 9


def test_config_dimension_limits():
    with pytest.raises(ValueError, match="exceeds"):
        SolverConfig(n=500).check_dimension(1)
    with pytest.raises(ValueError, match="exceeds"):
        SolverConfig(n=64).check_dimension(2)
    SolverConfig(n=64).check_dimension(1)


def test_row_sums_converge_to_smooth_integral():
    # with u = 1 the quadrature row sums approximate the exactly known
    # integral of the log kernel; the weak singularity makes this converge
    # slowly, which is precisely why forcing is synthesized through the
    # discrete operator for the convergence experiments
    prob = get_problem("ex1-log")
    errs = []
    for ni in (15, 63, 255):
        ny = assemble_nystrom(prob, SolverConfig(n=8, ni=ni, alpha=0.5))
        xs = ny.colloc_points[0]
        exact = np.array([exact_smooth_integral("log", x) for x in xs])
        errs.append(float(np.max(np.abs(ny.weights.sum(axis=1) - exact))))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.06
    assert errs[2] < 0.5 * errs[0]


def test_assembled_weights_identical_across_methods():
    prob = get_problem("ex1-alg")
    wa = assemble_nystrom(prob, SolverConfig(n=12, alpha=0.7)).weights
    wb = assemble_nystrom(
        prob, SolverConfig(n=12, alpha=0.7, method="smoothed")
    ).weights
    np.testing.assert_allclose(wa, wb, rtol=1e-12)


def test_assembly_rejects_coinciding_node_families():
    with pytest.raises(AssemblyError, match="interlace"):
        assemble_nystrom(get_problem("ex1-log"), SolverConfig(n=8, ni=8))


def test_assembly_rejects_nonfinite_kernel():
    bad = ProblemSpec(
        name="bad-kernel",
        dimension=1,
        lam=1.0,
        kernel=KernelSpec(
            kind="custom",
            fn=lambda s, x, comp: np.full(np.broadcast(s, x).shape, np.inf),
            dimension=1,
        ),
        nonlinearity=Nonlinearity.identity(1),
        forcing=lambda x: x,
    )
    with pytest.raises(AssemblyError, match="finite"):
        assemble_nystrom(bad, SolverConfig(n=4))


def test_newton_driver_scalar_quadratic():
    # u = 1 + 0.1 u^2 has the root 5 (1 - sqrt(0.6))
    x, iters, history = newton_driver(
        lambda u: u - 1.0 - 0.1 * u * u,
        lambda u: np.array([[1.0 - 0.2 * float(u[0])]]),
        0.0,
        tol=1e-12,
    )
    assert x[0] == pytest.approx(5.0 * (1.0 - math.sqrt(0.6)), rel=1e-12)
    assert iters <= 6
    assert history[-1] <= 1e-12
    assert all(a > b for a, b in zip(history, history[1:]))


def test_newton_driver_linear_residual_one_step():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((4, 4)) + 4.0 * np.eye(4)
    b = rng.standard_normal(4)
    x, iters, _ = newton_driver(lambda u: a @ u - b, lambda u: a, np.zeros(4))
    np.testing.assert_allclose(x, np.linalg.solve(a, b), rtol=1e-12)
    assert iters == 1


def test_newton_driver_reports_nonconvergence():
    # u^2 + 1 has no real root; the damped iteration must stall and hand
    # back its best iterate with a monotone residual history
    with pytest.raises(NonConvergenceError) as info:
        newton_driver(
            lambda u: u * u + 1.0,
            lambda u: np.array([[2.0 * float(u[0])]]),
            0.9,
            max_iter=25,
        )
    err = info.value
    assert err.best is not None and np.all(np.isfinite(err.best))
    assert len(err.history) >= 2
    assert all(a > b for a, b in zip(err.history, err.history[1:]))
    assert err.history[-1] >= 1.0


def test_newton_route_matches_direct_linear_solve():
    base = get_problem("ex1-log")
    twin = ProblemSpec(
        name="ex1-log-newton",
        dimension=1,
        lam=base.lam,
        kernel=base.kernel,
        nonlinearity=identity_like_nonlinearity(),
        exact_solution=base.exact_solution,
        exact_solution_c=base.exact_solution_c,
    )
    cfg = SolverConfig(n=12, alpha=0.5)
    direct = solve_linear(base, cfg)
    newton = solve_nonlinear(twin, cfg)
    np.testing.assert_allclose(
        newton.node_values, direct.node_values, atol=1e-12
    )
    assert newton.newton_iters == 1
    assert direct.newton_iters == 0


def test_solve_dispatch_and_method_agreement():
    prob = get_problem("ex1-alg")
    cfg = SolverConfig(n=12, alpha=0.7)
    a = solve(prob, cfg)
    b = solve_smoothed(prob, cfg)
    assert a.config.method == "mhf"
    assert b.config.method == "smoothed"
    np.testing.assert_allclose(a.node_values, b.node_values, atol=1e-11)


def test_two_dimensional_solution_factors():
    sol = solve(get_problem("ex3-alg"), SolverConfig(n=8, alpha=0.5))
    p = lambda x: np.sqrt(x * (1.0 - x))
    np.testing.assert_allclose(
        sol.node_values, np.outer(p(sol.nodes_x), p(sol.nodes_y)), atol=1e-10
    )
    assert sol.node_values.shape == (9, 9)
    assert sol.nodes_y is not None
    assert sol.newton_iters <= 12


def test_two_dimensional_weights_are_kronecker():
    w2 = assemble_nystrom(get_problem("ex3-alg"), SolverConfig(n=4, alpha=0.5)).weights
    axis = ProblemSpec(
        name="axis",
        dimension=1,
        lam=10.0,
        kernel=KernelSpec(kind="algebraic", mu=(0.5,), dimension=1),
        nonlinearity=Nonlinearity.identity(1),
        forcing=lambda x: np.ones_like(np.asarray(x, dtype=float)),
    )
    w1 = assemble_nystrom(axis, SolverConfig(n=4, alpha=0.5)).weights
    rng = np.random.default_rng(7)
    a = rng.standard_normal(6)
    b = rng.standard_normal(6)
    np.testing.assert_allclose(
        w2 @ np.kron(a, b), np.kron(w1 @ a, w1 @ b), rtol=1e-12
    )


def test_solution_metadata_and_interpolant():
    sol = solve(get_problem("ex2-sqrt"), SolverConfig(n=12, alpha=0.5))
    assert sol.problem_name == "ex2-sqrt"
    assert sol.nodes_y is None
    assert sol.final_residual <= sol.config.newton_tol
    assert isinstance(sol.residual_history, tuple)
    # barycentric evaluation reproduces node values exactly
    assert sol.interpolant.eval(sol.nodes_x[5]) == sol.node_values[5]


def test_interpolant_accurate_in_the_interior():
    sol = solve(get_problem("ex1-alg"), SolverConfig(n=32, alpha=0.5))
    got = sol.interpolant.eval(0.3)
    assert abs(got - math.sqrt(0.3 * 0.7)) < 1e-2


def test_zero_smooth_factor_reduces_to_scaled_forcing():
    prob = ProblemSpec(
        name="zeroed",
        dimension=1,
        lam=2.0,
        kernel=KernelSpec(
            kind="log",
            smooth_factor=lambda s, x: np.zeros(np.broadcast(s, x).shape),
            dimension=1,
        ),
        nonlinearity=Nonlinearity.identity(1),
        forcing=lambda x: 1.0 + x,
    )
    sol = solve(prob, SolverConfig(n=10, alpha=0.8))
    np.testing.assert_allclose(
        sol.node_values, (1.0 + sol.nodes_x) / 2.0, rtol=1e-14
    )


def test_zero_forcing_gives_zero_solution():
    prob = ProblemSpec(
        name="zero-forcing",
        dimension=1,
        lam=3.0,
        kernel=KernelSpec(kind="log", dimension=1),
        nonlinearity=Nonlinearity.square(1),
        forcing=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    )
    sol = solve(prob, SolverConfig(n=10, alpha=0.8))
    assert np.max(np.abs(sol.node_values)) == 0.0
    assert sol.newton_iters == 0


def test_verify_residual_is_independent_and_sharp():
    prob = get_problem("ex1-log")
    cfg = SolverConfig(n=16, alpha=0.5)
    sol = solve(prob, cfg)
    r_sol = verify_residual(prob, cfg, sol)
    r_arr = verify_residual(prob, cfg, sol.node_values)
    assert r_sol == r_arr
    assert r_sol <= cfg.newton_tol
    assert verify_residual(prob, cfg, sol.node_values + 1e-3) > 1e-4


def test_entry_point_type_checks():
    with pytest.raises(ValueError, match="identity"):
        solve_linear(get_problem("ex3-log"), SolverConfig(n=4))
    with pytest.raises(ValueError, match="two-dimensional"):
        solve_2d(get_problem("ex1-log"), SolverConfig(n=4))
