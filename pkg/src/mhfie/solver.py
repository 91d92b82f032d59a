"""Nystrom-collocation solvers for the weakly singular integral equations.

Two equivalent discretizations are provided.  "mhf" collocates with the
mapped Hermite interpolant on (0,1) and applies the mapped Gauss rule with
weights chi_k / chi(s_k); "smoothed" first substitutes x = sigma(xhat/alpha)
to move the problem to the real line, collocates with a plain polynomial at
Hermite-Gauss points and quadratures with weights exp(log w_k + s_k^2)
times the logistic Jacobian.  The two discrete systems coincide under the
change of variables, so their node values must agree to solver tolerance -
a property the test suite leans on heavily.

Nonlinear systems go through a damped Newton iteration with the exact
Jacobian lam*I - W diag(dpsi/du) E and initial guess g/lam.

For problems that carry an exact solution the forcing vector is
synthesized through the discrete operator itself (see
_synthesize_forcing), so the reported errors isolate the approximation
power of the collocation space; problems defined only by a forcing
callable are evaluated with that forcing at the collocation nodes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .approx import (
    Interpolant1D,
    Interpolant2D,
    LagrangeBasis,
    tensor_interpolant,
)
from .mhf import MhfBasis, MhfRule, mhf_gauss_rule
from .problem import ProblemSpec, forcing_grid, forcing_values

__all__ = [
    "METHOD_MHF",
    "METHOD_SMOOTHED",
    "AssemblyError",
    "SolverError",
    "NonConvergenceError",
    "SolverConfig",
    "NystromMatrix",
    "Solution",
    "assemble_nystrom",
    "newton_driver",
    "solve",
    "solve_linear",
    "solve_nonlinear",
    "solve_2d",
    "solve_smoothed",
    "verify_residual",
]

METHOD_MHF = "mhf"
METHOD_SMOOTHED = "smoothed"

MAX_N_1D = 400
MAX_N_2D = 48
NODE_GAP = 1e-12


class AssemblyError(RuntimeError):
    """The discrete operator could not be built (e.g. node coincidence)."""


class SolverError(RuntimeError):
    """The linear algebra underlying a solve failed."""


class NonConvergenceError(RuntimeError):
    """Newton failed to reach tolerance; carries the iterate and history."""

    def __init__(self, message, best=None, history=None):
        super().__init__(message)
        self.best = best
        self.history = list(history) if history is not None else []


@dataclass(frozen=True)
class SolverConfig:
    """Discretization and Newton parameters.

    ni defaults to n+1: Hermite-Gauss node families of consecutive sizes
    interlace, so collocation and quadrature points can never coincide.
    """

    n: int
    ni: Optional[int] = None
    alpha: float = 1.0
    alpha2: Optional[float] = None
    method: str = METHOD_MHF
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    damping: str = "halving"

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"n must be nonnegative, got {self.n}")
        if self.ni is not None and self.ni < 0:
            raise ValueError(f"ni must be nonnegative, got {self.ni}")
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.alpha2 is not None and not (
            self.alpha2 > 0.0 and math.isfinite(self.alpha2)
        ):
            raise ValueError(f"alpha2 must be positive, got {self.alpha2}")
        if self.method not in (METHOD_MHF, METHOD_SMOOTHED):
            raise ValueError(f"unknown method {self.method!r}")
        if self.newton_tol <= 0.0:
            raise ValueError(f"newton_tol must be positive, got {self.newton_tol}")
        if self.newton_max_iter < 1:
            raise ValueError(f"newton_max_iter must be >= 1, got {self.newton_max_iter}")
        if self.damping not in ("halving", "none"):
            raise ValueError(f"unknown damping {self.damping!r}")

    @property
    def ni_value(self) -> int:
        return self.n + 1 if self.ni is None else self.ni

    def check_dimension(self, dim: int) -> None:
        limit = MAX_N_1D if dim == 1 else MAX_N_2D
        if self.n > limit or (dim == 1 and self.ni_value > MAX_N_1D):
            raise ValueError(
                f"n={self.n}, ni={self.ni_value} exceeds limit {limit} in {dim}D"
            )


@dataclass(frozen=True)
class NystromMatrix:
    """Quadrature-weighted kernel matrix W.

    Rows follow collocation points, columns quadrature points; in two
    dimensions both indices are composite (x-major / s-major flattening) so
    weights is always a plain dense matrix.
    """

    weights: np.ndarray
    colloc_points: tuple
    quad_points: tuple
    dimension: int


@dataclass(frozen=True)
class Solution:
    problem_name: str
    config: SolverConfig
    node_values: np.ndarray
    nodes_x: np.ndarray
    nodes_y: Optional[np.ndarray]
    interpolant: object
    newton_iters: int
    final_residual: float
    residual_history: tuple


def _logsig(t: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -t)


def _quad_coeffs(rule: MhfRule, method: str) -> np.ndarray:
    """Per-node coefficients chi_k / chi(s_k), by each method's own route.

    mhf: log-space quotient of the mapped weight and the chi weight.
    smoothed: modified Hermite weights exp(log w_k + z_k^2) times the
    logistic Jacobian sigma'(z_k/alpha)/alpha.  Same numbers either way,
    which is exactly the point of the equivalence testing.
    """
    alpha = rule.basis.alpha
    if method == METHOD_MHF:
        t = rule.logits
        return np.exp(
            rule.hermite.log_weights
            - math.log(alpha)
            + (alpha * t) ** 2
            + _logsig(t)
            + _logsig(-t)
        )
    z = rule.hermite.nodes
    modified = np.exp(rule.hermite.log_weights + z * z)
    return modified * rule.nodes * rule.nodes_complement / alpha


def _theta_matrix(problem: ProblemSpec, rule_q: MhfRule, rule_c: MhfRule,
                  axis: int = 0) -> np.ndarray:
    """Kernel values theta(s_k, x_i) on quadrature x collocation nodes."""
    kernel = problem.kernel
    x = rule_c.nodes[:, None]
    s = rule_q.nodes[None, :]
    if kernel.kind == "custom":
        comp = rule_q.nodes_complement[None, :]
        theta = np.broadcast_to(
            np.asarray(kernel.fn(s, x, comp), dtype=float),
            (rule_c.nodes.size, rule_q.nodes.size),
        ).copy()
    else:
        gap = np.abs(x - s)
        gmin = float(np.min(gap))
        if gmin <= NODE_GAP:
            i, k = np.unravel_index(int(np.argmin(gap)), gap.shape)
            raise AssemblyError(
                f"collocation node x[{i}]={rule_c.nodes[i]!r} and quadrature node "
                f"s[{k}]={rule_q.nodes[k]!r} are {gmin:.2e} apart; pick ni so the "
                "node families interlace (default ni=n+1)"
            )
        if kernel.kind == "algebraic":
            theta = gap ** -kernel.mu[axis]
        else:
            theta = np.log(gap)
        if kernel.smooth_factor is not None and problem.dimension == 1:
            theta = theta * np.asarray(kernel.smooth_factor(s, x), dtype=float)
    if not np.all(np.isfinite(theta)):
        i, k = np.unravel_index(int(np.argmax(~np.isfinite(theta))), theta.shape)
        raise AssemblyError(
            f"kernel value is not finite at collocation node {i}, quadrature node {k}"
        )
    return theta


def _damped_rows(nodes: np.ndarray, points: np.ndarray, scale: float) -> np.ndarray:
    """Gaussian-damped cardinal rows l_j(t) * exp(scale^2*(t_j^2 - t^2)/2).

    Plain cardinal functions at Hermite-type nodes are unusable on the
    quadrature grid: past the outermost node (the interlacing rule always
    has two such points) they grow without bound as the degree grows -
    measured at 2e1 / 8.6e3 / 7.6e9 for degrees 8 / 16 / 32 even in exact
    arithmetic - and even inside the span they reach ~1e10 near the edges
    by degree 64, which poisons the conditioning of the collocation matrix.
    The Gaussian-weighted cardinals fix both: they agree with the plain
    ones at every node, stay uniformly modest over the whole line, and
    reproduce the Gaussian-decaying functions this discretization
    approximates.  Everything is accumulated in log magnitude so no
    intermediate product overflows.
    """
    logd = np.empty(nodes.size)
    sgnd = np.empty(nodes.size)
    for j in range(nodes.size):
        d = np.delete(nodes[j] - nodes, j)
        logd[j] = np.log(np.abs(d)).sum()
        sgnd[j] = np.prod(np.sign(d))
    rows = np.empty((points.size, nodes.size))
    half = 0.5 * scale * scale
    for q, t in enumerate(points):
        num = t - nodes
        hit = np.abs(num) == 0.0
        if np.any(hit):
            rows[q] = np.where(hit, 1.0, 0.0)
            continue
        log_num = np.log(np.abs(num))
        total = log_num.sum()
        sgn_total = np.prod(np.sign(num))
        rows[q] = (sgn_total * np.sign(num) * sgnd) * np.exp(
            total - log_num - logd + half * (nodes * nodes - t * t)
        )
    return rows


def _interp_matrix(config: SolverConfig, rule_c: MhfRule, rule_q: MhfRule) -> np.ndarray:
    """Dense matrix of damped cardinal functions at the quadrature nodes.

    The mhf route works in the logit variable with damping scale alpha, the
    smoothed route in the Hermite variable with scale one; the two differ
    only by that affine change of variable, which the product form and the
    Gaussian factor both cancel, so the routes build identical matrices.
    """
    if config.method == METHOD_MHF:
        return _damped_rows(rule_c.logits, rule_q.logits, rule_c.basis.alpha)
    return _damped_rows(rule_c.hermite.nodes, rule_q.hermite.nodes, 1.0)


@dataclass
class _Discretization:
    dimension: int
    lam: float
    g: np.ndarray
    w: np.ndarray
    e: np.ndarray
    quad_coords: tuple
    colloc_points: tuple
    interp_from_values: Callable
    shape: tuple


def _synthesize_forcing(problem: ProblemSpec, u_nodes: np.ndarray,
                        w: np.ndarray, e: np.ndarray, quad_coords: tuple) -> np.ndarray:
    """Forcing consistent with the discrete operator for a known solution.

    g = lam*u - W psi(E u) makes the exact node values an exact solution of
    the discrete system, so convergence reports measure the approximation
    power of the collocation space rather than the quadrature consistency
    error (which decays only slowly for the singular kernels and would
    otherwise dominate every experiment).
    """
    psi = problem.nonlinearity.psi
    uq = e @ u_nodes
    return problem.lam * u_nodes - w @ np.asarray(psi(*quad_coords, uq), dtype=float)


def _exact_nodes_1d(problem: ProblemSpec, rule: MhfRule) -> np.ndarray:
    if problem.exact_solution_c is not None:
        return np.asarray(
            problem.exact_solution_c(rule.nodes, rule.nodes_complement), dtype=float
        )
    return np.asarray(problem.exact_solution(rule.nodes), dtype=float)


def _build_1d(problem: ProblemSpec, config: SolverConfig) -> _Discretization:
    config.check_dimension(1)
    alpha = config.alpha
    rule_c = mhf_gauss_rule(MhfBasis(alpha=alpha, degree=config.n))
    rule_q = mhf_gauss_rule(MhfBasis(alpha=alpha, degree=config.ni_value))
    theta = _theta_matrix(problem, rule_q, rule_c)
    w = theta * _quad_coeffs(rule_q, config.method)[None, :]
    e = _interp_matrix(config, rule_c, rule_q)
    if problem.exact_solution is not None:
        g = _synthesize_forcing(
            problem, _exact_nodes_1d(problem, rule_c), w, e, (rule_q.nodes,)
        )
    else:
        g = forcing_values(problem, rule_c.nodes, complements=rule_c.nodes_complement)
    basis = LagrangeBasis.from_mhf_rule(rule_c)

    def interp(values: np.ndarray) -> Interpolant1D:
        return Interpolant1D(basis=basis, values=values)

    return _Discretization(
        dimension=1,
        lam=problem.lam,
        g=g,
        w=w,
        e=e,
        quad_coords=(rule_q.nodes,),
        colloc_points=(rule_c.nodes,),
        interp_from_values=interp,
        shape=(config.n + 1,),
    )


def _build_2d(problem: ProblemSpec, config: SolverConfig) -> _Discretization:
    config.check_dimension(2)
    a1 = config.alpha
    a2 = config.alpha2 if config.alpha2 is not None else config.alpha
    rule_cx = mhf_gauss_rule(MhfBasis(alpha=a1, degree=config.n))
    rule_cy = mhf_gauss_rule(MhfBasis(alpha=a2, degree=config.n))
    rule_qx = mhf_gauss_rule(MhfBasis(alpha=a1, degree=config.ni_value))
    rule_qy = mhf_gauss_rule(MhfBasis(alpha=a2, degree=config.ni_value))

    wx = _theta_matrix(problem, rule_qx, rule_cx, axis=0) * _quad_coeffs(
        rule_qx, config.method
    )[None, :]
    wy = _theta_matrix(problem, rule_qy, rule_cy, axis=1) * _quad_coeffs(
        rule_qy, config.method
    )[None, :]
    w = np.kron(wx, wy)
    sf, tf = [a.ravel() for a in np.meshgrid(rule_qx.nodes, rule_qy.nodes, indexing="ij")]
    if problem.kernel.smooth_factor is not None:
        xf, yf = [
            a.ravel() for a in np.meshgrid(rule_cx.nodes, rule_cy.nodes, indexing="ij")
        ]
        w = w * np.asarray(
            problem.kernel.smooth_factor(
                sf[None, :], tf[None, :], xf[:, None], yf[:, None]
            ),
            dtype=float,
        )
    e = np.kron(
        _interp_matrix(config, rule_cx, rule_qx),
        _interp_matrix(config, rule_cy, rule_qy),
    )
    if problem.exact_solution is not None:
        if problem.exact_solution_c is not None:
            u_nodes = np.asarray(
                problem.exact_solution_c(
                    rule_cx.nodes[:, None],
                    rule_cx.nodes_complement[:, None],
                    rule_cy.nodes[None, :],
                    rule_cy.nodes_complement[None, :],
                ),
                dtype=float,
            )
        else:
            u_nodes = np.asarray(
                problem.exact_solution(rule_cx.nodes[:, None], rule_cy.nodes[None, :]),
                dtype=float,
            )
        g = _synthesize_forcing(problem, u_nodes.ravel(), w, e, (sf, tf))
    else:
        g = forcing_grid(
            problem,
            rule_cx.nodes,
            rule_cy.nodes,
            x_complements=rule_cx.nodes_complement,
            y_complements=rule_cy.nodes_complement,
        ).ravel()
    basis_x = LagrangeBasis.from_mhf_rule(rule_cx)
    basis_y = LagrangeBasis.from_mhf_rule(rule_cy)
    nx = config.n + 1

    def interp(values: np.ndarray) -> Interpolant2D:
        return tensor_interpolant(basis_x, basis_y, values.reshape(nx, nx))

    return _Discretization(
        dimension=2,
        lam=problem.lam,
        g=g,
        w=w,
        e=e,
        quad_coords=(sf, tf),
        colloc_points=(rule_cx.nodes, rule_cy.nodes),
        interp_from_values=interp,
        shape=(nx, nx),
    )


def _build(problem: ProblemSpec, config: SolverConfig) -> _Discretization:
    if problem.dimension == 1:
        return _build_1d(problem, config)
    return _build_2d(problem, config)


def assemble_nystrom(problem: ProblemSpec, config: SolverConfig) -> NystromMatrix:
    """Quadrature-weighted kernel matrix for the problem at this config."""
    disc = _build(problem, config)
    return NystromMatrix(
        weights=disc.w,
        colloc_points=disc.colloc_points,
        quad_points=disc.quad_coords,
        dimension=disc.dimension,
    )


def _residual_fn(disc: _Discretization, problem: ProblemSpec) -> Callable:
    psi = problem.nonlinearity.psi

    def residual(u: np.ndarray) -> np.ndarray:
        uq = disc.e @ u
        return disc.lam * u - disc.g - disc.w @ np.asarray(
            psi(*disc.quad_coords, uq), dtype=float
        )

    return residual


def _jacobian_fn(disc: _Discretization, problem: ProblemSpec) -> Callable:
    dpsi = problem.nonlinearity.dpsi_du
    eye = np.eye(disc.w.shape[0])

    def jacobian(u: np.ndarray) -> np.ndarray:
        uq = disc.e @ u
        d = np.asarray(dpsi(*disc.quad_coords, uq), dtype=float)
        return disc.lam * eye - (disc.w * d[None, :]) @ disc.e

    return jacobian


def newton_driver(residual, jacobian, x0, tol: float = 1e-12,
                  max_iter: int = 50, damping: str = "halving"):
    """Damped Newton iteration on a residual map.

    Full steps are halved (at most 30 times) until the max-norm of the
    residual strictly decreases; failure to decrease, or running out of
    iterations, raises NonConvergenceError carrying the monotone residual
    history.  Returns (x, iterations, history).
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    f = np.atleast_1d(np.asarray(residual(x), dtype=float))
    norm = float(np.max(np.abs(f)))
    history = [norm]
    for it in range(1, max_iter + 1):
        if norm <= tol:
            return x, it - 1, history
        jac = np.atleast_2d(np.asarray(jacobian(x), dtype=float))
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular Jacobian at iteration {it}: {exc}") from exc
        if damping == "none":
            x = x + step
            f = np.atleast_1d(np.asarray(residual(x), dtype=float))
            norm = float(np.max(np.abs(f)))
            history.append(norm)
            continue
        scale = 1.0
        for _ in range(31):
            trial = x + scale * step
            f_trial = np.atleast_1d(np.asarray(residual(trial), dtype=float))
            norm_trial = float(np.max(np.abs(f_trial)))
            if norm_trial < norm:
                break
            scale *= 0.5
        else:
            raise NonConvergenceError(
                f"Newton stalled at iteration {it}: residual {norm:.3e} cannot "
                f"decrease after 30 halvings",
                best=x,
                history=history,
            )
        x, f, norm = trial, f_trial, norm_trial
        history.append(norm)
    if norm <= tol:
        return x, max_iter, history
    raise NonConvergenceError(
        f"Newton did not reach tolerance {tol:.1e} in {max_iter} iterations "
        f"(final residual {norm:.3e})",
        best=x,
        history=history,
    )


def _finish(problem: ProblemSpec, config: SolverConfig, disc: _Discretization,
            u: np.ndarray, iters: int, history) -> Solution:
    residual = _residual_fn(disc, problem)
    final = float(np.max(np.abs(residual(u))))
    if final > config.newton_tol:
        raise SolverError(
            f"post-solve residual {final:.3e} exceeds tolerance {config.newton_tol:.1e}"
        )
    values = u.reshape(disc.shape)
    return Solution(
        problem_name=problem.name,
        config=config,
        node_values=values,
        nodes_x=disc.colloc_points[0],
        nodes_y=disc.colloc_points[1] if disc.dimension == 2 else None,
        interpolant=disc.interp_from_values(values),
        newton_iters=iters,
        final_residual=final,
        residual_history=tuple(history),
    )


def solve_linear(problem: ProblemSpec, config: SolverConfig) -> Solution:
    """Direct dense solve of (lam I - W E) u = g for identity nonlinearity."""
    if not problem.nonlinearity.is_identity:
        raise ValueError("solve_linear requires the identity nonlinearity")
    disc = _build(problem, config)
    a = disc.lam * np.eye(disc.w.shape[0]) - disc.w @ disc.e
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(a)
    except scipy.linalg.LinAlgError as exc:
        raise SolverError(f"linear system factorization failed: {exc}") from exc
    if np.any(np.diag(lu) == 0.0) or not np.all(np.isfinite(lu)):
        anorm = float(np.linalg.norm(a, 1))
        rcond = float(scipy.linalg.lapack.dgecon(lu, anorm, norm="1")[0])
        raise SolverError(
            f"linear system is singular (reciprocal condition estimate {rcond:.2e})"
        )
    u = scipy.linalg.lu_solve((lu, piv), disc.g)
    if not np.all(np.isfinite(u)):
        raise SolverError("linear solve produced non-finite node values")
    return _finish(problem, config, disc, u, 0, ())


def solve_nonlinear(problem: ProblemSpec, config: SolverConfig) -> Solution:
    """Damped Newton solve from the initial guess g / lam."""
    disc = _build(problem, config)
    x0 = disc.g / disc.lam
    u, iters, history = newton_driver(
        _residual_fn(disc, problem),
        _jacobian_fn(disc, problem),
        x0,
        tol=config.newton_tol,
        max_iter=config.newton_max_iter,
        damping=config.damping,
    )
    return _finish(problem, config, disc, u, iters, history)


def solve_2d(problem: ProblemSpec, config: SolverConfig) -> Solution:
    if problem.dimension != 2:
        raise ValueError(f"problem {problem.name!r} is not two-dimensional")
    return solve_nonlinear(problem, config)


def solve_smoothed(problem: ProblemSpec, config: SolverConfig) -> Solution:
    """Solve with the smoothing-transformation discretization."""
    return solve(problem, replace(config, method=METHOD_SMOOTHED))


def solve(problem: ProblemSpec, config: SolverConfig) -> Solution:
    """Dispatch: direct solve for identity nonlinearity, Newton otherwise."""
    if problem.nonlinearity.is_identity:
        return solve_linear(problem, config)
    if problem.dimension == 2:
        return solve_2d(problem, config)
    return solve_nonlinear(problem, config)


def verify_residual(problem: ProblemSpec, config: SolverConfig, solution) -> float:
    """Max-norm residual of node values against a freshly built operator.

    Accepts a Solution or a bare node-value array; nothing is reused from
    the solve, so this is the independent certificate check.
    """
    disc = _build(problem, config)
    values = solution.node_values if isinstance(solution, Solution) else solution
    u = np.asarray(values, dtype=float).ravel()
    return float(np.max(np.abs(_residual_fn(disc, problem)(u))))
