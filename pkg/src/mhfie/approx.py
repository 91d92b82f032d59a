"""Interpolation and projection in the mapped Hermite setting.

Interpolation at mapped nodes is ordinary barycentric Lagrange
interpolation in the transformed variable t = log(x/(1-x)) (or in z
itself for rules living on the real line).  That one observation carries
the whole module: the "generalized Lagrange functions" on (0,1) are plain
Lagrange polynomials in t, so the usual barycentric machinery applies
unchanged and interpolating at the mapped Gauss nodes reproduces
P^log_N = span{1, t, ..., t^N} exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .hermite import HermiteRule, hermite_scaled_table, hermite_orthonormal_table
from .mhf import (
    MhfBasis,
    MhfRule,
    _check_unit_interval,
    _logistic,
    _values_at_nodes,
    log_gamma_n,
    mhf_gauss_rule,
    mhf_quadrature,
)

__all__ = [
    "LagrangeBasis",
    "lagrange_basis",
    "Interpolant1D",
    "Interpolant2D",
    "interp_eval",
    "tensor_interpolant",
    "MhfSeries",
    "project",
    "ErrorNorms",
    "error_norms",
    "eval_grid_1d",
    "eval_grid_axis_2d",
]

DUPLICATE_GAP = 1e-14


@dataclass(frozen=True)
class LagrangeBasis:
    """Barycentric Lagrange basis in a transformed variable.

    nodes_t are the (ascending) interpolation nodes in the transformed
    variable; domain is "real" (points are used as-is) or "unit" (points
    x in (0,1) are sent through t = log(x/(1-x)) first, with nodes_x the
    original nodes).  weights carry a common scale factor only, which
    cancels in the barycentric formula.
    """

    nodes_t: np.ndarray
    weights: np.ndarray
    domain: str = "real"
    nodes_x: Optional[np.ndarray] = None

    @property
    def degree(self) -> int:
        return len(self.nodes_t) - 1

    @classmethod
    def from_mhf_rule(cls, rule: MhfRule) -> "LagrangeBasis":
        return cls(
            nodes_t=rule.logits,
            weights=_bary_weights(rule.logits),
            domain="unit",
            nodes_x=rule.nodes,
        )

    @classmethod
    def from_hermite_rule(cls, rule: HermiteRule) -> "LagrangeBasis":
        return cls(nodes_t=rule.nodes, weights=_bary_weights(rule.nodes))


def _bary_weights(t: np.ndarray) -> np.ndarray:
    """Barycentric weights 1/prod(t_j - t_i), log-magnitude accumulation.

    Accumulating log|t_j - t_i| and the sign separately keeps the weights
    representable for hundreds of nodes, where the raw products would
    overflow; the common scale is normalized away at the end.
    """
    t = np.asarray(t, dtype=float)
    n = t.size
    if n == 0:
        raise ValueError("at least one node is required")
    if np.any(np.diff(t) <= 0):
        raise ValueError("nodes must be strictly ascending")
    scale = max(1.0, float(np.max(np.abs(t))))
    if n > 1 and np.min(np.diff(t)) < DUPLICATE_GAP * scale:
        raise ValueError("duplicate interpolation nodes (gap below 1e-14 relative)")
    if n == 1:
        return np.ones(1)
    diff = t[:, None] - t[None, :]
    np.fill_diagonal(diff, 1.0)
    log_mag = -np.sum(np.log(np.abs(diff)), axis=1)
    # ascending nodes: sign of prod_{i != j}(t_j - t_i) alternates from the top
    sign = np.where((n - 1 - np.arange(n)) % 2 == 0, 1.0, -1.0)
    w = sign * np.exp(log_mag - np.max(log_mag))
    w.setflags(write=False)
    return w


def lagrange_basis(nodes_transformed) -> LagrangeBasis:
    """Barycentric basis on ascending real nodes (transformed variable)."""
    t = np.asarray(nodes_transformed, dtype=float)
    return LagrangeBasis(nodes_t=t, weights=_bary_weights(t))


def _transform_points(basis: LagrangeBasis, x: np.ndarray) -> np.ndarray:
    if basis.domain == "unit":
        x = _check_unit_interval(x)
        return np.log(x) - np.log1p(-x)
    return np.asarray(x, dtype=float)


def _cardinal_from_t(basis: LagrangeBasis, t: np.ndarray) -> np.ndarray:
    """Rows of cardinal function values l_j(t); exact hits give unit rows."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    d = t[:, None] - basis.nodes_t[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        c = basis.weights[None, :] / d
        out = c / np.sum(c, axis=1)[:, None]
    hit_rows, hit_cols = np.nonzero(d == 0.0)
    if hit_rows.size:
        out[hit_rows] = 0.0
        out[hit_rows, hit_cols] = 1.0
    return out


def cardinal_matrix(basis: LagrangeBasis, x) -> np.ndarray:
    """Cardinal values l_j(x) for points in the original variable.

    Exact hits are detected against the stored original nodes, so
    evaluation at a node returns the unit row (and interpolants return the
    stored value) exactly.
    """
    pts = np.atleast_1d(np.asarray(x, dtype=float))
    ref = basis.nodes_x if basis.nodes_x is not None else basis.nodes_t
    t = _transform_points(basis, pts)
    out = _cardinal_from_t(basis, t)
    hit_rows, hit_cols = np.nonzero(pts[:, None] == ref[None, :])
    if hit_rows.size:
        out[hit_rows] = 0.0
        out[hit_rows, hit_cols] = 1.0
    return out


@dataclass(frozen=True)
class Interpolant1D:
    basis: LagrangeBasis
    values: np.ndarray

    @property
    def degree(self) -> int:
        return self.basis.degree

    def eval(self, x):
        out = cardinal_matrix(self.basis, x) @ self.values
        return float(out[0]) if np.ndim(x) == 0 else out

    def eval_deriv(self, x):
        """Derivative with respect to the original variable x.

        Differentiates the barycentric form in t, then applies the chain
        rule dt/dx = 1/(x(1-x)) on the unit domain.  Evaluation points must
        avoid the interpolation nodes.
        """
        pts = np.atleast_1d(np.asarray(x, dtype=float))
        t = _transform_points(self.basis, pts)
        d = t[:, None] - self.basis.nodes_t[None, :]
        if np.any(d == 0.0):
            raise ValueError("derivative evaluation at an interpolation node")
        c = self.basis.weights[None, :] / d
        denom = np.sum(c, axis=1)
        p = (c @ self.values) / denom
        dp = np.sum(c / d * (p[:, None] - self.values[None, :]), axis=1) / denom
        if self.basis.domain == "unit":
            dp = dp / (pts * (1.0 - pts))
        return float(dp[0]) if np.ndim(x) == 0 else dp


@dataclass(frozen=True)
class Interpolant2D:
    basis_x: LagrangeBasis
    basis_y: LagrangeBasis
    values: np.ndarray  # shape (nx, ny)

    def eval_grid(self, x, y) -> np.ndarray:
        """Values on the tensor grid of the two point sets, shape (len(x), len(y))."""
        lx = cardinal_matrix(self.basis_x, x)
        ly = cardinal_matrix(self.basis_y, y)
        return lx @ self.values @ ly.T

    def eval(self, x, y):
        x1, y1 = np.atleast_1d(x), np.atleast_1d(y)
        if x1.shape != y1.shape:
            raise ValueError("x and y must have matching shapes")
        lx = cardinal_matrix(self.basis_x, x1)
        ly = cardinal_matrix(self.basis_y, y1)
        out = np.einsum("pi,ij,pj->p", lx, self.values, ly)
        return float(out[0]) if np.ndim(x) == 0 else out


def interp_eval(interp: Interpolant1D, x):
    """Evaluate a one-dimensional interpolant (node hits return stored values)."""
    return interp.eval(x)


def tensor_interpolant(basis_x: LagrangeBasis, basis_y: LagrangeBasis, values) -> Interpolant2D:
    values = np.asarray(values, dtype=float)
    expected = (basis_x.degree + 1, basis_y.degree + 1)
    if values.shape != expected:
        raise ValueError(f"values must have shape {expected}, got {values.shape}")
    return Interpolant2D(basis_x=basis_x, basis_y=basis_y, values=values)


@dataclass(frozen=True)
class MhfSeries:
    """Truncated expansion sum_n coeffs[n] Q_n in a mapped Hermite basis."""

    basis: MhfBasis
    coeffs: np.ndarray
    normalized: np.ndarray  # coefficients against Q_n / sqrt(gamma^H_n)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def eval(self, x):
        pts = _check_unit_interval(np.atleast_1d(np.asarray(x, dtype=float)))
        z = self.basis.alpha * (np.log(pts) - np.log1p(-pts))
        table = hermite_orthonormal_table(self.degree, z)
        out = self.normalized @ table
        return float(out[0]) if np.ndim(x) == 0 else out


def project(basis: MhfBasis, rule: MhfRule, f) -> MhfSeries:
    """Weighted L2 projection onto span{Q_0..Q_N} via the mapped Gauss rule.

    Computes u_n = gamma_n^{-1} sum_j f(x_j) Q_n(x_j) chi_j through the
    normalized Hermite functions, so the Gaussian factors cancel in log
    space and the sums stay scaled for large degrees.
    """
    if rule.basis.alpha != basis.alpha:
        raise ValueError(
            f"rule alpha {rule.basis.alpha} does not match basis alpha {basis.alpha}"
        )
    if rule.basis.degree < basis.degree:
        raise ValueError(
            f"rule degree {rule.basis.degree} is below basis degree {basis.degree}"
        )
    fvals = _values_at_nodes(f, rule.nodes)
    z = rule.hermite.nodes
    table = hermite_scaled_table(basis.degree, z)
    half_weights = np.exp(rule.hermite.log_weights + 0.5 * z * z)
    normalized = table @ (fvals * half_weights)
    # gamma^H_n = sqrt(pi) 2^n n!  (alpha-free); u_n = c_n / sqrt(gamma^H_n)
    log_gh = np.array([log_gamma_n(1.0, n) for n in range(basis.degree + 1)])
    coeffs = normalized * np.exp(-0.5 * log_gh)
    for arr in (coeffs, normalized):
        arr.setflags(write=False)
    return MhfSeries(basis=basis, coeffs=coeffs, normalized=normalized)


class ErrorNorms(NamedTuple):
    err_inf: float
    err_l2chi: float


def eval_grid_1d() -> np.ndarray:
    """Fixed evaluation grid on (0,1): 2001 endpoint-clustered mapped points
    x = sigma(t), t uniform on [-8, 8], plus 999 uniform points on
    [1e-3, 1-1e-3]."""
    mapped = _logistic(np.linspace(-8.0, 8.0, 2001))
    uniform = np.linspace(1e-3, 1.0 - 1e-3, 999)
    return np.unique(np.concatenate([mapped, uniform]))


def eval_grid_axis_2d() -> np.ndarray:
    """Per-axis analog of eval_grid_1d with about 101 points."""
    mapped = _logistic(np.linspace(-8.0, 8.0, 68))
    uniform = np.linspace(1e-3, 1.0 - 1e-3, 33)
    return np.unique(np.concatenate([mapped, uniform]))


def _evaluator(approx) -> Callable:
    if hasattr(approx, "eval"):
        return approx.eval
    return approx


def _infer_degree(approx) -> Optional[int]:
    if hasattr(approx, "degree"):
        return approx.degree
    return None


def error_norms(approx, exact, alpha, dim: int = 1, degree: Optional[int] = None) -> ErrorNorms:
    """Sup-norm error on the fixed grid and weighted L2 error by oversampled
    quadrature (rule degree 2N+16).

    alpha is a scalar in one dimension, a pair in two; degree defaults to
    the approximant's own degree when it exposes one.
    """
    if degree is None:
        degree = _infer_degree(approx)
        if degree is None:
            raise ValueError("degree must be given for plain-callable approximants")
    if dim == 1:
        ev = _evaluator(approx)
        grid = eval_grid_1d()
        diff_on = lambda x: np.asarray(ev(x), dtype=float) - np.asarray(exact(x), dtype=float)
        err_inf = float(np.max(np.abs(diff_on(grid))))
        rule = mhf_gauss_rule(MhfBasis(alpha=float(alpha), degree=2 * degree + 16))
        err_l2 = math.sqrt(max(0.0, mhf_quadrature(rule, lambda x: diff_on(x) ** 2)))
        return ErrorNorms(err_inf=err_inf, err_l2chi=err_l2)
    if dim == 2:
        a1, a2 = (float(alpha[0]), float(alpha[1]))
        axis = eval_grid_axis_2d()
        grid_vals = approx.eval_grid(axis, axis)
        gx, gy = np.meshgrid(axis, axis, indexing="ij")
        err_inf = float(np.max(np.abs(grid_vals - np.asarray(exact(gx, gy), dtype=float))))
        rule_x = mhf_gauss_rule(MhfBasis(alpha=a1, degree=2 * degree + 16))
        rule_y = mhf_gauss_rule(MhfBasis(alpha=a2, degree=2 * degree + 16))
        qx, qy = np.meshgrid(rule_x.nodes, rule_y.nodes, indexing="ij")
        diff = approx.eval_grid(rule_x.nodes, rule_y.nodes) - np.asarray(
            exact(qx, qy), dtype=float
        )
        err_l2 = math.sqrt(
            max(0.0, float(rule_x.weights @ diff**2 @ rule_y.weights))
        )
        return ErrorNorms(err_inf=err_inf, err_l2chi=err_l2)
    raise ValueError(f"dim must be 1 or 2, got {dim}")
