"""Hermite polynomials and Gauss-Hermite quadrature on the real line.

Everything here uses the physicists' convention: H_0(z) = 1, H_1(z) = 2z,
H_{n+1}(z) = 2z H_n(z) - 2n H_{n-1}(z), orthogonal under exp(-z^2) with
norm gamma_n = sqrt(pi) 2^n n!.

Raw Hermite values overflow quickly (H_n grows like sqrt(gamma_n) e^{z^2/2}),
so large-degree work goes through the normalized Hermite functions

    h_n(z) = H_n(z) exp(-z^2/2) / sqrt(gamma_n),

which stay bounded for all n and z and satisfy the stable recurrence

    h_{n+1} = z sqrt(2/(n+1)) h_n - sqrt(n/(n+1)) h_{n-1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "HermiteRule",
    "hermite_eval",
    "hermite_eval_scaled",
    "hermite_gauss_rule",
    "hermite_scaled_table",
    "hermite_orthonormal_table",
]

SQRT_PI = math.sqrt(math.pi)

MAX_RULE_DEGREE = 2000


def hermite_eval(n: int, z: float) -> float:
    """Evaluate H_n(z) by the three-term recurrence.

    Raises OverflowError once the value leaves double range; callers that
    need large n should use hermite_eval_scaled instead.
    """
    if n < 0:
        raise ValueError(f"degree must be nonnegative, got {n}")
    z = float(z)
    if not math.isfinite(z):
        raise ValueError(f"evaluation point must be finite, got {z}")
    if n == 0:
        return 1.0
    hprev, h = 1.0, 2.0 * z
    for k in range(1, n):
        hprev, h = h, 2.0 * z * h - 2.0 * k * hprev
    if not math.isfinite(h):
        raise OverflowError(f"H_{n}({z}) overflows double precision")
    return h


def hermite_eval_scaled(n: int, z: float) -> float:
    """Evaluate the normalized Hermite function h_n(z).

    Bounded by about 0.816 for every n and z, so this is safe for degrees
    and arguments far beyond the raw recurrence (n up to 10^4, |z| up to
    10^2 and beyond).  For |z| large enough that exp(-z^2/2) underflows the
    result is a clean 0.0.
    """
    if n < 0:
        raise ValueError(f"degree must be nonnegative, got {n}")
    z = float(z)
    if not math.isfinite(z):
        raise ValueError(f"evaluation point must be finite, got {z}")
    h = math.exp(-0.5 * z * z) / math.pi**0.25
    if n == 0:
        return h
    hprev, h = h, math.sqrt(2.0) * z * h
    for k in range(1, n):
        hprev, h = h, z * math.sqrt(2.0 / (k + 1)) * h - math.sqrt(k / (k + 1)) * hprev
    return h


def hermite_scaled_table(nmax: int, z: np.ndarray) -> np.ndarray:
    """Table of normalized Hermite functions h_n(z), shape (nmax+1, len(z))."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    table = np.empty((nmax + 1, z.size))
    table[0] = np.exp(-0.5 * z * z) / math.pi**0.25
    if nmax >= 1:
        table[1] = math.sqrt(2.0) * z * table[0]
    for k in range(1, nmax):
        table[k + 1] = z * math.sqrt(2.0 / (k + 1)) * table[k] - math.sqrt(
            k / (k + 1)
        ) * table[k - 1]
    return table


def hermite_orthonormal_table(nmax: int, z: np.ndarray) -> np.ndarray:
    """Table of orthonormal Hermite polynomials H_n(z)/sqrt(gamma_n).

    Unlike hermite_scaled_table this omits the Gaussian factor, so entries
    grow like exp(z^2/2); intended for evaluating expansions at moderate z.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    table = np.empty((nmax + 1, z.size))
    table[0] = np.full(z.size, math.pi**-0.25)
    if nmax >= 1:
        table[1] = math.sqrt(2.0) * z * table[0]
    for k in range(1, nmax):
        table[k + 1] = z * math.sqrt(2.0 / (k + 1)) * table[k] - math.sqrt(
            k / (k + 1)
        ) * table[k - 1]
    return table


@dataclass(frozen=True)
class HermiteRule:
    """Gauss-Hermite rule with N+1 nodes, exact on P_{2N+1} against exp(-z^2).

    log_weights holds log(weights) computed directly from the normalized
    recurrence, so it stays meaningful even where the weights themselves
    underflow (|z| large).  Sum of weights is sqrt(pi).
    """

    degree: int
    nodes: np.ndarray
    weights: np.ndarray
    log_weights: np.ndarray


def _scaled_pair(n: int, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalized Hermite functions (h_n, h_{n-1}) at the points z, n >= 1."""
    hprev = np.exp(-0.5 * z * z) / math.pi**0.25
    h = np.sqrt(2.0) * z * hprev
    for k in range(1, n):
        hprev, h = h, z * math.sqrt(2.0 / (k + 1)) * h - math.sqrt(k / (k + 1)) * hprev
    return h, hprev


def hermite_gauss_rule(degree: int) -> HermiteRule:
    """Build the (degree+1)-point Gauss-Hermite rule.

    Nodes come from the Golub-Welsch symmetric tridiagonal eigenproblem
    (zero diagonal, off-diagonal sqrt(k/2)) followed by one Newton step on
    the normalized recurrence; weights from the first eigenvector
    components, sqrt(pi) v_0^2.
    """
    if not 0 <= degree <= MAX_RULE_DEGREE:
        raise ValueError(f"rule degree must be in [0, {MAX_RULE_DEGREE}], got {degree}")
    if degree == 0:
        nodes = np.zeros(1)
        weights = np.array([SQRT_PI])
        log_weights = np.log(weights)
    else:
        off = np.sqrt(np.arange(1, degree + 1) / 2.0)
        try:
            vals, vecs = scipy.linalg.eigh_tridiagonal(np.zeros(degree + 1), off)
        except scipy.linalg.LinAlgError as exc:  # pragma: no cover - defensive
            raise RuntimeError(
                f"Gauss-Hermite eigensolve failed for degree {degree}: {exc}"
            ) from exc
        nodes = vals
        weights = SQRT_PI * vecs[0] ** 2

        # One Newton polish on the roots of H_{degree+1}: the correction is
        # h_{n+1} / (sqrt(2(n+1)) h_n) with n+1 = degree+1.
        h_top, h_sub = _scaled_pair(degree + 1, nodes)
        nodes = nodes - h_top / (math.sqrt(2.0 * (degree + 1)) * h_sub)

        # Enforce the +-z symmetry of the rule exactly.
        nodes = 0.5 * (nodes - nodes[::-1])
        weights = 0.5 * (weights + weights[::-1])

        # Stable log-weights: w_j = exp(-z^2) / ((N+1) h_N(z_j)^2), with h_N
        # the normalized Hermite function, which never underflows at a node.
        _, h_deg = _scaled_pair(degree + 1, nodes)
        log_weights = (
            -(nodes**2) - math.log(degree + 1) - 2.0 * np.log(np.abs(h_deg))
        )
        log_weights = 0.5 * (log_weights + log_weights[::-1])
        underflow = weights == 0.0
        if np.any(underflow):
            weights = np.where(underflow, np.exp(log_weights), weights)

    for arr in (nodes, weights, log_weights):
        arr.setflags(write=False)
    return HermiteRule(degree=degree, nodes=nodes, weights=weights, log_weights=log_weights)
