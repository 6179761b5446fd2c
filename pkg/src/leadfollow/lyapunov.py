"""Steady-state covariance of ``dx = -L x dt + dW`` for lower-triangular ``L``.

The covariance solves ``L P + P L^T = I``.  Written entrywise,

    (L_ii + L_jj) P_ij = delta_ij - sum_{k<i} L_ik P_kj - sum_{k<j} L_jk P_ik,

so ``P_ij`` depends only on entries with a smaller index sum ``i + j``.  The
solver sweeps those antidiagonals in increasing order (a wavefront); all cells
of one antidiagonal are independent and are updated together.  Only the lower
triangle is computed and it is mirrored, so ``P`` is symmetric exactly.
Results do not depend on the order within an antidiagonal.

This module is the independent numerical check on :mod:`leadfollow.closedform`;
it never uses the analytical formulas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .closedform import VarianceField
from .lattice import LatticeSpec, ModifiedLaplacian

__all__ = [
    "INTEGRAL_LIMIT",
    "LYAPUNOV_LIMIT",
    "CovarianceMatrix",
    "covariance_integral_check",
    "solve_triangular_lyapunov",
    "variance_diagonal",
]

#: dense P above this many states would need more than ~800 MB
LYAPUNOV_LIMIT = 10**4
INTEGRAL_LIMIT = 200


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Dense symmetric covariance ``P``, optionally tagged with its lattice."""

    matrix: np.ndarray
    spec: LatticeSpec | None = None

    @property
    def size(self):
        return self.matrix.shape[0]

    def diagonal(self):
        return np.diag(self.matrix).copy()

    def residual(self, lap):
        """``max |L P + P L^T - I|``."""
        L = lap.to_sparse() if isinstance(lap, ModifiedLaplacian) else np.asarray(lap)
        LP = L @ self.matrix
        return float(np.max(np.abs(LP + LP.T - np.eye(self.size))))

    def is_positive_definite(self):
        try:
            np.linalg.cholesky(self.matrix)
        except np.linalg.LinAlgError:
            return False
        return True


def _triangular_parts(lap):
    if np.any(lap.cols > lap.rows):
        raise ValueError("matrix is not lower triangular")
    diag = lap.diagonal()
    if np.any(diag <= 0):
        raise ValueError("non-positive diagonal entry: -L is not stable")
    pred, weight = lap.predecessors()
    return diag, pred, weight


def solve_triangular_lyapunov(lap, check_order=False):
    """Solve ``L P + P L^T = I`` for a lower-triangular :class:`ModifiedLaplacian`.

    ``check_order=True`` tracks which entries have been solved and asserts
    that the wavefront only ever reads finished ones.
    """
    n = lap.size
    if n > LYAPUNOV_LIMIT:
        raise ValueError(
            f"{n} states exceed the dense Lyapunov limit of {LYAPUNOV_LIMIT}; "
            "use the closed-form evaluation instead"
        )
    diag, pred, weight = _triangular_parts(lap)
    # row/column n is an all-zero sentinel standing in for the leader
    P = np.zeros((n + 1, n + 1))
    solved = None
    if check_order:
        solved = np.zeros((n + 1, n + 1), dtype=bool)
        solved[n, :] = solved[:, n] = True

    for s in range(2 * n - 1):
        i = np.arange((s + 1) // 2, min(s, n - 1) + 1)
        j = s - i
        rhs = (i == j).astype(float)
        for a in range(pred.shape[1]):
            pi, pj = pred[i, a], pred[j, a]
            if solved is not None:
                assert solved[pi, j].all() and solved[i, pj].all(), "read before solve"
            rhs += weight[i, a] * P[pi, j]
            rhs += weight[j, a] * P[i, pj]
        value = rhs / (diag[i] + diag[j])
        P[i, j] = value
        P[j, i] = value
        if solved is not None:
            solved[i, j] = solved[j, i] = True

    return CovarianceMatrix(P[:n, :n].copy(), lap.spec)


def covariance_integral_check(lap, t_max=40.0, steps=4000):
    """Quadrature of ``P = int_0^inf exp(-L t) exp(-L^T t) dt`` over ``[0, t_max]``.

    Trapezoid rule on ``steps`` equally spaced nodes with the first
    Euler-Maclaurin end correction ``-h**2/12 [F'(t_max) - F'(0)]``, where
    ``F' = -(L F + F L^T)``; the error is ``O(h**4)`` plus the neglected tail,
    which is below ``1e-6`` once ``t_max >= 40 / min(diag L)``.  The
    propagator is stepped by repeated multiplication with ``expm(-L h)``.
    """
    n = lap.size
    if n > INTEGRAL_LIMIT:
        raise ValueError(f"{n} states exceed the quadrature limit of {INTEGRAL_LIMIT}")
    if t_max <= 0 or steps < 2:
        raise ValueError("need t_max > 0 and at least two quadrature nodes")
    L = lap.to_dense() if isinstance(lap, ModifiedLaplacian) else np.asarray(lap, float)
    h = t_max / (steps - 1)
    step = expm(-L * h)
    E = np.eye(n)
    total = np.zeros((n, n))
    F = E @ E.T
    F0 = F
    for _ in range(steps - 1):
        total += F
        E = E @ step
        F = E @ E.T
    total += F
    total -= 0.5 * (F0 + F)

    def deriv(X):
        LX = L @ X
        return -(LX + LX.T)

    P = h * total - h * h / 12.0 * (deriv(F) - deriv(F0))
    return CovarianceMatrix(0.5 * (P + P.T), getattr(lap, "spec", None))


def variance_diagonal(P, spec=None):
    """Diagonal of ``P`` re-indexed by lattice coordinates."""
    spec = spec or P.spec
    if spec is None:
        raise ValueError("lattice spec unknown")
    if P.size != spec.size:
        raise ValueError(f"covariance has {P.size} states, lattice has {spec.size}")
    return VarianceField(spec, P.diagonal().reshape(spec.shape))
