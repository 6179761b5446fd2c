"""Numerical checks of the asymptotic variance laws and the curve fits.

* 1D: ``V_n / sqrt(n) -> 1/sqrt(pi)`` and ``Pi_N / sqrt(N) -> 2/(3 sqrt(pi))``.
* 2D: along the diagonal, the square sum ``V_n`` is bracketed by triangle sums
  ``Delta_n <= V_n <= Delta_{2n}``, and ``Delta_n`` grows like ``ln(n) / (4 pi)``.
* 3D: the cube sum ``V_n`` is compared with pyramid sums ``T_n``; ``T_n``
  converges because its slices decay like ``p**-1.5``.

Triangles and pyramids use the index sets ``{i + j <= n - 1}`` and
``{i + j + k <= n - 1}``, so ``Delta_n = (1/4) sum_{k<n} u_2k(2D)`` and
``T_n = (1/6) sum_{k<n} u_2k(3D)`` hold exactly.  At ``n = 1`` the triangle,
square, pyramid and cube are all the single origin cell, so the lower bounds
are equalities there.

The cube ``[0, n)**3`` reaches index sum ``3n - 3`` and is therefore not
contained in the pyramid of size ``2n`` once ``n >= 3``; the smallest pyramid
containing it has size ``3n - 2``.  :func:`sandwich_3d` accepts the upper
index so both brackets can be reported.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from .closedform import (
    diagonal_variances,
    variance_1d_series,
    variance_2d,
    variance_3d,
)
from .combinatorics import (
    compensated_cumsum,
    exact_central_binomial_scaled,
    exact_return_prob,
    return_prob_series,
)

__all__ = [
    "FitResult",
    "PairedSum",
    "SandwichReport",
    "antidiagonal_sum_2d",
    "fit_scaling",
    "increment_exponent_3d",
    "limit_check_1d",
    "log_law_offsets_2d",
    "pyramid_limit_3d",
    "pyramid_slice_bound_3d",
    "pyramid_slice_sum_3d",
    "pyramid_sum_3d",
    "sandwich_2d",
    "sandwich_3d",
    "sandwich_reports_2d",
    "sandwich_reports_3d",
    "slice_constant_3d",
    "table_structure",
    "triangle_sum_2d",
    "undirected_reference_1d",
]

SQRT_PI_INV = 1.0 / math.sqrt(math.pi)
PI_LIMIT_1D = 2.0 / (3.0 * math.sqrt(math.pi))
LOG_RATE_2D = 1.0 / (4.0 * math.pi)

MODELS = ("log_fit", "sqrt_fit", "power_fit")


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of an indexed series.

    ``coefficients`` are ``(a, b)`` for ``a ln(n) + b``, ``(a,)`` for
    ``a sqrt(n)`` and ``(a, p)`` for ``a n**p``.  ``residual_rms`` is measured in
    the units of the data, and ``fit_range`` holds the first and last index used.
    """

    model: str
    coefficients: tuple
    residual_rms: float
    fit_range: tuple

    def __call__(self, n):
        n = np.asarray(n, dtype=float)
        if self.model == "log_fit":
            a, b = self.coefficients
            return a * np.log(n) + b
        if self.model == "sqrt_fit":
            return self.coefficients[0] * np.sqrt(n)
        a, p = self.coefficients
        return a * n**p

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SandwichReport:
    n: int
    lower: float
    middle: float
    upper: float

    @property
    def holds(self):
        """Strict bracketing for ``n >= 2``; the lower bound may be tight at ``n = 1``."""
        if self.n == 1:
            return self.lower <= self.middle < self.upper
        return self.lower < self.middle < self.upper

    def to_dict(self):
        return {**asdict(self), "holds": self.holds}


@dataclass(frozen=True)
class PairedSum:
    """A slice sum evaluated term by term and through its closed form."""

    direct: float
    closed: float


def fit_scaling(n, values, model, fit_range=None):
    """Ordinary least squares fit of ``values`` against index ``n``.

    ``fit_range = (lo, hi)`` restricts the fit to ``lo <= n <= hi``.
    """
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")
    n = np.asarray(n, dtype=float)
    y = np.asarray(values, dtype=float)
    if n.shape != y.shape:
        raise ValueError("indices and values differ in length")
    if fit_range is not None:
        keep = (n >= fit_range[0]) & (n <= fit_range[1])
        n, y = n[keep], y[keep]
    if n.size < 3:
        raise ValueError("need at least three points to fit")
    if np.ptp(n) == 0:
        raise ValueError("singular design: all indices are equal")
    if np.any(n <= 0):
        raise ValueError("indices must be positive")

    if model == "log_fit":
        A = np.column_stack([np.log(n), np.ones_like(n)])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        coefficients = (float(coef[0]), float(coef[1]))
    elif model == "sqrt_fit":
        r = np.sqrt(n)
        coefficients = (float(r @ y / (r @ r)),)
    else:
        if np.any(y <= 0):
            raise ValueError("power fit needs positive values")
        A = np.column_stack([np.ones_like(n), np.log(n)])
        coef, *_ = np.linalg.lstsq(A, np.log(y), rcond=None)
        coefficients = (float(math.exp(coef[0])), float(coef[1]))
    fit = FitResult(model, coefficients, 0.0, (int(n.min()), int(n.max())))
    rms = float(np.sqrt(np.mean((y - fit(n)) ** 2)))
    return FitResult(model, coefficients, rms, fit.fit_range)


# ---------------------------------------------------------------------------
# 1D
# ---------------------------------------------------------------------------


def _geometric_indices(n_max, per_decade=4):
    count = max(2, int(math.log10(n_max) * per_decade) + 1)
    idx = np.unique(np.round(np.geomspace(1, n_max, count)).astype(int))
    return idx


def limit_check_1d(n_max):
    """Convergence tables for ``V_n / sqrt(n)`` and ``Pi_N / sqrt(N)``.

    Returns a dict with tables ``"variance"`` and ``"normalized_total"``.  Rows
    are ``(n, ratio, deviation)`` at geometrically spaced indices, and each
    table records whether the deviation decreases monotonically past
    ``n = 100``.
    """
    if n_max < 10:
        raise ValueError("n_max must be at least 10")
    V = variance_1d_series(n_max)
    n = np.arange(1, n_max + 1)
    Pi = compensated_cumsum(V) / n
    idx = _geometric_indices(n_max)

    def table(values, limit):
        rows = []
        for k in idx:
            ratio = values[k - 1] / math.sqrt(k)
            rows.append((int(k), float(ratio), float(abs(ratio - limit))))
        tail = [r[2] for r in rows if r[0] >= 100]
        monotone = all(b < a for a, b in zip(tail, tail[1:]))
        return {"limit": limit, "rows": rows, "monotone_after_100": monotone}

    return {"variance": table(V, SQRT_PI_INV), "normalized_total": table(Pi, PI_LIMIT_1D)}


def undirected_reference_1d(n):
    """Variance ``n / 2`` of the ``n``-th follower on an undirected line.

    Comparison series only: it is the effective resistance ``n`` from the
    follower to the leader, halved, and is not derived here.
    """
    return 0.5 * np.asarray(n, dtype=float)


# ---------------------------------------------------------------------------
# 2D
# ---------------------------------------------------------------------------


def antidiagonal_sum_2d(k, exact=False):
    """``S_k``, the sum of the 2D summand over ``i + j = k``.

    ``direct`` adds the ``k + 1`` summands one by one (log-gamma evaluation in
    floating point); ``closed`` is ``C(2k, k)**2 / (4 * 16**k)``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if exact:
        direct = sum(
            (
                Fraction(math.factorial(2 * k), 4 * 16**k * (math.factorial(i) * math.factorial(k - i)) ** 2)
                for i in range(k + 1)
            ),
            Fraction(0),
        )
        return PairedSum(direct, exact_central_binomial_scaled(k) ** 2 / 4)
    i = np.arange(k + 1)
    log_terms = (gammaln(2 * k + 1.0) - math.log(4.0) - 2 * k * math.log(4.0)
                 - 2 * gammaln(i + 1.0) - 2 * gammaln(k - i + 1.0))
    direct = math.fsum(np.exp(log_terms))
    closed = return_prob_series(2, k).values[-1] / 4.0
    return PairedSum(direct, float(closed))


def triangle_sum_2d(n):
    """``Delta_n = (1/4) sum_{k<n} u_2k(2D)``."""
    if n < 1:
        raise ValueError("n must be positive")
    return math.fsum(return_prob_series(2, n - 1).values) / 4.0


def _triangle_sums_2d(n_max):
    return compensated_cumsum(return_prob_series(2, n_max - 1).values) / 4.0


def sandwich_2d(n):
    """Bracket the diagonal variance ``V_n`` between ``Delta_n`` and ``Delta_{2n}``."""
    if n < 1:
        raise ValueError("n must be positive")
    return SandwichReport(n, triangle_sum_2d(n), variance_2d(n, n), triangle_sum_2d(2 * n))


def sandwich_reports_2d(n_max):
    """:func:`sandwich_2d` for every ``n <= n_max`` in one pass."""
    V = diagonal_variances(2, n_max)
    D = _triangle_sums_2d(2 * n_max)
    return [SandwichReport(n, float(D[n - 1]), float(V[n - 1]), float(D[2 * n - 1]))
            for n in range(1, n_max + 1)]


def log_law_offsets_2d(n_max):
    """``V_n - ln(n) / (4 pi)`` along the diagonal for ``n = 1..n_max``."""
    V = diagonal_variances(2, n_max)
    return V - LOG_RATE_2D * np.log(np.arange(1, n_max + 1))


# ---------------------------------------------------------------------------
# 3D
# ---------------------------------------------------------------------------


def pyramid_slice_sum_3d(p, exact=False):
    """``G_p``, the sum of the 3D summand over ``i + j + k = p``.

    ``direct`` evaluates the double sum over the slice term by term;
    ``closed`` is ``u_2p(3D) / 6`` from the collapsed series.
    """
    if p < 0:
        raise ValueError("p must be non-negative")
    if exact:
        fp = math.factorial(p)
        head = Fraction(math.factorial(2 * p), 6 * 4**p * fp * fp)
        total = Fraction(0)
        for j in range(p + 1):
            for k in range(p - j + 1):
                q = Fraction(fp, 3**p * math.factorial(j) * math.factorial(k) * math.factorial(p - j - k))
                total += q * q
        return PairedSum(head * total, exact_return_prob(3, p) / 6)
    j, k = np.meshgrid(np.arange(p + 1), np.arange(p + 1), indexing="ij")
    i = p - j - k
    ok = i >= 0
    log_terms = (gammaln(2 * p + 1.0) - math.log(6.0) - 2 * p * math.log(6.0)
                 - 2 * (gammaln(i[ok] + 1.0) + gammaln(j[ok] + 1.0) + gammaln(k[ok] + 1.0)))
    direct = math.fsum(np.exp(log_terms))
    closed = return_prob_series(3, p).values[-1] / 6.0
    return PairedSum(direct, float(closed))


def pyramid_slice_bound_3d(p):
    """Upper bound on ``G_p`` from the most likely split of ``p`` balls into three boxes.

    ``(1 / (6 * 4**p)) C(2p, p) p! / (3**p (floor(p/3)!)**3)``, in log scale.
    """
    q = p // 3
    log_b = (gammaln(2 * p + 1.0) - 2 * gammaln(p + 1.0) - p * math.log(4.0) - math.log(6.0)
             + gammaln(p + 1.0) - p * math.log(3.0) - 3 * gammaln(q + 1.0))
    return math.exp(log_b)


def _pyramid_sums_3d(n_max):
    return compensated_cumsum(return_prob_series(3, n_max - 1).values) / 6.0


def pyramid_sum_3d(n):
    """``T_n = (1/6) sum_{k<n} u_2k(3D)``."""
    if n < 1:
        raise ValueError("n must be positive")
    return math.fsum(return_prob_series(3, n - 1).values) / 6.0


def slice_constant_3d(p_range=(50, 200)):
    """Least-squares ``c`` in ``G_p ~ c p**-1.5`` over ``p_range`` (inclusive)."""
    lo, hi = p_range
    G = return_prob_series(3, hi).values[lo:] / 6.0
    x = np.arange(lo, hi + 1, dtype=float) ** -1.5
    return float(x @ G / (x @ x))


def pyramid_limit_3d(n, p_range=(50, 200)):
    """``T_n`` together with the tail estimate ``sum_{p>=n} c p**-1.5 <= 2c / sqrt(n - 1)``.

    Returns a dict with ``T_n``, the fitted ``c``, ``tail`` and ``limit_estimate``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    c = slice_constant_3d(p_range)
    tail = 2.0 * c / math.sqrt(n - 1)
    T = pyramid_sum_3d(n)
    return {"n": n, "T_n": T, "c": c, "p_range": tuple(p_range), "tail": tail,
            "limit_estimate": T + tail}


def sandwich_3d(n, upper_index=None):
    """Compare the diagonal variance ``V_n`` with ``T_n`` and ``T_{upper_index}``.

    ``upper_index`` defaults to ``2n``.  Pass ``3n - 2`` for the smallest
    pyramid that contains the cube (``2`` at ``n = 1``, where ``T_1 = V_1``).
    """
    if n < 1:
        raise ValueError("n must be positive")
    upper_index = 2 * n if upper_index is None else upper_index
    return SandwichReport(n, pyramid_sum_3d(n), variance_3d(n, n, n), pyramid_sum_3d(upper_index))


def sandwich_reports_3d(n_max, upper="2n"):
    """:func:`sandwich_3d` for every ``n <= n_max``; ``upper`` is ``"2n"`` or ``"3n-2"``."""
    if upper not in ("2n", "3n-2"):
        raise ValueError("upper must be '2n' or '3n-2'")
    V = diagonal_variances(3, n_max)
    T = _pyramid_sums_3d(3 * n_max + 1)
    hi = (lambda n: 2 * n) if upper == "2n" else (lambda n: max(3 * n - 2, n + 1))
    return [SandwichReport(n, float(T[n - 1]), float(V[n - 1]), float(T[hi(n) - 1]))
            for n in range(1, n_max + 1)]


def increment_exponent_3d(fit_range=(10, 50), V=None):
    """Power-law fit of the diagonal increments ``V_n - V_(n-1)`` over ``fit_range``."""
    lo, hi = fit_range
    if V is None:
        V = diagonal_variances(3, hi)
    n = np.arange(2, hi + 1)
    return fit_scaling(n, np.diff(V[:hi]), "power_fit", fit_range=(lo, hi))


def table_structure(M):
    """Structural checks on a diagonal-slice table ``M[n, m] = V(n, n, m)``.

    Entries must be non-decreasing along rows, columns and the diagonal, with
    shrinking increments (the profile flattens), and every entry must lie
    below the pyramid limit estimate, which bounds all 3D variances.
    """
    M = np.asarray(M, dtype=float)
    diag = np.diag(M)
    limit = pyramid_limit_3d(10**4)["limit_estimate"]

    def rising(d):
        return bool(np.all(d >= 0))

    def flattening(d):
        return bool(np.all(np.diff(d, axis=-1) <= 0))

    dr, dc, dd = np.diff(M, axis=1), np.diff(M, axis=0).T, np.diff(diag)
    return {
        "rows_nondecreasing": rising(dr),
        "columns_nondecreasing": rising(dc),
        "diagonal_nondecreasing": rising(dd),
        "rows_flattening": flattening(dr),
        "columns_flattening": flattening(dc),
        "diagonal_flattening": flattening(dd),
        "max": float(M.max()),
        "bound": limit,
        "bounded": bool(M.max() < limit),
    }
