"""Factorials, central binomials and lattice random-walk return probabilities.

Two evaluation routes are kept side by side:

* floating point, in log scale or through ratio recurrences, for large indices;
* exact rationals (:class:`fractions.Fraction`) for small indices, used as the
  oracle in tests and in the ``exact=True`` code paths.

The module also hosts the compensated-summation helpers shared by the rest of
the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln, logsumexp

__all__ = [
    "EXACT_LIMIT",
    "Accumulator",
    "ReturnProbSeries",
    "central_binomial_scaled",
    "compensated_cumsum",
    "exact_central_binomial_scaled",
    "exact_return_prob",
    "exact_term_1d",
    "log_central_binomial_scaled",
    "log_factorial",
    "log_return_prob",
    "return_prob",
    "return_prob_series",
    "two_sum",
]

#: largest index accepted by the exact-rational 1D term evaluator
EXACT_LIMIT = 64

_DIMENSIONS = (1, 2, 3)


def _check_dimension(dimension):
    if dimension not in _DIMENSIONS:
        raise ValueError(f"dimension must be one of {_DIMENSIONS}, got {dimension!r}")


def _check_index(k, name="k"):
    if isinstance(k, (bool, np.bool_)) or int(k) != k or k < 0:
        raise ValueError(f"{name} must be a non-negative integer, got {k!r}")
    return int(k)


# ---------------------------------------------------------------------------
# compensated summation
# ---------------------------------------------------------------------------


def two_sum(a, b):
    """Error-free transformation ``a + b = s + e`` (Knuth), elementwise."""
    s = a + b
    bp = s - a
    ap = s - bp
    e = (a - ap) + (b - bp)
    return s, e


class Accumulator:
    """Running compensated sum of floats or equally shaped arrays.

    Like :func:`math.fsum` but incremental and vectorised: every call to
    :meth:`add` folds one term (or one array of terms) into a sum/carry pair.
    """

    def __init__(self, shape=()):
        self._s = np.zeros(shape)
        self._c = np.zeros(shape)

    def add(self, x):
        self._s, e = two_sum(self._s, np.asarray(x, dtype=float))
        self._c = self._c + e

    @property
    def value(self):
        v = self._s + self._c
        return float(v) if v.ndim == 0 else v


def _cumsum_pairs(x):
    # compensated running sums along axis 0, returned as (sum, carry)
    s = np.zeros(x.shape[1:])
    c = np.zeros(x.shape[1:])
    out_s = np.empty_like(x)
    out_c = np.empty_like(x)
    for r in range(x.shape[0]):
        s, e = two_sum(s, x[r])
        c = c + e
        out_s[r] = s
        out_c[r] = c
    return out_s, out_c


def compensated_cumsum(x, axis=0):
    """Cumulative sum of ``x`` along ``axis`` with error-free transformations.

    One-dimensional input is blocked into a roughly square array so the
    Python-level loop runs over ``O(sqrt(n))`` steps; higher-dimensional input
    is swept along ``axis`` and vectorised over the remaining axes.  The term
    order is fixed, so results are reproducible bit for bit.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        raise ValueError("compensated_cumsum needs at least one dimension")
    if x.shape[axis] == 0:
        return x.copy()
    if x.ndim > 1:
        moved = np.moveaxis(x, axis, 0)
        s, c = _cumsum_pairs(moved)
        return np.moveaxis(s + c, 0, axis)

    n = x.size
    width = max(1, math.isqrt(n))
    nblocks = -(-n // width)
    padded = np.zeros(nblocks * width)
    padded[:n] = x
    blocks = padded.reshape(nblocks, width)
    # running sums inside each block, vectorised over blocks
    in_s, in_c = _cumsum_pairs(blocks.T)
    in_s, in_c = in_s.T, in_c.T
    totals = in_s[:, -1] + in_c[:, -1]
    tot_s, tot_c = _cumsum_pairs(totals)
    off_s = np.concatenate(([0.0], tot_s[:-1]))
    off_c = np.concatenate(([0.0], tot_c[:-1]))
    s, e = two_sum(off_s[:, None], in_s)
    out = s + (e + in_c + off_c[:, None])
    return out.reshape(-1)[:n]


# ---------------------------------------------------------------------------
# factorials and central binomials
# ---------------------------------------------------------------------------


def log_factorial(n):
    """Natural log of ``n!``; exactly zero for ``n`` in {0, 1}."""
    n = _check_index(n, "n")
    if n < 2:
        return 0.0
    if n <= 20:
        return math.log(math.factorial(n))
    return math.lgamma(n + 1.0)


def exact_central_binomial_scaled(k):
    """``C(2k, k) / 4**k`` as an exact rational."""
    k = _check_index(k)
    return Fraction(math.comb(2 * k, k), 4**k)


def log_central_binomial_scaled(k):
    """``log(C(2k, k) / 4**k)`` as an exactly rounded sum of ``log1p`` terms.

    Uses ``C(2k, k) / 4**k = prod_{i<=k} (1 - 1/(2i))``; every factor is taken
    through ``log1p`` and the logs are added with :func:`math.fsum`, so the
    result carries no cancellation even for ``k`` in the millions.
    """
    k = _check_index(k)
    if k == 0:
        return 0.0
    i = np.arange(1, k + 1, dtype=float)
    return math.fsum(np.log1p(-0.5 / i))


def central_binomial_scaled(k):
    """Return ``(2k)! / (4**k k! k!)``, the 1D return probability ``u_2k``."""
    k = _check_index(k)
    if k <= EXACT_LIMIT:
        return float(exact_central_binomial_scaled(k))
    return math.exp(log_central_binomial_scaled(k))


def exact_term_1d(i):
    """Exact ``i``-th summand ``(2i-2)! / (2 * 4**(i-1) * ((i-1)!)**2)`` of the 1D variance."""
    if isinstance(i, bool) or int(i) != i or not 1 <= i <= EXACT_LIMIT:
        raise ValueError(f"i must be an integer in [1, {EXACT_LIMIT}], got {i!r}")
    i = int(i)
    return Fraction(math.factorial(2 * i - 2), 2 * 4 ** (i - 1) * math.factorial(i - 1) ** 2)


# ---------------------------------------------------------------------------
# return probabilities
# ---------------------------------------------------------------------------


def _log_trinomial_square_sum(k):
    # log of sum_{j,l} (k! / (3**k j! l! (k-j-l)!))**2 over the simplex j + l <= k
    j, l = np.meshgrid(np.arange(k + 1), np.arange(k + 1), indexing="ij")
    r = k - j - l
    ok = r >= 0
    logt = (gammaln(k + 1.0) - gammaln(j[ok] + 1.0) - gammaln(l[ok] + 1.0)
            - gammaln(r[ok] + 1.0) - k * math.log(3.0))
    return float(logsumexp(2.0 * logt))


def log_return_prob(dimension, k):
    """Log of the probability that a simple random walk on Z^dimension is back
    at the origin after ``2k`` steps.

    The 3D value evaluates the double sum over trinomial coefficients directly
    (``O(k**2)`` terms), combined in log scale.
    """
    _check_dimension(dimension)
    k = _check_index(k)
    lu = log_central_binomial_scaled(k)
    if dimension == 1:
        return lu
    if dimension == 2:
        return 2.0 * lu
    return lu + _log_trinomial_square_sum(k)


def return_prob(dimension, k):
    """Return probability ``u_2k`` on the undirected lattice Z^dimension."""
    return math.exp(log_return_prob(dimension, k))


def exact_return_prob(dimension, k):
    """Exact rational ``u_2k``; the 3D double sum costs ``O(k**2)`` big-int terms."""
    _check_dimension(dimension)
    k = _check_index(k)
    u = exact_central_binomial_scaled(k)
    if dimension == 1:
        return u
    if dimension == 2:
        return u * u
    fk = math.factorial(k)
    total = 0
    for j in range(k + 1):
        for l in range(k - j + 1):
            m = fk // (math.factorial(j) * math.factorial(l) * math.factorial(k - j - l))
            total += m * m
    return u * Fraction(total, 9**k)


@dataclass(frozen=True)
class ReturnProbSeries:
    """Sequence ``u_0, u_2, ..., u_2K`` for one lattice dimension.

    ``walks`` is set for empirical (simulated) series and is ``None`` for
    analytic ones; only analytic series are checked against the invariants
    ``u_0 = 1``, ``0 < u <= 1`` and monotone decrease.
    """

    dimension: int
    values: np.ndarray
    walks: int | None = None

    def __post_init__(self):
        _check_dimension(self.dimension)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if self.walks is None:
            if values.size == 0 or values[0] != 1.0:
                raise ValueError("an analytic series must start with u_0 = 1")
            if np.any(values <= 0) or np.any(values > 1):
                raise ValueError("return probabilities must lie in (0, 1]")
            if np.any(np.diff(values) > 0):
                raise ValueError("return probabilities must be non-increasing")

    @property
    def K(self):
        return self.values.size - 1

    @property
    def empirical(self):
        return self.walks is not None

    def standard_error(self):
        """Binomial standard error of an empirical series."""
        if self.walks is None:
            raise ValueError("standard errors exist only for empirical series")
        p = self.values
        return np.sqrt(p * (1.0 - p) / self.walks)


def _series_1d(K):
    # u_2k = u_2(k-1) * (2k - 1) / (2k)
    ratios = np.ones(K + 1)
    k = np.arange(1, K + 1, dtype=float)
    ratios[1:] = (2.0 * k - 1.0) / (2.0 * k)
    return np.cumprod(ratios)


def _series_3d(K, u1):
    # Summing out the last box first collapses the trinomial double sum to
    #   u_2k(3D) = u_2k(1D) * sum_j b_k(j)**2 * u_2(k-j)(1D),
    # with b_k the Binomial(k, 1/3) pmf, advanced one k at a time by Pascal's
    # rule b_{k+1}(j) = (2/3) b_k(j) + (1/3) b_k(j-1).
    out = np.empty(K + 1)
    b = np.ones(1)
    for k in range(K + 1):
        if k:
            nb = np.empty(k + 1)
            nb[:k] = b * (2.0 / 3.0)
            nb[k] = 0.0
            nb[1:] += b / 3.0
            b = nb
        # all terms positive: pairwise summation keeps the error O(log k) ulps
        out[k] = u1[k] * np.sum(b * b * u1[k::-1])
    return out


def return_prob_series(dimension, K):
    """Return ``u_2k`` for ``k = 0..K`` as a :class:`ReturnProbSeries`.

    1D values follow the multiplicative recurrence ``u_2k = u_2(k-1)(2k-1)/(2k)``
    (no factorials are ever formed); 2D squares them and 3D uses the
    collapsed single sum described in :func:`_series_3d` at ``O(K**2)`` cost.
    """
    _check_dimension(dimension)
    K = _check_index(K, "K")
    u1 = _series_1d(K)
    if dimension == 1:
        values = u1
    elif dimension == 2:
        values = u1 * u1
    else:
        values = _series_3d(K, u1)
    return ReturnProbSeries(dimension, values)
