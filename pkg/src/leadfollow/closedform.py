"""Analytical steady-state variances of followers on directed lattices.

With 0-based offsets ``(i, j[, k])`` from the leader corner and ``s`` their
sum, every variance is a prefix sum over a positive summand:

* 1D: ``(1/2) u(s)``
* 2D: ``f(i, j) = (2s)! / (4 * 16**s * (i! j!)**2) = (1/4) u(s) b(s, i)**2``
* 3D: ``g(i, j, k) = (2s)! / (6 * 36**s * (i! j! k!)**2) = (1/6) u(s) t(s; i, j)**2``

where ``u(s) = C(2s, s) / 4**s``, ``b`` is the Binomial(s, 1/2) pmf and ``t``
the trinomial pmf with equal cell probabilities.  ``b`` and ``t`` are
propagated from one antidiagonal to the next by Pascal's rule, which only ever
adds positive numbers, so no factorial or log-gamma evaluation is needed.

Floating sums follow a fixed order: summands are generated antidiagonal by
antidiagonal (increasing ``s``), single-point values are rounded once with
:func:`math.fsum`, and fields are built by compensated prefix sums taken axis by
axis (axis 1 first).  Results are therefore reproducible bit for bit.

When every index is at most :data:`AUTO_EXACT_LIMIT` the value is computed in
exact rational arithmetic and rounded once; ``exact=True`` returns the
:class:`~fractions.Fraction` itself for any index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .combinatorics import (
    Accumulator,
    central_binomial_scaled,
    compensated_cumsum,
    exact_central_binomial_scaled,
    return_prob_series,
)
from .lattice import LatticeSpec

__all__ = [
    "AUTO_EXACT_LIMIT",
    "FIELD_LIMIT",
    "VarianceField",
    "diagonal_variances",
    "normalized_total_1d",
    "normalized_total_1d_closed",
    "variance_1d",
    "variance_1d_product",
    "variance_1d_series",
    "variance_2d",
    "variance_3d",
    "variance_field",
]

AUTO_EXACT_LIMIT = 20
FIELD_LIMIT = 10**7


def _positive(*idx):
    for v in idx:
        if isinstance(v, bool) or int(v) != v or v < 1:
            raise ValueError(f"lattice indices must be positive integers, got {v!r}")
    return tuple(int(v) for v in idx)


@dataclass(frozen=True, eq=False)
class VarianceField:
    """Per-follower variances on a lattice.

    ``values`` has shape ``spec.shape`` and is indexed with 0-based offsets;
    :meth:`__getitem__` takes the 1-based lattice coordinate.  Exact fields
    hold :class:`~fractions.Fraction` objects (``dtype=object``).
    """

    spec: LatticeSpec
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.spec.shape:
            raise ValueError(f"values have shape {self.values.shape}, expected {self.spec.shape}")

    def __getitem__(self, coord):
        coord = tuple(np.atleast_1d(coord))
        return self.values[tuple(c - 1 for c in coord)]

    @property
    def exact(self):
        return self.values.dtype == object

    def as_float(self):
        if not self.exact:
            return self
        return VarianceField(self.spec, self.values.astype(float))

    def flat(self):
        """Values in linear-index order."""
        return self.values.reshape(-1)

    def items(self):
        """Yield ``(coordinate, value)`` pairs in linear-index order."""
        for coord, value in zip(self.spec.coordinates(), self.flat()):
            yield tuple(int(c) for c in coord), value

    def diagonal(self):
        n = np.arange(self.spec.side)
        return self.values[(n,) * self.spec.dimension]


# ---------------------------------------------------------------------------
# 1D
# ---------------------------------------------------------------------------


def variance_1d_series(N):
    """Array of ``V_1 .. V_N`` from ``V_n = V_(n-1) + u_2(n-1) / 2``."""
    (N,) = _positive(N)
    u = return_prob_series(1, N - 1).values
    return compensated_cumsum(0.5 * u)


def _exact_variance_1d(n):
    return sum((exact_central_binomial_scaled(k) for k in range(n)), Fraction(0)) / 2


def variance_1d(n, exact=None):
    """Steady-state variance of the ``n``-th follower on the directed line.

    Evaluated as the running sum ``(1/2) sum_{k<n} u_2k`` of return
    probabilities; compare :func:`variance_1d_product` for the product form.
    """
    (n,) = _positive(n)
    if exact or (exact is None and n <= AUTO_EXACT_LIMIT):
        value = _exact_variance_1d(n)
        return value if exact else float(value)
    u = return_prob_series(1, n - 1).values
    return math.fsum(u) / 2.0


def variance_1d_product(n, exact=False):
    """Product form ``n (2n)! / (4**n n! n!)`` of the 1D variance."""
    (n,) = _positive(n)
    if exact:
        return n * exact_central_binomial_scaled(n)
    return n * central_binomial_scaled(n)


def normalized_total_1d(N, exact=False):
    """Average variance ``(1/N) sum_{n<=N} V_n`` over a line of ``N`` followers."""
    (N,) = _positive(N)
    if exact:
        total = Fraction(0)
        v = Fraction(0)
        for k in range(N):
            v += exact_central_binomial_scaled(k) / 2
            total += v
        return total / N
    return math.fsum(variance_1d_series(N)) / N


def normalized_total_1d_closed(N, exact=False):
    """Closed form ``(2N+1)! / (3 * 4**N * N! N!)`` of the normalised total."""
    (N,) = _positive(N)
    if exact:
        return Fraction(math.factorial(2 * N + 1), 3 * 4**N * math.factorial(N) ** 2)
    return (2 * N + 1) * central_binomial_scaled(N) / 3.0


# ---------------------------------------------------------------------------
# summand generators
# ---------------------------------------------------------------------------


def _binomial_rows(s_max, width):
    """Yield ``(s, u(s), b)`` where ``b[i] = C(s, i) / 2**s`` for ``i < width``."""
    b = np.zeros(width)
    b[0] = 1.0
    u = 1.0
    for s in range(s_max + 1):
        if s:
            u *= (2.0 * s - 1.0) / (2.0 * s)
            half = 0.5 * b
            b = half.copy()
            b[1:] += half[:-1]
        yield s, u, b


def _trinomial_layers(p_max, width_i, width_j):
    """Yield ``(p, u(p), t)`` where ``t[i, j] = p! / (3**p i! j! (p-i-j)!)``.

    Entries with ``i + j > p`` are zero.  Only ``i < width_i`` and
    ``j < width_j`` are tracked; Pascal's rule never reads beyond them.
    """
    t = np.zeros((width_i, width_j))
    t[0, 0] = 1.0
    u = 1.0
    for p in range(p_max + 1):
        if p:
            u *= (2.0 * p - 1.0) / (2.0 * p)
            third = t / 3.0
            t = third.copy()
            t[1:, :] += third[:-1, :]
            t[:, 1:] += third[:, :-1]
        yield p, u, t


# ---------------------------------------------------------------------------
# exact evaluation
# ---------------------------------------------------------------------------


def _exact_f(i, j):
    s = i + j
    return Fraction(math.factorial(2 * s), 4 * 16**s * (math.factorial(i) * math.factorial(j)) ** 2)


def _exact_g(i, j, k):
    s = i + j + k
    den = 6 * 36**s * (math.factorial(i) * math.factorial(j) * math.factorial(k)) ** 2
    return Fraction(math.factorial(2 * s), den)


def _exact_variance_2d(n, m):
    return sum((_exact_f(i, j) for i in range(n) for j in range(m)), Fraction(0))


def _exact_variance_3d(n, m, l):
    return sum(
        (_exact_g(i, j, k) for i in range(n) for j in range(m) for k in range(l)), Fraction(0)
    )


# ---------------------------------------------------------------------------
# 2D / 3D single points
# ---------------------------------------------------------------------------


def variance_2d(n, m, exact=None):
    """Variance of the follower in row ``n``, column ``m`` of the directed 2D lattice."""
    n, m = _positive(n, m)
    if exact or (exact is None and max(n, m) <= AUTO_EXACT_LIMIT):
        value = _exact_variance_2d(n, m)
        return value if exact else float(value)
    n, m = min(n, m), max(n, m)
    terms = []
    for s, u, b in _binomial_rows(n + m - 2, n):
        lo, hi = max(0, s - (m - 1)), min(s, n - 1)
        terms.append(0.25 * u * b[lo : hi + 1] ** 2)
    return math.fsum(np.concatenate(terms))


def variance_3d(n, m, l, exact=None):
    """Variance of the follower at ``(n, m, l)`` of the directed 3D lattice."""
    n, m, l = _positive(n, m, l)
    if exact or (exact is None and max(n, m, l) <= AUTO_EXACT_LIMIT):
        value = _exact_variance_3d(n, m, l)
        return value if exact else float(value)
    n, m, l = sorted((n, m, l))
    i, j = np.indices((n, m))
    ij = i + j
    terms = []
    for p, u, t in _trinomial_layers(n + m + l - 3, n, m):
        k = p - ij
        sel = (k >= 0) & (k < l)
        terms.append(u / 6.0 * t[sel] ** 2)
    return math.fsum(np.concatenate(terms))


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------


def _summand_grid(spec):
    N, dim = spec.side, spec.dimension
    if dim == 1:
        return 0.5 * return_prob_series(1, N - 1).values
    if dim == 2:
        grid = np.zeros((N, N))
        for s, u, b in _binomial_rows(2 * N - 2, N):
            lo, hi = max(0, s - (N - 1)), min(s, N - 1)
            i = np.arange(lo, hi + 1)
            grid[i, s - i] = 0.25 * u * b[lo : hi + 1] ** 2
        return grid
    grid = np.zeros((N, N, N))
    i, j = np.indices((N, N))
    ij = i + j
    for p, u, t in _trinomial_layers(3 * N - 3, N, N):
        k = p - ij
        sel = (k >= 0) & (k < N)
        grid[i[sel], j[sel], k[sel]] = u / 6.0 * t[sel] ** 2
    return grid


def _exact_summand_grid(spec):
    N, dim = spec.side, spec.dimension
    grid = np.empty(spec.shape, dtype=object)
    for offs in np.ndindex(*spec.shape):
        if dim == 1:
            grid[offs] = exact_central_binomial_scaled(offs[0]) / 2
        elif dim == 2:
            grid[offs] = _exact_f(*offs)
        else:
            grid[offs] = _exact_g(*offs)
    return grid


def variance_field(spec, mode="auto"):
    """Variances of all followers of ``spec`` in one pass.

    ``mode`` is ``"float"``, ``"exact"`` (Fraction-valued field) or
    ``"auto"`` (exact arithmetic rounded once when ``N <= AUTO_EXACT_LIMIT``).
    Cost is ``O(N**D)`` summands plus ``D`` prefix-sum sweeps.
    """
    if not isinstance(spec, LatticeSpec):
        spec = LatticeSpec(*spec)
    if spec.size > FIELD_LIMIT:
        raise ValueError(f"lattice has {spec.size} followers, limit is {FIELD_LIMIT}")
    if mode not in ("auto", "float", "exact"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact" or (mode == "auto" and spec.side <= AUTO_EXACT_LIMIT):
        values = _exact_summand_grid(spec)
        for axis in range(spec.dimension):
            values = np.cumsum(values, axis=axis)
        if mode == "auto":
            values = values.astype(float)
        return VarianceField(spec, values)
    values = _summand_grid(spec)
    for axis in range(spec.dimension):
        values = compensated_cumsum(values, axis=axis)
    return VarianceField(spec, values.reshape(spec.shape))


def diagonal_variances(dimension, n_max):
    """``V_n`` at the diagonal follower ``(n, ..., n)`` for ``n = 1..n_max``.

    The summands in the cube ``[0, n_max)**D`` are binned by their largest
    offset, so ``V_n`` is the prefix sum of the bins; this costs
    ``O(n_max**D)`` work and ``O(n_max**(D-1))`` memory.
    """
    (n_max,) = _positive(n_max)
    if dimension == 1:
        return variance_1d_series(n_max)
    bins = Accumulator(n_max)
    if dimension == 2:
        for s, u, b in _binomial_rows(2 * n_max - 2, n_max):
            lo, hi = max(0, s - (n_max - 1)), min(s, n_max - 1)
            i = np.arange(lo, hi + 1)
            key = np.maximum(i, s - i)
            bins.add(np.bincount(key, weights=0.25 * u * b[lo : hi + 1] ** 2, minlength=n_max))
    elif dimension == 3:
        i, j = np.indices((n_max, n_max))
        ij = i + j
        mij = np.maximum(i, j)
        for p, u, t in _trinomial_layers(3 * n_max - 3, n_max, n_max):
            k = p - ij
            sel = (k >= 0) & (k < n_max)
            key = np.maximum(mij[sel], k[sel])
            bins.add(np.bincount(key, weights=u / 6.0 * t[sel] ** 2, minlength=n_max))
    else:
        raise ValueError(f"dimension must be 1, 2 or 3, got {dimension!r}")
    return compensated_cumsum(bins.value)
