import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leadfollow.closedform import (
    diagonal_variances,
    normalized_total_1d,
    normalized_total_1d_closed,
    variance_1d,
    variance_1d_product,
    variance_1d_series,
    variance_2d,
    variance_3d,
    variance_field,
)
from leadfollow.combinatorics import exact_central_binomial_scaled
from leadfollow.lattice import LatticeSpec


@pytest.mark.parametrize("n, expected", [(1, 0.5), (2, 0.75), (3, 0.9375)])
def test_variance_1d_examples(n, expected):
    assert variance_1d(n) == expected


@pytest.mark.parametrize("N, expected", [(1, 0.5), (2, 0.625), (3, 35 / 48)])
def test_normalized_total_examples(N, expected):
    assert normalized_total_1d(N) == pytest.approx(expected, rel=1e-15)
    assert normalized_total_1d_closed(N) == pytest.approx(expected, rel=1e-15)


def test_1d_recurrence_exact():
    for n in range(2, 61):
        diff = variance_1d(n, exact=True) - variance_1d(n - 1, exact=True)
        assert diff == exact_central_binomial_scaled(n - 1) / 2


def test_1d_sum_equals_product_exact():
    for n in range(1, 61):
        assert variance_1d(n, exact=True) == variance_1d_product(n, exact=True)
        ref = Fraction(n * math.factorial(2 * n), 4**n * math.factorial(n) ** 2)
        assert variance_1d(n, exact=True) == ref


@pytest.mark.parametrize("n", [1, 10, 100, 1000, 10**4])
def test_1d_sum_vs_product_float(n):
    assert abs(variance_1d(n) / variance_1d_product(n) - 1) <= 1e-11


def test_pi_consistency():
    N = 10**4
    V = variance_1d_series(N)
    for k in (1, 10, 999, N):
        assert abs(normalized_total_1d(k) * k / math.fsum(V[:k]) - 1) <= 1e-11
        assert abs(normalized_total_1d(k) / normalized_total_1d_closed(k) - 1) <= 1e-11


@pytest.mark.parametrize("n, m, expected", [(1, 1, 0.25), (1, 2, 0.28125), (2, 2, 0.3359375)])
def test_variance_2d_examples(n, m, expected):
    assert variance_2d(n, m) == expected


def test_variance_3d_examples():
    assert variance_3d(1, 1, 1, exact=True) == Fraction(1, 6)
    assert variance_3d(2, 1, 1, exact=True) == Fraction(1, 6) + Fraction(1, 108)
    # 8-term sum over offsets in {0,1}^3, evaluated independently
    total = Fraction(0)
    for i, j, k in itertools.product(range(2), repeat=3):
        p = i + j + k
        total += Fraction(math.factorial(2 * p), 6 * 6 ** (2 * p)
                          * (math.factorial(i) * math.factorial(j) * math.factorial(k)) ** 2)
    assert variance_3d(2, 2, 2, exact=True) == total


def test_2d_float_matches_exact_beyond_auto_range():
    for n, m in [(25, 30), (21, 40), (40, 40)]:
        assert variance_2d(n, m, exact=False) == pytest.approx(float(variance_2d(n, m, exact=True)), rel=1e-14)


def test_3d_float_matches_exact_beyond_auto_range():
    ref = float(variance_3d(22, 23, 21, exact=True))
    assert variance_3d(22, 23, 21, exact=False) == pytest.approx(ref, rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40))
def test_2d_symmetry(n, m):
    assert variance_2d(n, m) == variance_2d(m, n)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 15), st.integers(1, 15), st.integers(1, 15))
def test_3d_symmetry(n, m, l):
    values = {variance_3d(*p) for p in itertools.permutations((n, m, l))}
    assert len(values) == 1


def test_field_examples():
    np.testing.assert_array_equal(variance_field(LatticeSpec(1, 3)).values, [0.5, 0.75, 0.9375])
    f = variance_field(LatticeSpec(2, 2))
    assert f[1, 1] == 0.25 and f[1, 2] == 0.28125 and f[2, 1] == 0.28125 and f[2, 2] == 0.3359375
    assert variance_field(LatticeSpec(3, 1))[1, 1, 1] == 1 / 6


def test_exact_field():
    f = variance_field(LatticeSpec(2, 2), mode="exact")
    assert f.exact and f[2, 2] == Fraction(43, 128)


@pytest.mark.parametrize("d, n", [(2, 50), (3, 15)])
def test_field_monotone_along_axes(d, n):
    V = variance_field(LatticeSpec(d, n), mode="float").values
    assert np.all(V > 0)
    for axis in range(d):
        assert np.all(np.diff(V, axis=axis) >= 0)


@pytest.mark.parametrize("d, n", [(2, 30), (3, 25)])
def test_field_float_matches_points(d, n):
    f = variance_field(LatticeSpec(d, n), mode="float")
    rng = np.random.default_rng(d)
    for coord in rng.integers(1, n + 1, size=(10, d)):
        point = variance_2d(*coord) if d == 2 else variance_3d(*coord)
        assert f[tuple(coord)] == pytest.approx(point, rel=1e-14)


@pytest.mark.parametrize("d, n", [(1, 500), (2, 40), (3, 20)])
def test_diagonal_variances_matches_field(d, n):
    f = variance_field(LatticeSpec(d, n), mode="float")
    np.testing.assert_allclose(diagonal_variances(d, n), f.diagonal(), rtol=1e-14)


def test_field_guard():
    with pytest.raises(ValueError):
        variance_field(LatticeSpec(3, 216))


def test_rejects_non_positive_index():
    with pytest.raises(ValueError):
        variance_1d(0)
    with pytest.raises(ValueError):
        variance_2d(1, 0)
