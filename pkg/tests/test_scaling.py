import math
from fractions import Fraction

import numpy as np
import pytest

from leadfollow.closedform import diagonal_variances
from leadfollow.combinatorics import exact_return_prob, return_prob, return_prob_series
from leadfollow.scaling import (
    PI_LIMIT_1D,
    SQRT_PI_INV,
    antidiagonal_sum_2d,
    fit_scaling,
    increment_exponent_3d,
    limit_check_1d,
    log_law_offsets_2d,
    pyramid_limit_3d,
    pyramid_slice_bound_3d,
    pyramid_slice_sum_3d,
    pyramid_sum_3d,
    sandwich_2d,
    sandwich_3d,
    sandwich_reports_2d,
    sandwich_reports_3d,
    slice_constant_3d,
    table_structure,
    triangle_sum_2d,
    undirected_reference_1d,
)


def test_limit_constants():
    assert SQRT_PI_INV == pytest.approx(0.564190, abs=1e-6)
    assert PI_LIMIT_1D == pytest.approx(0.376126, abs=1e-6)


def test_limit_check_1d():
    t = limit_check_1d(10**4)
    first = t["variance"]["rows"][0]
    assert first[0] == 1 and first[1] == 0.5 and first[2] == pytest.approx(0.0642, abs=1e-4)
    assert t["variance"]["rows"][-1][0] == 10**4
    assert t["variance"]["rows"][-1][2] <= 1e-4
    assert t["normalized_total"]["rows"][-1][2] <= 1e-4
    assert t["variance"]["monotone_after_100"] and t["normalized_total"]["monotone_after_100"]
    with pytest.raises(ValueError):
        limit_check_1d(5)


def test_antidiagonal_examples():
    for k, expected in [(0, 0.25), (1, 0.0625), (2, 0.03515625)]:
        s = antidiagonal_sum_2d(k)
        assert s.direct == pytest.approx(expected, rel=1e-14)
        assert s.closed == pytest.approx(expected, rel=1e-14)


def test_antidiagonal_exact_identity():
    for k in range(31):
        s = antidiagonal_sum_2d(k, exact=True)
        assert s.direct == s.closed == exact_return_prob(2, k) / 4


def test_antidiagonal_float_routes_agree():
    for k in (10, 100, 1000):
        s = antidiagonal_sum_2d(k)
        assert s.direct == pytest.approx(s.closed, rel=1e-11)


def test_triangle_examples():
    assert triangle_sum_2d(1) == 0.25
    assert triangle_sum_2d(2) == 0.3125
    diff = triangle_sum_2d(200) - triangle_sum_2d(100)
    assert diff == pytest.approx(math.log(2) / (4 * math.pi), rel=0.05)


def test_sandwich_2d_examples():
    r = sandwich_2d(1)
    assert (r.lower, r.middle, r.upper) == (0.25, 0.25, 0.3125) and r.holds
    r = sandwich_2d(2)
    assert (r.lower, r.middle) == (0.3125, 0.3359375)
    assert r.upper == pytest.approx(triangle_sum_2d(4)) and r.holds
    assert sandwich_2d(10).holds


def test_sandwich_reports_2d_match_pointwise():
    reports = sandwich_reports_2d(30)
    for n in (1, 2, 17, 30):
        p = sandwich_2d(n)
        r = reports[n - 1]
        assert r.lower == pytest.approx(p.lower, rel=1e-14)
        assert r.middle == pytest.approx(p.middle, rel=1e-14)
        assert r.upper == pytest.approx(p.upper, rel=1e-14)


def test_log_law_offsets_bounded():
    off = log_law_offsets_2d(2000)
    assert off[0] == 0.25
    assert 0.2 < off.min() and off.max() < 0.35


def test_pyramid_slice_examples():
    assert pyramid_slice_sum_3d(0).direct == pytest.approx(1 / 6)
    assert pyramid_slice_sum_3d(1).closed == pytest.approx(1 / 36)
    s = pyramid_slice_sum_3d(5)
    assert abs(s.direct - return_prob(3, 5) / 6) <= 1e-12
    assert abs(s.closed - return_prob(3, 5) / 6) <= 1e-12


def test_pyramid_slice_exact_identity():
    for p in range(16):
        s = pyramid_slice_sum_3d(p, exact=True)
        assert s.direct == s.closed


def test_slice_bound():
    G = return_prob_series(3, 200).values / 6
    for p in range(201):
        assert G[p] <= pyramid_slice_bound_3d(p) * (1 + 1e-12)


def test_pyramid_sum_examples():
    assert pyramid_sum_3d(1) == pytest.approx(1 / 6)
    assert pyramid_sum_3d(2) == pytest.approx(1 / 6 + 1 / 36)
    assert pyramid_sum_3d(2 * 10**4) - pyramid_sum_3d(10**4) <= 1e-3


def test_pyramid_limit_tail():
    c = slice_constant_3d()
    assert c > 0
    G = return_prob_series(3, 200).values / 6
    p = np.arange(50, 201)
    # the fitted power law follows the slices closely on the fit window
    assert np.max(np.abs(G[50:] / (c * p**-1.5) - 1)) < 0.02
    lim = pyramid_limit_3d(10**4)
    assert lim["limit_estimate"] > lim["T_n"]
    assert lim["tail"] == pytest.approx(2 * c / math.sqrt(10**4 - 1))


def test_sandwich_3d_lower_bound_and_corrected_upper():
    assert sandwich_3d(1).holds
    r = sandwich_3d(1)
    assert r.lower == pytest.approx(1 / 6) and r.middle == pytest.approx(1 / 6)
    assert all(r.holds for r in sandwich_reports_3d(50, upper="3n-2"))
    assert all(r.lower < r.middle for r in sandwich_reports_3d(50)[1:])


def test_sandwich_3d_2n_upper_fails_from_five():
    # the cube reaches index sum 3n - 3, beyond the size-2n pyramid
    reports = sandwich_reports_3d(15)
    assert [r.n for r in reports if not r.holds] == list(range(5, 16))
    assert not sandwich_3d(5).holds


def test_increment_fit():
    fit = increment_exponent_3d((10, 50))
    assert fit.model == "power_fit" and fit.fit_range == (10, 50)
    assert -1.7 < fit.coefficients[1] < -1.5
    # the local exponent drifts towards -3/2 on larger windows
    V = diagonal_variances(3, 200)
    assert abs(increment_exponent_3d((100, 200), V=V).coefficients[1] + 1.5) < 0.05


def test_fit_scaling_examples():
    n = np.arange(1, 51)
    fit = fit_scaling(n, diagonal_variances(2, 50), "log_fit", (1, 50))
    a, b = fit.coefficients
    assert 0.075 <= a <= 0.092 and 0.27 <= b <= 0.33
    n = np.arange(1, 10**4 + 1)
    p = fit_scaling(n, diagonal_variances(1, 10**4), "power_fit").coefficients[1]
    assert 0.48 <= p <= 0.52
    with pytest.raises(ValueError, match="singular"):
        fit_scaling(np.full(5, 3.0), np.ones(5), "log_fit")


def test_fit_scaling_recovers_exact_models():
    n = np.arange(1, 40, dtype=float)
    assert fit_scaling(n, 2 * np.log(n) + 1, "log_fit").coefficients == pytest.approx((2, 1))
    assert fit_scaling(n, 3 * np.sqrt(n), "sqrt_fit").coefficients == pytest.approx((3,))
    fit = fit_scaling(n, 0.5 * n**-1.5, "power_fit")
    assert fit.coefficients == pytest.approx((0.5, -1.5)) and fit.residual_rms < 1e-12


def test_fit_scaling_rejects():
    with pytest.raises(ValueError):
        fit_scaling([1, 2], [1, 2], "log_fit")
    with pytest.raises(ValueError):
        fit_scaling([1, 2, 3], [1, 2, 3], "cubic")
    with pytest.raises(ValueError):
        fit_scaling([1, 2, 3], [1, -2, 3], "power_fit")


def test_undirected_reference():
    np.testing.assert_array_equal(undirected_reference_1d([1, 2, 50]), [0.5, 1.0, 25.0])


def test_table_structure_flags():
    M = np.add.outer(np.arange(5), np.arange(5)) * 0.0 + 0.1
    M = M + 0.01 * np.sqrt(np.add.outer(np.arange(5), np.arange(5)))
    t = table_structure(M)
    assert t["rows_nondecreasing"] and t["columns_flattening"] and t["bounded"]
    t = table_structure(M[::-1])
    assert not t["columns_nondecreasing"]
