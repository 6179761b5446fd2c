import numpy as np
import pytest
from hypothesis import given, strategies as st

from leadfollow.lattice import (
    LatticeSpec,
    build_laplacian,
    coordinate_to_index,
    degree_of,
    index_to_coordinate,
)


def test_1d_two_followers():
    np.testing.assert_array_equal(build_laplacian(LatticeSpec(1, 2)).to_dense(), [[1, 0], [-1, 1]])


def test_2d_single_follower():
    np.testing.assert_array_equal(build_laplacian(LatticeSpec(2, 1)).to_dense(), [[2]])


def test_3d_side_two_against_hand_matrix():
    L = build_laplacian(LatticeSpec(3, 2)).to_dense()
    expected = 3.0 * np.eye(8)
    # node index = 4(c1-1) + 2(c2-1) + (c3-1); predecessors at offsets 4, 2, 1
    for i in range(8):
        c1, c2, c3 = i >> 2 & 1, i >> 1 & 1, i & 1
        if c1:
            expected[i, i - 4] = -1
        if c2:
            expected[i, i - 2] = -1
        if c3:
            expected[i, i - 1] = -1
    np.testing.assert_array_equal(L, expected)


def test_rejects_bad_side():
    with pytest.raises(ValueError):
        LatticeSpec(2, 0)
    with pytest.raises(ValueError):
        LatticeSpec(4, 2)


def test_coordinate_examples():
    assert coordinate_to_index(LatticeSpec(2, 3), (1, 1)) == 1
    assert coordinate_to_index(LatticeSpec(2, 3), (2, 1)) == 4
    assert coordinate_to_index(LatticeSpec(3, 2), (2, 2, 2)) == 8
    with pytest.raises(ValueError):
        coordinate_to_index(LatticeSpec(2, 3), (4, 1))


@given(st.integers(1, 3), st.integers(1, 6), st.data())
def test_index_round_trip(d, n, data):
    spec = LatticeSpec(d, n)
    k = data.draw(st.integers(1, spec.size))
    assert coordinate_to_index(spec, index_to_coordinate(spec, k)) == k


def test_degree_examples():
    assert degree_of(LatticeSpec(1, 5), (3,)) == 1
    assert degree_of(LatticeSpec(2, 5), (1, 1)) == 2
    assert degree_of(LatticeSpec(3, 5), (4, 4, 4)) == 3


@pytest.mark.parametrize("d, n", [(1, 7), (2, 5), (3, 4)])
def test_structure(d, n):
    spec = LatticeSpec(d, n)
    lap = build_laplacian(spec)
    L = lap.to_dense()
    assert lap.size == n**d
    assert np.all(lap.rows >= lap.cols)
    order = np.lexsort((lap.cols, lap.rows))
    np.testing.assert_array_equal(order, np.arange(lap.nnz))
    np.testing.assert_array_equal(np.diag(L), d)
    off = L - np.diag(np.diag(L))
    assert set(np.unique(off)) <= {0.0, -1.0}
    coords = spec.coordinates()
    leader_edges = np.sum(coords == 1, axis=1)
    np.testing.assert_array_equal(L.sum(axis=1), leader_edges)
    np.testing.assert_array_equal(-off.sum(axis=1), d - leader_edges)


def test_2d_block_toeplitz():
    n = 4
    L = build_laplacian(LatticeSpec(2, n)).to_dense()
    blocks = [[L[a * n:(a + 1) * n, b * n:(b + 1) * n] for b in range(n)] for a in range(n)]
    for a in range(n):
        np.testing.assert_array_equal(blocks[a][a], blocks[0][0])
        if a:
            np.testing.assert_array_equal(blocks[a][a - 1], -np.eye(n))
    np.testing.assert_array_equal(blocks[0][0], 2 * np.eye(n) - np.eye(n, k=-1))


def test_coo_export(tmp_path):
    lap = build_laplacian(LatticeSpec(1, 2))
    assert lap.to_coo_text() == "1 1 1\n2 1 -1\n2 2 1\n"
    path = tmp_path / "L.txt"
    lap.export_coo(path)
    assert path.read_text() == lap.to_coo_text()


def test_predecessors_table():
    lap = build_laplacian(LatticeSpec(2, 2))
    pred, w = lap.predecessors()
    assert pred.shape == (4, 2)
    # node (2,2) has index 3 and listens to (1,2) and (2,1)
    assert sorted(pred[3]) == [1, 2]
    # node (1,1) listens only to the leader: both slots hit the sentinel
    assert list(pred[0]) == [4, 4] and list(w[0]) == [0, 0]
