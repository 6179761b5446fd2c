"""Directed lattices with a virtual leader and their grounded Laplacians.

Followers sit on the grid ``{1..N}**D``.  Every follower listens to its
predecessor along each axis; a follower with a ``1`` in some axis listens to
the leader instead, whose state is identically zero and is therefore not
stored.  The resulting matrix ``L`` (with closed loop ``dx = -L x dt + dW``)
has ``D`` on the diagonal and ``-1`` at each in-neighbour.

Linearisation is row-major with axis 1 outermost: coordinate ``(c_1, ..., c_D)``
maps to ``sum_a (c_a - 1) * N**(D - a)``.  For D = 2 this stacks the lattice
row by row, so ``L`` is block lower-triangular Toeplitz with ``K_2`` on the
diagonal and ``-I`` below it.  Stored indices are 0-based; the public
coordinate/index helpers are 1-based.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "LatticeSpec",
    "ModifiedLaplacian",
    "build_laplacian",
    "coordinate_to_index",
    "degree_of",
    "index_to_coordinate",
]


@dataclass(frozen=True)
class LatticeSpec:
    """``dimension`` in {1, 2, 3} and ``side`` length ``N``."""

    dimension: int
    side: int

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dimension!r}")
        if isinstance(self.side, bool) or int(self.side) != self.side or self.side < 1:
            raise ValueError(f"side must be a positive integer, got {self.side!r}")

    @property
    def size(self):
        """Number of followers, ``N**D``."""
        return self.side**self.dimension

    @property
    def shape(self):
        return (self.side,) * self.dimension

    @property
    def strides(self):
        # index offset of one step along each axis (axis 1 outermost)
        return tuple(self.side ** (self.dimension - 1 - a) for a in range(self.dimension))

    def coordinates(self):
        """All 1-based coordinates as an ``(N**D, D)`` integer array, in index order."""
        grids = np.indices(self.shape).reshape(self.dimension, -1).T
        return grids + 1


def _check_coordinate(spec, coord):
    coord = tuple(int(c) for c in np.atleast_1d(coord))
    if len(coord) != spec.dimension:
        raise ValueError(f"expected {spec.dimension} coordinates, got {len(coord)}")
    if any(c < 1 or c > spec.side for c in coord):
        raise ValueError(f"coordinate {coord} outside 1..{spec.side}")
    return coord


def coordinate_to_index(spec, coord):
    """1-based linear index of a 1-based lattice coordinate."""
    coord = _check_coordinate(spec, coord)
    return 1 + sum((c - 1) * s for c, s in zip(coord, spec.strides))


def index_to_coordinate(spec, index):
    """Inverse of :func:`coordinate_to_index`."""
    if not 1 <= index <= spec.size:
        raise ValueError(f"index {index} outside 1..{spec.size}")
    rest = index - 1
    coord = []
    for s in spec.strides:
        q, rest = divmod(rest, s)
        coord.append(q + 1)
    return tuple(coord)


def degree_of(spec, coord):
    """Diagonal gain of a follower.

    Always ``D``: a follower on the boundary loses an in-neighbour but gains
    the leader in its place, so the diagonal of ``L`` stays uniform.
    """
    _check_coordinate(spec, coord)
    return spec.dimension


@dataclass(frozen=True, eq=False)
class ModifiedLaplacian:
    """Sparse lower-triangular grounded Laplacian in sorted triplet form.

    ``rows``, ``cols`` and ``values`` are 0-based, sorted by ``(row, col)``.
    """

    spec: LatticeSpec
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    @property
    def size(self):
        return self.spec.size

    @property
    def nnz(self):
        return self.values.size

    def diagonal(self):
        d = np.zeros(self.size)
        on = self.rows == self.cols
        d[self.rows[on]] = self.values[on]
        return d

    def to_sparse(self):
        return sp.csr_array((self.values, (self.rows, self.cols)), shape=(self.size, self.size))

    def to_dense(self):
        return self.to_sparse().toarray()

    def predecessors(self):
        """In-neighbour table of shape ``(size, width)`` and the weights on those edges.

        ``width`` is the largest number of strictly-lower entries in a row (``D``
        for a lattice).  Missing neighbours (leader edges) point to the sentinel
        index ``size`` with weight zero, so callers can gather from a
        zero-padded array.
        """
        n = self.size
        off = self.rows != self.cols
        r, c, v = self.rows[off], self.cols[off], self.values[off]
        counts = np.bincount(r, minlength=n)
        width = max(int(counts.max()) if r.size else 0, 1)
        pred = np.full((n, width), n, dtype=np.intp)
        weight = np.zeros((n, width))
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        slot = np.arange(r.size) - starts[r]
        pred[r, slot] = c
        weight[r, slot] = -v
        return pred, weight

    def export_coo(self, target):
        """Write ``row col value`` triples, 1-based, one per line.

        ``target`` is a path or a text stream.
        """
        lines = "".join(
            f"{r + 1} {c + 1} {v:.17g}\n" for r, c, v in zip(self.rows, self.cols, self.values)
        )
        if isinstance(target, (str, os.PathLike)):
            with open(target, "w") as fh:
                fh.write(lines)
        else:
            target.write(lines)

    def to_coo_text(self):
        buf = io.StringIO()
        self.export_coo(buf)
        return buf.getvalue()


def build_laplacian(spec):
    """Grounded Laplacian ``L`` of the directed lattice described by ``spec``."""
    if not isinstance(spec, LatticeSpec):
        spec = LatticeSpec(*spec)
    n, dim = spec.size, spec.dimension
    coords = spec.coordinates()
    idx = np.arange(n)
    rows = [idx]
    cols = [idx]
    vals = [np.full(n, float(dim))]
    for a, stride in enumerate(spec.strides):
        has_pred = coords[:, a] > 1
        rows.append(idx[has_pred])
        cols.append(idx[has_pred] - stride)
        vals.append(np.full(int(has_pred.sum()), -1.0))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    order = np.lexsort((cols, rows))
    return ModifiedLaplacian(spec, rows[order], cols[order], vals[order])
