"""Oriented simplicial complexes with boundary.

Simplices of every degree are stored as lexicographically sorted rows of
sorted vertex indices. The orientation of a k-simplex is the one induced by
its sorted vertex order; top-dimensional cells additionally carry a sign
relative to an ambient orientation (used when integrating n-cochains).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np
import scipy.sparse as sp


def encode_rows(rows: np.ndarray, base: int) -> np.ndarray:
    """Integer keys preserving the lexicographic order of sorted rows."""
    rows = np.asarray(rows, dtype=np.int64)
    width = rows.shape[1]
    if float(base) ** width >= 2.0**62:
        raise ValueError("complex too large for int64 simplex keys")
    keys = np.zeros(rows.shape[0], dtype=np.int64)
    for j in range(width):
        keys = keys * base + rows[:, j]
    return keys


@dataclass(frozen=True)
class Chain:
    """Integer chain supported on the k-simplices of a complex."""

    degree: int
    coefficients: np.ndarray

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coefficients)


class SimplicialComplex:
    """Pure oriented simplicial n-complex, 2 <= n <= 4.

    Parameters
    ----------
    cells : (N, n+1) integer array of vertex indices of the top simplices.
    n_vertices : total number of vertices (defaults to ``cells.max() + 1``).
    orientation : optional +-1 per cell (in the input cell order) giving the
        sign of the sorted vertex order relative to an ambient orientation.
    """

    def __init__(self, cells, n_vertices: int | None = None, orientation=None):
        cells = np.asarray(cells, dtype=np.int64)
        if cells.ndim != 2 or cells.shape[1] < 3 or cells.shape[1] > 5:
            raise ValueError("cells must be an (N, n+1) array with 2 <= n <= 4")
        n = cells.shape[1] - 1
        if np.any(np.diff(np.sort(cells, axis=1), axis=1) == 0):
            raise ValueError("cell with repeated vertex")
        order = np.argsort(cells, axis=1, kind="stable")
        sorted_cells = np.take_along_axis(cells, order, axis=1)
        if orientation is None:
            orientation = np.ones(len(cells), dtype=np.int64)
        orientation = np.asarray(orientation, dtype=np.int64)
        keys = encode_rows(sorted_cells, int(sorted_cells.max()) + 1)
        uniq, first = np.unique(keys, return_index=True)
        if len(uniq) != len(keys):
            raise ValueError("duplicate cells")
        sorted_cells = sorted_cells[first]
        orientation = orientation[first]

        self.dimension = n
        self.n_vertices = int(n_vertices if n_vertices is not None else sorted_cells.max() + 1)
        self.cell_orientation = orientation
        # permutation from input cell order to canonical order
        self.input_order = first

        self._simplices: list[np.ndarray] = []
        self._cell_faces: list[np.ndarray] = []
        for k in range(n + 1):
            combos = list(combinations(range(n + 1), k + 1))
            faces = sorted_cells[:, combos].reshape(-1, k + 1)
            fkeys = encode_rows(faces, self.n_vertices)
            ukeys, inverse = np.unique(fkeys, return_inverse=True)
            simplices = np.empty((len(ukeys), k + 1), dtype=np.int64)
            simplices[inverse] = faces
            if k == 0:
                # isolated vertices are not allowed; vertex k-simplices are 0..N0-1
                if len(ukeys) != self.n_vertices:
                    raise ValueError("every vertex must belong to a cell")
            self._simplices.append(simplices)
            self._cell_faces.append(inverse.reshape(len(sorted_cells), len(combos)))
        self._keys = [encode_rows(s, self.n_vertices) for s in self._simplices]

        cofaces = self.coface_counts
        if np.any((cofaces < 1) | (cofaces > 2)):
            raise ValueError("non-manifold: an (n-1)-simplex has more than two cofaces")

    # ------------------------------------------------------------------ basics
    def simplices(self, k: int) -> np.ndarray:
        return self._simplices[k]

    def count(self, k: int) -> int:
        return len(self._simplices[k])

    @property
    def cells(self) -> np.ndarray:
        return self._simplices[self.dimension]

    @property
    def f_vector(self) -> tuple[int, ...]:
        return tuple(self.count(k) for k in range(self.dimension + 1))

    @property
    def euler_characteristic(self) -> int:
        return int(sum((-1) ** k * c for k, c in enumerate(self.f_vector)))

    def cell_faces(self, k: int) -> np.ndarray:
        """Global indices of the k-faces of every cell, in local combination order."""
        return self._cell_faces[k]

    def index(self, k: int, rows) -> np.ndarray:
        """Indices of the given k-simplices (rows of vertex ids, any order)."""
        rows = np.sort(np.atleast_2d(np.asarray(rows, dtype=np.int64)), axis=1)
        keys = encode_rows(rows, self.n_vertices)
        pos = np.searchsorted(self._keys[k], keys)
        pos = np.minimum(pos, len(self._keys[k]) - 1)
        if np.any(self._keys[k][pos] != keys):
            raise KeyError("simplex not in complex")
        return pos

    def contains(self, k: int, rows) -> np.ndarray:
        rows = np.sort(np.atleast_2d(np.asarray(rows, dtype=np.int64)), axis=1)
        keys = encode_rows(rows, self.n_vertices)
        pos = np.minimum(np.searchsorted(self._keys[k], keys), len(self._keys[k]) - 1)
        return self._keys[k][pos] == keys

    # --------------------------------------------------------------- operators
    @cached_property
    def _boundaries(self) -> list[sp.csr_matrix]:
        mats = [sp.csr_matrix((0, self.n_vertices), dtype=np.int64)]
        for k in range(1, self.dimension + 1):
            s = self._simplices[k]
            rows, cols, vals = [], [], []
            for i in range(k + 1):
                face = np.delete(s, i, axis=1)
                rows.append(self.index(k - 1, face))
                cols.append(np.arange(len(s)))
                vals.append(np.full(len(s), (-1) ** i, dtype=np.int64))
            mats.append(
                sp.csr_matrix(
                    (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                    shape=(self.count(k - 1), self.count(k)),
                )
            )
        return mats

    def boundary_matrix(self, k: int) -> sp.csr_matrix:
        """Integer incidence matrix of the boundary map from k- to (k-1)-chains."""
        if not 1 <= k <= self.dimension:
            raise ValueError(f"boundary matrix undefined for degree {k}")
        return self._boundaries[k]

    def incidence(self, k: int) -> sp.csr_matrix:
        """0/1 matrix (k-simplices x cells), 1 where the simplex lies in the cell."""
        cf = self._cell_faces[k]
        n_cells, m = cf.shape
        return sp.csr_matrix(
            (np.ones(cf.size, dtype=np.int64), (cf.ravel(), np.repeat(np.arange(n_cells), m))),
            shape=(self.count(k), n_cells),
        )

    @cached_property
    def coface_counts(self) -> np.ndarray:
        """Number of n-cofaces of each (n-1)-simplex."""
        return np.bincount(self._cell_faces[self.dimension - 1].ravel(),
                           minlength=self.count(self.dimension - 1))

    @cached_property
    def _boundary_masks(self) -> list[np.ndarray]:
        n = self.dimension
        top = self.coface_counts == 1
        masks = [np.zeros(self.count(k), dtype=bool) for k in range(n + 1)]
        masks[n - 1] = top
        faces = self._simplices[n - 1][top]
        for k in range(n - 1):
            for combo in combinations(range(n), k + 1):
                if len(faces):
                    masks[k][self.index(k, faces[:, combo])] = True
        return masks

    def boundary_mask(self, k: int) -> np.ndarray:
        """Flags of k-simplices contained in the boundary subcomplex."""
        return self._boundary_masks[k]

    @property
    def is_closed(self) -> bool:
        return not self._boundary_masks[self.dimension - 1].any()

    @cached_property
    def lowest_coface(self) -> list[np.ndarray]:
        """Lowest-index cell containing each k-simplex, per degree."""
        out = []
        for k in range(self.dimension + 1):
            cf = self._cell_faces[k]
            low = np.full(self.count(k), np.iinfo(np.int64).max, dtype=np.int64)
            np.minimum.at(low, cf.ravel(), np.repeat(np.arange(cf.shape[0]), cf.shape[1]))
            out.append(low)
        return out

    def boundary_complex(self) -> tuple["SimplicialComplex", np.ndarray]:
        """The boundary as an (n-1)-complex, with the map new vertex -> old vertex."""
        n = self.dimension
        if n - 1 < 2:
            raise ValueError("boundary of a 2-complex is a graph; use boundary_mask(1) and simplices(1)")
        faces = self._simplices[n - 1][self.boundary_mask(n - 1)]
        old = np.unique(faces)
        relabel = np.full(self.n_vertices, -1, dtype=np.int64)
        relabel[old] = np.arange(len(old))
        return SimplicialComplex(relabel[faces]), old

    def components(self, k: int = 0) -> int:
        """Connected components of the 1-skeleton (k=0)."""
        from scipy.sparse.csgraph import connected_components

        e = self._simplices[1]
        adj = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])),
                            shape=(self.n_vertices, self.n_vertices))
        return int(connected_components(adj, directed=False)[0])

    def boundary_components(self) -> int:
        """Connected components of the boundary subcomplex."""
        from scipy.sparse.csgraph import connected_components

        vmask = self.boundary_mask(0)
        e = self._simplices[1][self.boundary_mask(1)]
        idx = np.flatnonzero(vmask)
        if len(idx) == 0:
            return 0
        relabel = np.full(self.n_vertices, -1)
        relabel[idx] = np.arange(len(idx))
        adj = sp.coo_matrix((np.ones(len(e)), (relabel[e[:, 0]], relabel[e[:, 1]])),
                            shape=(len(idx), len(idx)))
        return int(connected_components(adj, directed=False)[0])

    def __repr__(self) -> str:
        return f"SimplicialComplex(n={self.dimension}, f={self.f_vector})"
