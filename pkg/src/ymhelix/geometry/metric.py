"""Piecewise-flat metric data: primal volumes and barycentric dual volumes."""
from __future__ import annotations

from functools import cached_property
from itertools import combinations, permutations
from math import factorial

import numpy as np

from .complex import SimplicialComplex


def simplex_volume(points: np.ndarray) -> np.ndarray:
    """Volumes of simplices given as (..., m+1, D) vertex arrays (Gram determinant)."""
    points = np.asarray(points, dtype=float)
    m = points.shape[-2] - 1
    if m == 0:
        return np.ones(points.shape[:-2])
    edges = points[..., 1:, :] - points[..., :1, :]
    gram = edges @ np.swapaxes(edges, -1, -2)
    det = np.linalg.det(gram)
    return np.sqrt(np.clip(det, 0.0, None)) / factorial(m)


class MetricData:
    """Euclidean data attached to a complex.

    ``coords`` holds one point per vertex. ``cell_coords`` (optional) holds the
    vertex positions of every cell separately, in the sorted vertex order of
    the canonical cell list; this is how periodic meshes, which have no global
    embedding, get a flat metric. All volumes are computed cell-locally.
    """

    def __init__(self, complex: SimplicialComplex, coords, cell_coords=None):
        self.complex = complex
        self.coords = np.asarray(coords, dtype=float)
        if self.coords.shape[0] != complex.n_vertices:
            raise ValueError("one coordinate row per vertex required")
        if self.coords.shape[1] < complex.dimension:
            raise ValueError("ambient dimension must be at least n")
        if cell_coords is None:
            cell_coords = self.coords[complex.cells]
        self.cell_coords = np.asarray(cell_coords, dtype=float)
        if self.cell_coords.shape[:2] != complex.cells.shape:
            raise ValueError("cell_coords must be (N_cells, n+1, D)")
        vol = self.volumes[complex.dimension]
        if np.any(vol <= 0):
            raise ValueError("degenerate cell with non-positive volume")
        if any(np.any(w <= 0) for w in self.dual_volumes):
            raise ValueError("non-positive dual volume")

    @property
    def embedded(self) -> bool:
        return np.allclose(self.cell_coords, self.coords[self.complex.cells])

    @cached_property
    def volumes(self) -> list[np.ndarray]:
        return [simplex_volume(self.simplex_points(k))
                for k in range(self.complex.dimension + 1)]

    @cached_property
    def dual_parts(self) -> list[np.ndarray]:
        """Barycentric dual volume of each local k-face restricted to each cell.

        Returns, per degree k, an (N_cells, C(n+1, k+1)) array aligned with
        ``complex.cell_faces(k)``.
        """
        n = self.complex.dimension
        P = self.cell_coords
        out = []
        for k in range(n + 1):
            combos = list(combinations(range(n + 1), k + 1))
            part = np.zeros((P.shape[0], len(combos)))
            if k == n:
                part[:] = 1.0
                out.append(part)
                continue
            for c, face in enumerate(combos):
                rest = [v for v in range(n + 1) if v not in face]
                for perm in permutations(rest):
                    chain = [list(face)]
                    for r in perm:
                        chain.append(chain[-1] + [r])
                    bary = np.stack([P[:, idx, :].mean(axis=1) for idx in chain], axis=1)
                    part[:, c] += simplex_volume(bary)
            out.append(part)
        return out

    @cached_property
    def dual_volumes(self) -> list[np.ndarray]:
        cx = self.complex
        out = []
        for k in range(cx.dimension + 1):
            out.append(np.bincount(cx.cell_faces(k).ravel(),
                                   weights=self.dual_parts[k].ravel(),
                                   minlength=cx.count(k)))
        return out

    def hodge_weights(self, k: int) -> np.ndarray:
        """Diagonal Hodge star weights |dual(s)| / |s| for k-simplices."""
        return self.dual_volumes[k] / self.volumes[k]

    def cell_barycenters(self) -> np.ndarray:
        return self.cell_coords.mean(axis=1)

    def edge_midpoints(self) -> np.ndarray:
        """Midpoints of edges, taken from each edge's lowest coface (periodic-safe)."""
        return self.simplex_points(1).mean(axis=1)

    def simplex_points(self, k: int) -> np.ndarray:
        """Cell-local vertex positions of every k-simplex, shape (N_k, k+1, D)."""
        cx = self.complex
        n = cx.dimension
        combos = np.array(list(combinations(range(n + 1), k + 1)))
        first = cx.lowest_coface[k]
        local = np.argmax(cx.cell_faces(k)[first] == np.arange(cx.count(k))[:, None], axis=1)
        sel = combos[local]
        return np.stack([self.cell_coords[first, sel[:, j]] for j in range(k + 1)], axis=1)

    @property
    def total_volume(self) -> float:
        return float(self.volumes[self.complex.dimension].sum())
