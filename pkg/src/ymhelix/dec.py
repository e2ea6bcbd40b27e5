"""Discrete exterior calculus on a simplicial complex with a barycentric Hodge star.

Cochains are plain float arrays indexed by the canonical simplex ordering of
the complex; :class:`Cochain` wraps one with its degree for I/O and type
checks. :class:`DEC` caches the coboundary matrices, Hodge weights and the
1-form stiffness operator ``K = d1^T *2 d1``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from .geometry.complex import SimplicialComplex
from .geometry.metric import MetricData


@dataclass
class Cochain:
    degree: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("cochain values must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("cochain values must be finite")

    def check(self, cx: SimplicialComplex) -> "Cochain":
        if self.degree > cx.dimension or len(self.values) != cx.count(self.degree):
            raise ValueError(
                f"{self.degree}-cochain of length {len(self.values)} does not fit complex"
            )
        return self

    def to_json(self) -> str:
        return json.dumps({"degree": self.degree, "values": self.values.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "Cochain":
        data = json.loads(text)
        return cls(int(data["degree"]), np.asarray(data["values"], dtype=float))


class Stiffness:
    """The operator K = d1^T *2 d1 on 1-cochains, split into per-cell pieces.

    ``face_cell`` holds, for every 2-simplex f and cell c containing it, the
    part of the *2 weight of f coming from the dual volume inside c. Summing
    it over any set of cells gives a one-sided operator ``K_chi``; summing over
    all cells gives ``K``. Every piece is positive semidefinite.
    """

    def __init__(self, d1: sp.csr_matrix, face_cell: sp.csr_matrix):
        self.d1 = d1
        self.face_cell = face_cell
        w = np.asarray(face_cell.sum(axis=1)).ravel()
        self.matrix = (d1.T @ sp.diags(w) @ d1).tocsr()
        # exact symmetry regardless of summation order
        self.matrix = ((self.matrix + self.matrix.T) * 0.5).tocsr()

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, v):
        return self.matrix @ v

    def face_weights(self, chi) -> np.ndarray:
        """*2 weights restricted to the cells flagged by chi (bool or 0/1 per cell)."""
        return self.face_cell @ np.asarray(chi, dtype=float)

    def one_sided(self, chi) -> sp.csr_matrix:
        return (self.d1.T @ sp.diags(self.face_weights(chi)) @ self.d1).tocsr()

    def cell_matrix(self, c: int) -> sp.csr_matrix:
        chi = np.zeros(self.face_cell.shape[1])
        chi[c] = 1.0
        return self.one_sided(chi)

    def energy(self, v, w, chi=None) -> float:
        """<dv, dw> over all cells, or over the cells flagged by chi."""
        dv, dw = self.d1 @ v, self.d1 @ w
        weights = self.face_cell.sum(axis=1).A1 if chi is None else self.face_weights(chi)
        return float(np.dot(dv * weights, dw))


class DEC:
    """Cached DEC operators for one mesh."""

    def __init__(self, complex: SimplicialComplex, metric: MetricData):
        if metric.complex is not complex:
            raise ValueError("metric belongs to a different complex")
        self.complex = complex
        self.metric = metric
        self.n = complex.dimension

    # ---------------------------------------------------------------- matrices
    def d_matrix(self, k: int) -> sp.csr_matrix:
        if not 0 <= k < self.n:
            raise ValueError(f"d undefined on {k}-cochains of an {self.n}-complex")
        return self._d[k]

    @cached_property
    def _d(self) -> list[sp.csr_matrix]:
        return [self.complex.boundary_matrix(k + 1).T.astype(float).tocsr()
                for k in range(self.n)]

    def star(self, k: int) -> np.ndarray:
        return self._stars[k]

    @cached_property
    def _stars(self) -> list[np.ndarray]:
        return [self.metric.hodge_weights(k) for k in range(self.n + 1)]

    @cached_property
    def stiffness(self) -> Stiffness:
        """K = d1^T *2 d1 with its per-cell decomposition."""
        cx, m = self.complex, self.metric
        faces = cx.cell_faces(2)
        n_cells = faces.shape[0]
        vals = m.dual_parts[2] / m.volumes[2][faces]
        face_cell = sp.csr_matrix(
            (vals.ravel(), (faces.ravel(), np.repeat(np.arange(n_cells), faces.shape[1]))),
            shape=(cx.count(2), n_cells),
        )
        return Stiffness(self.d_matrix(1), face_cell)

    def laplacian0(self) -> sp.csr_matrix:
        """Weighted graph Laplacian d0^T *1 d0 (equals *0 times delta d)."""
        d0 = self.d_matrix(0)
        return (d0.T @ sp.diags(self.star(1)) @ d0).tocsr()

    # ------------------------------------------------------------------ actions
    def d(self, alpha, k: int | None = None):
        vals, k = _unwrap(alpha, k)
        out = self.d_matrix(k) @ vals
        return Cochain(k + 1, out) if isinstance(alpha, Cochain) else out

    def delta(self, beta, k: int | None = None):
        """Codifferential (*_{k-1})^{-1} d^T *_k, adjoint of d for interior-supported cochains."""
        vals, k = _unwrap(beta, k)
        if k < 1:
            raise ValueError("codifferential undefined on 0-cochains")
        out = (self.d_matrix(k - 1).T @ (self.star(k) * vals)) / self.star(k - 1)
        return Cochain(k - 1, out) if isinstance(beta, Cochain) else out

    def inner(self, alpha, beta, k: int | None = None) -> float:
        a, ka = _unwrap(alpha, k)
        b, kb = _unwrap(beta, k)
        if ka != kb:
            raise ValueError("inner product of cochains of different degree")
        if len(a) != self.complex.count(ka) or len(b) != len(a):
            raise ValueError("cochain length does not match complex")
        return float(np.dot(a * self.star(ka), b))

    def norm(self, alpha, k: int | None = None) -> float:
        return float(np.sqrt(max(self.inner(alpha, alpha, k), 0.0)))

    def cup12(self, alpha, beta) -> np.ndarray:
        """Symmetrized cup product of a 1-cochain and a 2-cochain on a 3-complex.

        On a tetrahedron [0123] in sorted vertex order the value is
        (a[01] b[123] + b[012] a[23]) / 2, the average of the front-face and
        back-face forms of the product.
        """
        if self.n != 3:
            raise ValueError("cup product is implemented for 3-complexes only")
        a, ka = _unwrap(alpha, 1)
        b, kb = _unwrap(beta, 2)
        if ka != 1 or kb != 2:
            raise ValueError("cup12 expects a 1-cochain and a 2-cochain")
        e = self.complex.cell_faces(1)
        f = self.complex.cell_faces(2)
        ecombo = {c: i for i, c in enumerate(combinations(range(4), 2))}
        fcombo = {c: i for i, c in enumerate(combinations(range(4), 3))}
        front = a[e[:, ecombo[(0, 1)]]] * b[f[:, fcombo[(1, 2, 3)]]]
        back = b[f[:, fcombo[(0, 1, 2)]]] * a[e[:, ecombo[(2, 3)]]]
        return 0.5 * (front + back)

    def cup(self, alpha, beta):
        out = self.cup12(alpha, beta)
        return Cochain(3, out) if isinstance(alpha, Cochain) else out

    def integrate_top(self, omega) -> float:
        """Sum of an n-cochain against the cell orientations."""
        vals, k = _unwrap(omega, self.n)
        if k != self.n:
            raise ValueError("integrate_top expects an n-cochain")
        return float(np.dot(self.complex.cell_orientation, vals))

    def helicity(self, alpha) -> float:
        """Discrete helicity: integral of alpha cup d(alpha) over a 3-complex."""
        a, _ = _unwrap(alpha, 1)
        return self.integrate_top(self.cup12(a, self.d_matrix(1) @ a))

    # ---------------------------------------------------------------- sampling
    def sample_one_form(self, field, quad: int = 3) -> np.ndarray:
        """Integrate a vector field (points (m, D) -> (m, D)) along every edge.

        Gauss-Legendre quadrature with ``quad`` nodes; uses cell-local edge
        positions, so it is correct on periodic meshes too.
        """
        pts = self.metric.simplex_points(1)
        p0, p1 = pts[:, 0], pts[:, 1]
        t, wq = np.polynomial.legendre.leggauss(quad)
        t, wq = 0.5 * (t + 1.0), 0.5 * wq
        out = np.zeros(len(p0))
        for ti, wi in zip(t, wq):
            x = p0 + ti * (p1 - p0)
            out += wi * np.einsum("ij,ij->i", np.asarray(field(x), dtype=float), p1 - p0)
        return out

    def sample_function(self, func) -> np.ndarray:
        return np.asarray(func(self.metric.coords), dtype=float)


def _unwrap(alpha, k=None):
    if isinstance(alpha, Cochain):
        if k is not None and alpha.degree != k:
            raise ValueError(f"expected a {k}-cochain, got degree {alpha.degree}")
        return alpha.values, alpha.degree
    if k is None:
        raise ValueError("degree required for raw arrays")
    return np.asarray(alpha, dtype=float), k
