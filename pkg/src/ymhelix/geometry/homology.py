"""Simplicial homology ranks over the rationals.

Ranks come from column reduction of the integer boundary matrices. Columns
are processed in index order and reduced against the pivot sitting at their
largest row index; integer columns are kept primitive (divided by their gcd)
so entries stay small on simplicial incidence matrices.
"""
from __future__ import annotations

from math import gcd

import numpy as np
import scipy.sparse as sp

from .complex import Chain, SimplicialComplex


class ColumnReducer:
    """Incremental rational column echelon form of a set of integer vectors."""

    def __init__(self):
        self.pivots: dict[int, dict[int, int]] = {}

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def reduce(self, col: dict[int, int]) -> dict[int, int]:
        col = {r: v for r, v in col.items() if v}
        while col:
            low = max(col)
            piv = self.pivots.get(low)
            if piv is None:
                return col
            a, b = col[low], piv[low]
            merged = {r: b * v for r, v in col.items()}
            for r, v in piv.items():
                merged[r] = merged.get(r, 0) - a * v
            col = {r: v for r, v in merged.items() if v}
            g = 0
            for v in col.values():
                g = gcd(g, v)
            if g > 1:
                col = {r: v // g for r, v in col.items()}
        return col

    def add(self, col: dict[int, int]) -> bool:
        """Insert a column; return True if it was independent of the previous ones."""
        red = self.reduce(col)
        if not red:
            return False
        self.pivots[max(red)] = red
        return True


def _columns(mat: sp.spmatrix) -> list[dict[int, int]]:
    csc = sp.csc_matrix(mat)
    out = []
    for j in range(csc.shape[1]):
        lo, hi = csc.indptr[j], csc.indptr[j + 1]
        out.append({int(r): int(v) for r, v in zip(csc.indices[lo:hi], csc.data[lo:hi])})
    return out


def rational_rank(mat: sp.spmatrix) -> int:
    red = ColumnReducer()
    for col in _columns(mat):
        red.add(col)
    return red.rank


def relative_boundary(cx: SimplicialComplex, k: int) -> sp.csr_matrix:
    """Boundary matrix of the relative chain complex C(U, dU) in degree k."""
    keep_rows = np.flatnonzero(~cx.boundary_mask(k - 1))
    keep_cols = np.flatnonzero(~cx.boundary_mask(k))
    return cx.boundary_matrix(k)[keep_rows][:, keep_cols]


def betti_numbers(cx: SimplicialComplex, relative: bool = False) -> tuple[int, ...]:
    """Betti numbers b_0..b_n of the complex, or of the pair (U, dU)."""
    n = cx.dimension
    cache = cx.__dict__.setdefault("_betti_cache", {})
    if relative in cache:
        return cache[relative]
    dims, ranks = [], [0] * (n + 2)
    for k in range(n + 1):
        dims.append(int((~cx.boundary_mask(k)).sum()) if relative else cx.count(k))
    for k in range(1, n + 1):
        mat = relative_boundary(cx, k) if relative else cx.boundary_matrix(k)
        ranks[k] = rational_rank(mat)
    out = tuple(dims[k] - ranks[k] - ranks[k + 1] for k in range(n + 1))
    cache[relative] = out
    return out


def is_relative_boundary(cx: SimplicialComplex, chain: Chain) -> bool:
    """True if the (n-1)-chain is zero in H_{n-1}(U, dU) over the rationals."""
    k = chain.degree
    if k + 1 > cx.dimension:
        raise ValueError("chain degree too high")
    rel_rows = np.flatnonzero(~cx.boundary_mask(k))
    target = {int(i): int(chain.coefficients[r]) for i, r in enumerate(rel_rows)
              if chain.coefficients[r]}
    cache = cx.__dict__.setdefault("_relative_reducers", {})
    red = cache.get(k)
    if red is None:
        red = ColumnReducer()
        for col in _columns(relative_boundary(cx, k + 1)):
            red.add(col)
        cache[k] = red
    return not red.reduce(target)
