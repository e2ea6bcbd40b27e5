"""Gluing regions along isometric boundary hypersurfaces, and gluing solutions.

Two-piece gluings are reduced to self-gluings of the disjoint union: the
second piece is moved by the rigid motion that best matches the two
hypersurfaces (so glued boxes stay embedded), appended to the first, and
the vertex pairs of the map are identified.
"""
from __future__ import annotations

import json
from itertools import combinations
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .geometry.complex import SimplicialComplex
from .geometry.homology import betti_numbers
from .geometry.meshes import assemble_mesh
from .geometry.metric import MetricData
from .solver import numerical_rank, solve_spsd
from .ym import Connection, Mesh, get_dec, linearized_solution_space

ISOMETRY_TOL = 1e-9


class GluingError(ValueError):
    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}


@dataclass
class GluingMap:
    """Identification of sigma2 (faces of the second piece) with sigma1 (faces of the first).

    ``vertex_map`` rows are (vertex of piece 1, vertex of piece 2). For a
    self-gluing both refer to the same complex.
    """

    sigma1: np.ndarray
    sigma2: np.ndarray
    vertex_map: np.ndarray

    def __post_init__(self):
        self.sigma1 = np.asarray(self.sigma1, dtype=np.int64)
        self.sigma2 = np.asarray(self.sigma2, dtype=np.int64)
        self.vertex_map = np.asarray(self.vertex_map, dtype=np.int64).reshape(-1, 2)

    def to_json(self) -> str:
        return json.dumps({"sigma1": self.sigma1.tolist(), "sigma2": self.sigma2.tolist(),
                           "vertex_map": self.vertex_map.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "GluingMap":
        data = json.loads(text)
        return cls(data["sigma1"], data["sigma2"], data["vertex_map"])


@dataclass
class GluedMesh:
    complex: SimplicialComplex
    metric: MetricData
    vertex_maps: list            # per piece: old vertex id -> glued vertex id
    edge_maps: list              # per piece: old edge id -> glued edge id
    edge_signs: list             # per piece: orientation sign of each old edge in the glued mesh
    interface_edges: np.ndarray  # glued ids of edges coming from sigma
    report: dict = field(default_factory=dict)


# -------------------------------------------------------------- map helpers
def face_gluing_map(U1, U2, axis: int, tol: float = 1e-9) -> GluingMap:
    """Map gluing the max-face of U1 along ``axis`` to the min-face of U2 (or of U1 if U2 is None).

    Vertices are matched by their remaining coordinates.
    """
    cx1, m1 = U1
    cx2, m2 = U1 if U2 is None else U2
    f1 = _plane_faces(cx1, m1, axis, "max", tol)
    f2 = _plane_faces(cx2, m2, axis, "min", tol)
    v1 = np.unique(cx1.simplices(cx1.dimension - 1)[f1])
    v2 = np.unique(cx2.simplices(cx2.dimension - 1)[f2])
    others = [k for k in range(m1.coords.shape[1]) if k != axis]
    k1 = {tuple(np.round(m1.coords[v, others], 9)): v for v in v1}
    pairs = []
    for v in v2:
        key = tuple(np.round(m2.coords[v, others], 9))
        if key not in k1:
            raise GluingError("faces do not match vertex by vertex")
        pairs.append((k1[key], v))
    return GluingMap(f1, f2, pairs)


def _plane_faces(cx, metric, axis, side, tol):
    faces = np.flatnonzero(cx.boundary_mask(cx.dimension - 1))
    pts = metric.coords[cx.simplices(cx.dimension - 1)[faces]][..., axis]
    target = metric.coords[:, axis].max() if side == "max" else metric.coords[:, axis].min()
    sel = np.all(np.abs(pts - target) < tol, axis=1)
    if not sel.any():
        raise GluingError(f"no boundary faces on the {side} plane of axis {axis}")
    return faces[sel]


# ------------------------------------------------------------------- glue
def disjoint_union(U1, U2, moved_coords=None, moved_cell_coords=None):
    cx1, m1 = U1
    cx2, m2 = U2
    if cx1.dimension != cx2.dimension:
        raise GluingError("pieces have different dimensions")
    off = cx1.n_vertices
    c2 = m2.coords if moved_coords is None else moved_coords
    cc2 = m2.cell_coords if moved_cell_coords is None else moved_cell_coords
    if c2.shape[1] != m1.coords.shape[1]:
        raise GluingError("pieces live in different ambient dimensions")
    cells = np.vstack([cx1.cells, cx2.cells + off])
    return assemble_mesh(cells, np.concatenate([m1.cell_coords, cc2]),
                         np.vstack([m1.coords, c2]))


def _rigid_motion(P2, P1, U1_center, U2_center):
    """Orthogonal Q and shift t with Q p2 + t ~ p1, placing piece 2 across the interface."""
    c1, c2 = P1.mean(axis=0), P2.mean(axis=0)
    Q, _ = sla.orthogonal_procrustes(P2 - c2, P1 - c1)
    Q = Q.T
    # flat interfaces leave a reflection ambiguity: put piece 2 on the far side
    _, sv, vt = np.linalg.svd(P1 - c1)
    if len(sv) == P1.shape[1] and sv[-1] < 1e-9 * max(sv[0], 1.0) or len(sv) < P1.shape[1]:
        normal = vt[-1]
        side1 = np.dot(U1_center - c1, normal)
        side2 = np.dot(Q @ (U2_center - c2), normal)
        if side1 * side2 > 0:
            R = np.eye(len(normal)) - 2 * np.outer(normal, normal)
            Q = R @ Q
    t = c1 - Q @ c2
    return Q, t


def glue(U1, U2, gmap: GluingMap, tol: float = ISOMETRY_TOL) -> GluedMesh:
    """Quotient of U1 (and U2) identifying sigma2 with sigma1 through the vertex map.

    ``U2=None`` glues U1 to itself. Raises :class:`GluingError` when the map
    is not a simplicial isometry between boundary faces or the quotient is
    not a manifold complex.
    """
    cx1, m1 = U1
    self_glue = U2 is None
    cx2, m2 = (cx1, m1) if self_glue else U2
    n = cx1.dimension
    vm = gmap.vertex_map
    if len(np.unique(vm[:, 0])) != len(vm) or len(np.unique(vm[:, 1])) != len(vm):
        raise GluingError("vertex map is not a bijection")
    for cx, sig, name in ((cx1, gmap.sigma1, "sigma1"), (cx2, gmap.sigma2, "sigma2")):
        if len(sig) == 0 or np.any(~cx.boundary_mask(n - 1)[sig]):
            raise GluingError(f"{name} must be a nonempty set of boundary faces")
    lookup = dict(zip(vm[:, 1].tolist(), vm[:, 0].tolist()))
    faces2 = cx2.simplices(n - 1)[gmap.sigma2]
    try:
        mapped = np.vectorize(lookup.__getitem__)(faces2)
    except KeyError as exc:
        raise GluingError("vertex map does not cover sigma2") from exc
    target = cx1.index(n - 1, mapped)
    if set(target.tolist()) != set(gmap.sigma1.tolist()):
        raise GluingError("vertex map does not carry sigma2 onto sigma1")

    # isometry: edge lengths of sigma2 vs their images
    e2 = _face_edges(cx2, gmap.sigma2)
    e1 = cx1.index(1, np.vectorize(lookup.__getitem__)(cx2.simplices(1)[e2]))
    mismatch = np.abs(m1.volumes[1][e1] - m2.volumes[1][e2])
    if mismatch.max() > tol:
        raise GluingError(f"gluing map is not an isometry (edge length error {mismatch.max():.2e})",
                          {"max_length_error": float(mismatch.max())})

    if self_glue:
        dcx, dm, off = cx1, m1, 0
    else:
        P1 = m1.coords[vm[:, 0]]
        P2 = m2.coords[vm[:, 1]]
        moved, moved_cells = m2.coords, m2.cell_coords
        if np.abs(P1 - P2).max() > tol:
            Q, t = _rigid_motion(P2, P1, m1.coords.mean(axis=0), m2.coords.mean(axis=0))
            if np.abs(P2 @ Q.T + t - P1).max() < 1e-8:
                moved = m2.coords @ Q.T + t
                moved_cells = m2.cell_coords @ Q.T + t
        dcx, dm = disjoint_union(U1, U2, moved, moved_cells)
        off = cx1.n_vertices

    # identify vertices b (+ offset) -> a
    parent = np.arange(dcx.n_vertices)
    for a, b in vm:
        parent[b + off] = a
    for _ in range(len(vm) + 1):
        nxt = parent[parent]
        if np.array_equal(nxt, parent):
            break
        parent = nxt
    keep = np.unique(parent)
    relabel = np.full(dcx.n_vertices, -1, dtype=np.int64)
    relabel[keep] = np.arange(len(keep))
    vmap = relabel[parent]

    cells = vmap[dcx.cells]
    if np.any(np.diff(np.sort(cells, axis=1), axis=1) == 0):
        raise GluingError("gluing collapses a cell (need more cells across the glued region)")
    coords = dm.coords[keep]
    try:
        gcx, gm = assemble_mesh(cells, dm.cell_coords, coords)
    except ValueError as exc:
        raise GluingError(f"glued complex is not a manifold: {exc}") from exc
    expected = [dcx.count(k) - len(np.unique(_sigma_simplices(cx2, gmap.sigma2, k)))
                for k in range(n + 1)]
    if list(gcx.f_vector) != expected:
        raise GluingError("identification merges simplices outside the glued faces",
                          {"f_vector": list(gcx.f_vector), "expected": expected})
    if np.any(gcx.cell_orientation[_cell_map(dcx, gcx, vmap)] == 0):
        raise GluingError("degenerate glued cell")

    # per-piece vertex and edge maps
    pieces = [(cx1, 0)] if self_glue else [(cx1, 0), (cx2, off)]
    vertex_maps, edge_maps, edge_signs = [], [], []
    for cx, o in pieces:
        vmp = vmap[np.arange(cx.n_vertices) + o]
        e = vmp[cx.simplices(1)]
        edge_maps.append(gcx.index(1, e))
        edge_signs.append(np.where(e[:, 0] < e[:, 1], 1.0, -1.0))
        vertex_maps.append(vmp)
    sig_edges = _face_edges(cx1, gmap.sigma1)
    interface = edge_maps[0][sig_edges]
    sigma_rim = _rim(cx1, gmap.sigma1)
    report = {
        "sigma_closed": not sigma_rim,
        "max_length_error": float(mismatch.max()),
        "f_vector": list(gcx.f_vector),
        "betti": list(betti_numbers(gcx)),
    }
    return GluedMesh(gcx, gm, vertex_maps, edge_maps, edge_signs, interface, report)


def _sigma_simplices(cx, sigma, k):
    faces = cx.simplices(cx.dimension - 1)[sigma]
    rows = np.vstack([faces[:, list(c)] for c in combinations(range(cx.dimension), k + 1)]) \
        if k < cx.dimension else np.zeros((0, k + 1), dtype=np.int64)
    if len(rows) == 0:
        return np.zeros(0, dtype=np.int64)
    return cx.index(k, rows)


def _face_edges(cx, sigma) -> np.ndarray:
    return np.unique(_sigma_simplices(cx, sigma, 1))


def _rim(cx, sigma) -> bool:
    """True when the face set has nonempty boundary (as a mod-2 chain)."""
    n = cx.dimension
    chain = np.zeros(cx.count(n - 1), dtype=np.int64)
    chain[sigma] = 1
    return bool(np.any((abs(cx.boundary_matrix(n - 1)) @ chain) % 2))


def _cell_map(dcx, gcx, vmap):
    return gcx.index(dcx.dimension, vmap[dcx.cells])


# ------------------------------------------------------------- solutions
def _assemble_cochain(glued: GluedMesh, etas) -> np.ndarray:
    out = np.full(glued.complex.count(1), np.nan)
    # later pieces first so that piece 1 wins on shared edges
    for emap, sgn, eta in reversed(list(zip(glued.edge_maps, glued.edge_signs, etas))):
        out[emap] = sgn * np.asarray(eta, dtype=float)
    return out


def glue_solutions(eta1, eta2, glued: GluedMesh, tol: float = 1e-9) -> tuple[Connection, dict]:
    """Concatenate solutions on the pieces into one on the glued mesh.

    Requires matching tangential traces on the interface and matching Neumann
    traces (K eta summed across the interface vanishes on glued interior
    edges). ``eta2`` is ignored for self-gluings.
    """
    etas = [np.asarray(getattr(eta1, "eta", eta1), dtype=float)]
    if len(glued.edge_maps) == 2:
        etas.append(np.asarray(getattr(eta2, "eta", eta2), dtype=float))
    m = glued.complex.count(1)
    # tangential traces: every glued edge must receive one value
    sums = np.zeros(m)
    sq = np.zeros(m)
    cnt = np.zeros(m)
    for emap, sgn, eta in zip(glued.edge_maps, glued.edge_signs, etas):
        np.add.at(sums, emap, sgn * eta)
        np.add.at(sq, emap, (sgn * eta) ** 2)
        np.add.at(cnt, emap, 1)
    spread = np.sqrt(np.maximum(sq / np.maximum(cnt, 1) - (sums / np.maximum(cnt, 1)) ** 2, 0.0))
    values = _assemble_cochain(glued, etas)
    scale = 1.0 + float(np.abs(values).max())
    dir_bad = np.flatnonzero(spread > tol * scale)
    dec = get_dec(glued.complex, glued.metric)
    mesh = Mesh.of(dec)
    res = dec.stiffness.matrix @ values
    iface = glued.interface_edges[~mesh.bedge_mask[glued.interface_edges]]
    kscale = 1.0 + float(np.abs(dec.stiffness.matrix).max()) * scale
    neu_bad = iface[np.abs(res[iface]) > tol * kscale]
    report = {
        "dirichlet_mismatch": float(spread.max(initial=0.0)),
        "neumann_mismatch": float(np.abs(res[iface]).max(initial=0.0)),
        "interior_residual": float(np.abs(res[mesh.iedges]).max(initial=0.0)),
    }
    if len(dir_bad) or len(neu_bad):
        report["dirichlet_bad_edges"] = dir_bad.tolist()
        report["neumann_bad_edges"] = neu_bad.tolist()
        raise GluingError("traces do not match across the interface", report)
    return Connection(dec, values), report


def split(complex: SimplicialComplex, metric: MetricData, cell_mask):
    """Cut a mesh into the cells flagged by ``cell_mask`` and the rest.

    Returns (U1, U2, gluing map, original vertex ids of U1, of U2); gluing
    the pieces back with the map reproduces the mesh.
    """
    mask = np.asarray(cell_mask, dtype=bool)
    n = complex.dimension
    if mask.all() or not mask.any():
        raise GluingError("split needs cells on both sides")
    pieces, origs = [], []
    for sel in (mask, ~mask):
        cells = complex.cells[sel]
        orig = np.unique(cells)
        relabel = np.full(complex.n_vertices, -1, dtype=np.int64)
        relabel[orig] = np.arange(len(orig))
        pieces.append(assemble_mesh(relabel[cells], metric.cell_coords[sel], metric.coords[orig]))
        origs.append(orig)
    cf = complex.cell_faces(n - 1)
    side = np.zeros(complex.count(n - 1), dtype=np.int64)
    np.add.at(side, cf[mask].ravel(), 1)
    np.add.at(side, cf[~mask].ravel(), 2)
    iface = complex.simplices(n - 1)[side == 3]
    shared = np.unique(iface)
    pos1 = np.searchsorted(origs[0], shared)
    pos2 = np.searchsorted(origs[1], shared)
    vm = np.stack([pos1, pos2], axis=1)
    (c1, _), (c2, _) = pieces
    s1 = c1.index(n - 1, np.searchsorted(origs[0], iface))
    s2 = c2.index(n - 1, np.searchsorted(origs[1], iface))
    return pieces[0], pieces[1], GluingMap(s1, s2, vm), origs[0], origs[1]


def restrict(eta, orig_vertices, piece_complex, complex) -> np.ndarray:
    """Values of a cochain on the edges of a piece produced by :func:`split`."""
    e = orig_vertices[piece_complex.simplices(1)]
    return np.asarray(eta, dtype=float)[complex.index(1, e)]


def canonical_form(complex: SimplicialComplex, metric: MetricData, decimals: int = 9):
    """Cells as sorted tuples of rounded vertex coordinates (isomorphism-invariant for embedded meshes)."""
    pts = np.round(metric.cell_coords, decimals)
    keys = sorted(tuple(sorted(map(tuple, cell))) for cell in pts)
    return keys


# ---------------------------------------------------------- dimension check
def gluing_dimension_check(U1, U2, gmap: GluingMap) -> dict:
    """Matched pairs of solutions modulo piece and interface gauge vs solutions on the glued mesh.

    Left side: gauge-fixed linearized solutions on the pieces whose
    tangential traces agree on sigma and whose Neumann traces cancel on
    interface edges interior to the glued mesh, modulo gauge functions
    supported at interface vertices. Right side: gauge-fixed linearized
    solutions on the glued mesh (also compared with #boundary edges + b1(U, dU)).
    """
    glued = glue(U1, U2, gmap)
    gcx, gm = glued.complex, glued.metric
    gmesh = Mesh.of(gcx, gm)
    pieces = [U1] if U2 is None else [U1, U2]

    bases, meshes = [], []
    for cx, m in pieces:
        bases.append(linearized_solution_space(cx, m, "dirichlet"))
        meshes.append(Mesh.of(cx, m))
    sizes = [B.shape[1] for B in bases]
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    # pushed-forward cochains: glued edge values contributed by each piece
    m_g = gcx.count(1)
    iface = glued.interface_edges
    iface_interior = iface[~gmesh.bedge_mask[iface]]
    # per piece: sparse map old edge -> glued edge with orientation sign
    contrib = []
    for emap, sgn, (cx, _) in zip(glued.edge_maps, glued.edge_signs, pieces):
        contrib.append(sp.csr_matrix((sgn, (emap, np.arange(cx.count(1)))), shape=(m_g, cx.count(1))))
    # each interface edge is hit twice (by sigma1 and sigma2 edges); form differences per hit pair
    N_parts = [P @ (mesh.K @ B) for P, B, mesh in zip(contrib, bases, meshes)]
    # Neumann: sum of K-contributions on glued interior interface edges
    N = np.hstack(N_parts)[iface_interior]
    # tangential: for every (piece edge) pair mapping to the same interface edge, equal values
    T_rows = []
    hits = []
    for pi, (emap, (cx, _)) in enumerate(zip(glued.edge_maps, pieces)):
        for old in np.flatnonzero(np.isin(emap, iface)):
            hits.append((emap[old], pi, old))
    hits.sort()
    for (g1, p1, o1), (g2, p2, o2) in zip(hits, hits[1:]):
        if g1 != g2:
            continue
        row = np.zeros(offsets[-1])
        row[offsets[p1]:offsets[p1 + 1]] += glued.edge_signs[p1][o1] * bases[p1][o1]
        row[offsets[p2]:offsets[p2 + 1]] -= glued.edge_signs[p2][o2] * bases[p2][o2]
        T_rows.append(row)
    C = np.vstack([np.array(T_rows).reshape(-1, offsets[-1]), N])
    matched = offsets[-1] - numerical_rank(C)

    # interface gauge: vertex functions at glued-interior interface vertices
    iface_verts = np.unique(gcx.simplices(1)[iface].ravel())
    iface_verts = iface_verts[~gmesh.bvert_mask[iface_verts]]
    G_cols = []
    for gv in iface_verts:
        col = np.zeros(offsets[-1])
        for pi, (vmp, (cx, m), mesh, B) in enumerate(zip(glued.vertex_maps, pieces, meshes, bases)):
            f = (vmp == gv).astype(float)
            if not f.any():
                continue
            # harmonic extension of the boundary values, then its gradient
            h, _ = solve_spsd(mesh.laplacian0, np.zeros(cx.n_vertices),
                              fixed=(mesh.bverts, f[mesh.bverts]))
            col[offsets[pi]:offsets[pi + 1]] += B.T @ (mesh.d0 @ h)
        G_cols.append(col)
    gauge_rank = numerical_rank(np.array(G_cols)) if G_cols else 0
    left = matched - gauge_rank

    right = linearized_solution_space(gcx, gm, "dirichlet").shape[1]
    formula = len(gmesh.bedges) + betti_numbers(gcx, relative=True)[1]
    return {
        "matched_pairs": int(matched),
        "interface_gauge_rank": int(gauge_rank),
        "pairs_modulo_gauge": int(left),
        "glued_solutions_modulo_gauge": int(right),
        "boundary_edges_plus_b1_rel": int(formula),
        "glued_b1": int(betti_numbers(gcx)[1]),
        "equal": bool(left == right),
        "glue_report": glued.report,
    }
