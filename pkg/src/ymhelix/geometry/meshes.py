"""Mesh generators built on the Kuhn (Freudenthal) triangulation of a grid."""
from __future__ import annotations

from itertools import permutations

import numpy as np

from .complex import SimplicialComplex
from .metric import MetricData


def kuhn_grid(shape, periodic=None):
    """Kuhn triangulation of an index grid.

    Returns the cells as flat vertex ids, the unwrapped integer grid position
    of every cell vertex, and the integer position of every vertex. Periodic
    axes wrap vertex ids but keep unwrapped positions, so every cell keeps a
    flat local geometry.
    """
    shape = [int(s) for s in shape]
    n = len(shape)
    periodic = [False] * n if periodic is None else list(periodic)
    if any(s < 1 for s in shape):
        raise ValueError("resolution must be >= 1 along every axis")
    if any(p and s < 3 for p, s in zip(periodic, shape)):
        raise ValueError("periodic axes need at least 3 segments")
    vshape = [s if p else s + 1 for s, p in zip(shape, periodic)]
    strides = np.array([int(np.prod(vshape[i + 1:])) for i in range(n)], dtype=np.int64)

    corners = np.stack(np.meshgrid(*[np.arange(s) for s in shape], indexing="ij"), -1)
    corners = corners.reshape(-1, n)
    cells, positions = [], []
    eye = np.eye(n, dtype=np.int64)
    for perm in permutations(range(n)):
        path = [np.zeros(n, dtype=np.int64)]
        for axis in perm:
            path.append(path[-1] + eye[axis])
        offsets = np.stack(path)  # (n+1, n)
        pos = corners[:, None, :] + offsets[None, :, :]
        wrapped = pos.copy()
        for ax in range(n):
            if periodic[ax]:
                wrapped[..., ax] %= shape[ax]
        cells.append(wrapped @ strides)
        positions.append(pos)
    cells = np.concatenate(cells)
    positions = np.concatenate(positions)
    vpos = np.stack(np.meshgrid(*[np.arange(s) for s in vshape], indexing="ij"), -1).reshape(-1, n)
    return cells, positions, vpos


def assemble_mesh(cells, cell_points, vertex_points) -> tuple[SimplicialComplex, MetricData]:
    """Build complex and metric from cells with cell-local vertex positions.

    Cell rows are sorted; cell orientation is the sign of the local volume
    when the ambient dimension equals n, else +1.
    """
    order = np.argsort(cells, axis=1, kind="stable")
    cells = np.take_along_axis(cells, order, axis=1)
    cell_points = np.take_along_axis(cell_points, order[:, :, None], axis=1)
    n = cells.shape[1] - 1
    if cell_points.shape[2] == n:
        orient = np.sign(np.linalg.det(cell_points[:, 1:] - cell_points[:, :1])).astype(np.int64)
    else:
        orient = np.ones(len(cells), dtype=np.int64)
    cx = SimplicialComplex(cells, n_vertices=len(vertex_points), orientation=orient)
    metric = MetricData(cx, vertex_points, cell_points[cx.input_order])
    return cx, metric


def build_box(n: int, resolution, edge_lengths=None) -> tuple[SimplicialComplex, MetricData]:
    """Kuhn triangulation of the box prod [0, L_i] with resolution[i] cells per axis."""
    if n not in (2, 3, 4):
        raise ValueError("box dimension must be 2, 3 or 4")
    resolution = _per_axis(resolution, n, "resolution")
    edge_lengths = _per_axis(1.0 if edge_lengths is None else edge_lengths, n, "edge_lengths")
    if any(r < 1 for r in resolution):
        raise ValueError("resolution must be >= 1 along every axis")
    if any(L <= 0 for L in edge_lengths):
        raise ValueError("edge lengths must be positive")
    h = np.asarray(edge_lengths, dtype=float) / np.asarray(resolution, dtype=float)
    cells, pos, vpos = kuhn_grid(resolution)
    return assemble_mesh(cells, pos * h, vpos * h)


def build_periodic_box(resolution, edge_lengths=None, n: int = 3):
    """Kuhn triangulation of the flat torus R^n / prod L_i Z (a closed complex)."""
    resolution = _per_axis(resolution, n, "resolution")
    edge_lengths = _per_axis(2 * np.pi if edge_lengths is None else edge_lengths, n, "edge_lengths")
    h = np.asarray(edge_lengths, dtype=float) / np.asarray(resolution, dtype=float)
    cells, pos, vpos = kuhn_grid(resolution, periodic=[True] * n)
    return assemble_mesh(cells, pos * h, vpos * h)


def build_annulus(radial_resolution: int, angular_segments: int,
                  r_inner: float = 1.0, r_outer: float = 2.0):
    """Flat annulus r_inner <= r <= r_outer, triangulated on a polar grid."""
    if angular_segments < 3:
        raise ValueError("annulus needs at least 3 angular segments")
    if radial_resolution < 1:
        raise ValueError("radial resolution must be >= 1")
    if not 0 < r_inner < r_outer:
        raise ValueError("need 0 < r_inner < r_outer")
    shape = [radial_resolution, angular_segments]
    cells, pos, vpos = kuhn_grid(shape, periodic=[False, True])

    def embed(p):
        r = r_inner + (r_outer - r_inner) * p[..., 0] / radial_resolution
        t = 2 * np.pi * p[..., 1] / angular_segments
        return np.stack([r * np.cos(t), r * np.sin(t)], axis=-1)

    # embedded: cell corners are the vertex points themselves (no seam roundoff)
    verts = embed(vpos.astype(float))
    return assemble_mesh(cells, verts[cells], verts)


def build_solid_torus(major_segments: int, minor_resolution: int,
                      major_radius: float = 3.0, minor_radius: float = 1.0):
    """Solid torus S^1 x D^2 with a square cross-section of half-width minor_radius."""
    if major_segments < 3:
        raise ValueError("solid torus needs at least 3 major segments")
    if minor_resolution < 1:
        raise ValueError("minor resolution must be >= 1")
    if not 0 < minor_radius < major_radius:
        raise ValueError("need 0 < minor_radius < major_radius")
    m, N = minor_resolution, major_segments
    cells, pos, vpos = kuhn_grid([m, m, N], periodic=[False, False, True])

    def embed(p):
        rho = -minor_radius + 2 * minor_radius * p[..., 0] / m
        z = -minor_radius + 2 * minor_radius * p[..., 1] / m
        t = 2 * np.pi * p[..., 2] / N
        R = major_radius + rho
        return np.stack([R * np.cos(t), R * np.sin(t), z], axis=-1)

    # embedded: cell corners are the vertex points themselves (no seam roundoff)
    verts = embed(vpos.astype(float))
    return assemble_mesh(cells, verts[cells], verts)


def _per_axis(value, n, name):
    if np.ndim(value) == 0:
        return [value] * n
    value = list(value)
    if len(value) != n:
        raise ValueError(f"{name} must have {n} entries")
    return value
