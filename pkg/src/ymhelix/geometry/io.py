"""Mesh JSON reading and writing."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .complex import SimplicialComplex
from .meshes import assemble_mesh
from .metric import MetricData


def mesh_to_dict(cx: SimplicialComplex, metric: MetricData) -> dict:
    out = {
        "dimension": cx.dimension,
        "vertices": metric.coords.tolist(),
        "cells": cx.cells.tolist(),
    }
    if not metric.embedded:
        # periodic meshes: the flat metric lives in per-cell coordinates
        out["cell_coordinates"] = metric.cell_coords.tolist()
    return out


def mesh_from_dict(data: dict) -> tuple[SimplicialComplex, MetricData]:
    n = int(data["dimension"])
    coords = np.asarray(data["vertices"], dtype=float)
    cells = np.asarray(data["cells"], dtype=np.int64)
    if cells.ndim != 2 or cells.shape[1] != n + 1:
        raise ValueError("cells must have dimension + 1 vertices")
    cell_coords = data.get("cell_coordinates")
    pts = np.asarray(cell_coords, dtype=float) if cell_coords is not None else coords[cells]
    return assemble_mesh(cells, pts, coords)


def save_mesh(path, cx: SimplicialComplex, metric: MetricData) -> None:
    Path(path).write_text(json.dumps(mesh_to_dict(cx, metric)))


def load_mesh(path) -> tuple[SimplicialComplex, MetricData]:
    return mesh_from_dict(json.loads(Path(path).read_text()))
