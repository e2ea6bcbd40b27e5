"""Simplicial complexes, piecewise-flat metrics, mesh generators and homology."""
from .complex import Chain, SimplicialComplex
from .homology import betti_numbers, is_relative_boundary, rational_rank
from .io import load_mesh, mesh_from_dict, mesh_to_dict, save_mesh
from .meshes import build_annulus, build_box, build_periodic_box, build_solid_torus
from .metric import MetricData, simplex_volume

__all__ = [
    "Chain",
    "MetricData",
    "SimplicialComplex",
    "betti_numbers",
    "build_annulus",
    "build_box",
    "build_periodic_box",
    "build_solid_torus",
    "is_relative_boundary",
    "load_mesh",
    "mesh_from_dict",
    "mesh_to_dict",
    "rational_rank",
    "save_mesh",
    "simplex_volume",
]
