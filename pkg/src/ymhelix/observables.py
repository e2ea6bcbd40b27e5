"""Hypersurface cuts, flux pairings and helicity observables.

A cut is a bipartition of the n-cells into S- and S+. Its flux operator is

    G = W (K_chi - diag(chi_E) K),

where K_chi is the stiffness summed over S- only, chi_E flags the edges
assigned to S- and W is an edge window (all edges for a plain bipartition).
The flux of v paired against w is ``w @ G @ v``; for a bipartition it equals
<dw, dv>_{S-} - sum_{E-} w (K v), a summation-by-parts form of the integral
of w ^ *dv over the interface. G v is supported on edges touching the
interface, and it is divergence-free at interior vertices whenever K v
vanishes on interior edges, which makes every quantity built from it exactly
invariant under interior gauge shifts and interior deformations of the cut.

A slit cut (a non-separating hypersurface such as a radial segment of an
annulus) is realized as an angular wedge S- with the window restricted to the
edges near one of its two faces.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .dec import DEC
from .geometry.complex import Chain, SimplicialComplex
from .geometry.homology import betti_numbers, is_relative_boundary
from .geometry.metric import MetricData
from .ym import Connection, gauge_equivalent, get_dec, harmonic_basis, is_solution, \
    random_solution, uniform_field

FD_EPS = 1e-4


class CutError(ValueError):
    pass


# ------------------------------------------------------------------- cuts
class Hypersurface:
    """Admissible cut given by a cell bipartition and an edge window."""

    def __init__(self, dec: DEC, cell_minus, window=None, face_window=None, label: str = "cut"):
        cx = dec.complex
        self.dec = dec
        self.label = label
        self.cell_minus = np.asarray(cell_minus, dtype=bool)
        if self.cell_minus.shape != (cx.count(cx.dimension),):
            raise CutError("cell bipartition must flag every n-cell")
        if self.cell_minus.all() or not self.cell_minus.any():
            raise CutError(f"{label}: one side of the bipartition is empty")
        self.edge_minus = self.cell_minus[cx.lowest_coface[1]]
        self.window = np.ones(cx.count(1), dtype=bool) if window is None \
            else np.asarray(window, dtype=bool)
        self.is_slit = window is not None

        # oriented interface chain: boundary of the S- chain on interior faces
        n = cx.dimension
        top = (cx.cell_orientation * self.cell_minus).astype(np.int64)
        faces = cx.boundary_matrix(n) @ top
        faces[cx.boundary_mask(n - 1)] = 0
        if face_window is not None:
            faces[~np.asarray(face_window, dtype=bool)] = 0
        if not faces.any():
            raise CutError(f"{label}: empty interface")
        self.chain = Chain(n - 1, faces)
        rim = cx.boundary_matrix(n - 1) @ faces
        if np.any(rim[~cx.boundary_mask(n - 2)]):
            raise CutError(f"{label}: interface boundary is not contained in the region boundary")

    @cached_property
    def null_homologous(self) -> bool:
        """True when the interface is zero in H_{n-1}(U, dU)."""
        return is_relative_boundary(self.dec.complex, self.chain)

    @property
    def boundary_empty(self) -> bool:
        cx = self.dec.complex
        return not np.any(cx.boundary_matrix(cx.dimension - 1) @ self.chain.coefficients)

    @cached_property
    def operator(self) -> sp.csr_matrix:
        K = self.dec.stiffness
        G = K.one_sided(self.cell_minus) - sp.diags(self.edge_minus.astype(float)) @ K.matrix
        return (sp.diags(self.window.astype(float)) @ G).tocsr()

    def describe(self) -> dict:
        return {
            "label": self.label,
            "cells_minus": int(self.cell_minus.sum()),
            "interface_faces": int(np.count_nonzero(self.chain.coefficients)),
            "slit": self.is_slit,
            "null_homologous": bool(self.null_homologous),
            "boundary_empty": bool(self.boundary_empty),
        }


def _boundary_cells(cx: SimplicialComplex) -> np.ndarray:
    """Cells with at least one vertex on the boundary."""
    return cx.boundary_mask(0)[cx.cells].any(axis=1)


def _cell_values(metric: MetricData, field) -> np.ndarray:
    if callable(field):
        return np.asarray(field(metric.cell_barycenters()), dtype=float)
    vals = np.asarray(field, dtype=float)
    if vals.shape != (metric.complex.n_vertices,):
        raise CutError("vertex field must have one value per vertex")
    return vals[metric.complex.cells].mean(axis=1)


def cut_from_level(complex: SimplicialComplex, metric: MetricData, field, level: float,
                   bend=None, label: str | None = None) -> Hypersurface:
    """S- = cells whose barycentric field value is below ``level``.

    ``field`` is a vertex array (interpolated linearly to barycenters) or a
    callable on points. ``bend`` (callable on points) is added to the field on
    cells that do not touch the boundary, giving a cut homologous to the
    unbent one with the same trace on the boundary.
    """
    vals = _cell_values(metric, field)
    if bend is not None:
        inner = ~_boundary_cells(complex)
        vals = vals.copy()
        vals[inner] += np.asarray(bend(metric.cell_barycenters()[inner]), dtype=float)
    if np.any(np.abs(vals - level) < 1e-12 * max(1.0, abs(level))):
        raise CutError("level hits a cell barycenter value; choose a generic level")
    return Hypersurface(get_dec(complex, metric), vals < level,
                        label=label or f"level:{level:g}")


def _angle(points) -> np.ndarray:
    return np.mod(np.arctan2(points[..., 1], points[..., 0]), 2 * np.pi)


def slit_cut(complex: SimplicialComplex, metric: MetricData, theta1: float, theta2: float,
             bend=None, label: str | None = None) -> Hypersurface:
    """Half-plane slit {angle = theta1} through an annulus or solid torus.

    S- is the angular wedge (theta1, theta2); the window keeps the edges and
    faces closer in angle to theta1. ``bend`` (callable on points) shifts the
    slit angle on cells away from the boundary.
    """
    if not metric.embedded:
        raise CutError("slit cuts need embedded coordinates")
    span = np.mod(theta2 - theta1, 2 * np.pi)
    if not 0 < span < 2 * np.pi:
        raise CutError("slit wedge must have positive opening")
    cx = complex
    bary = metric.cell_barycenters()
    rel = np.mod(_angle(bary) - theta1, 2 * np.pi)
    if bend is not None:
        inner = ~_boundary_cells(cx)
        rel = rel.copy()
        rel[inner] = np.mod(rel[inner] - np.asarray(bend(bary[inner]), dtype=float), 2 * np.pi)
    minus = rel < span

    def near_first(points):
        a = _angle(points)
        d1 = np.abs(np.angle(np.exp(1j * (a - theta1))))
        d2 = np.abs(np.angle(np.exp(1j * (a - theta2))))
        return d1 < d2

    window = near_first(metric.edge_midpoints())
    face_window = near_first(metric.simplex_points(cx.dimension - 1).mean(axis=1))
    return Hypersurface(get_dec(cx, metric), minus, window=window, face_window=face_window,
                        label=label or f"angle:{theta1:g}:{theta2:g}")


def parse_cut(text: str, complex: SimplicialComplex, metric: MetricData) -> Hypersurface:
    """Cut from a string: "x:0.5" (axis level), "radial:1.5", or "angle:t1:t2"."""
    parts = text.split(":")
    kind = parts[0]
    try:
        if kind in ("x", "y", "z", "w") and len(parts) == 2:
            axis = "xyzw".index(kind)
            if axis >= metric.cell_coords.shape[2]:
                raise CutError(f"axis {kind} not available in this mesh")
            return cut_from_level(complex, metric, lambda p: p[:, axis], float(parts[1]),
                                  label=text)
        if kind == "radial" and len(parts) == 2:
            return cut_from_level(complex, metric,
                                  lambda p: np.hypot(p[:, 0], p[:, 1]), float(parts[1]),
                                  label=text)
        if kind == "angle" and len(parts) == 3:
            return slit_cut(complex, metric, float(parts[1]), float(parts[2]), label=text)
    except ValueError as exc:
        if isinstance(exc, CutError):
            raise
        raise CutError(f"bad cut {text!r}: {exc}") from exc
    raise CutError(f"unknown cut {text!r}")


# ------------------------------------------------------- pairings, observables
def flux_pairing(cut: Hypersurface, v, w) -> float:
    """Discrete flux of *dv through the cut, paired with w."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return float(w @ (cut.operator @ v))


def _eta(eta) -> np.ndarray:
    return eta.eta if isinstance(eta, Connection) else np.asarray(eta, dtype=float)


def helicity_observable(phi, cut: Hypersurface, eta) -> float:
    """Antisymmetrized relative helicity (Flux(phi; eta) - Flux(eta; phi)) / 2."""
    e = _eta(eta)
    return 0.5 * (flux_pairing(cut, phi, e) - flux_pairing(cut, e, phi))


def symplectic_pairing(cut: Hypersurface, eta, v, w) -> float:
    """omega(v, w) = (Flux(w; v) - Flux(v; w)) / 2; does not depend on eta."""
    return 0.5 * (flux_pairing(cut, w, v) - flux_pairing(cut, v, w))


def presymplectic_potential(cut: Hypersurface, eta, v) -> float:
    """theta[eta](v) = -Flux(v; eta)."""
    return -flux_pairing(cut, v, _eta(eta))


@dataclass
class Observable:
    """Affine function eta -> f(eta) = helicity_observable(phi, cut, eta) + constant.

    A zero generator gives a constant observable (the value of a bracket).
    """

    phi: np.ndarray
    cut: Hypersurface
    label: str = "phi"
    constant: float = 0.0
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        if np.any(self.phi):
            ok, res = is_solution(Connection(self.cut.dec, self.phi), tol=None)
            scale = 1.0 + float(np.abs(self.cut.dec.stiffness.matrix @ np.abs(self.phi)).max())
            if res > 1e-9 * scale:
                self.warnings.append(f"generator residual {res:.3e} (not a solution)")

    @property
    def is_constant(self) -> bool:
        return not np.any(self.phi)

    def __call__(self, eta) -> float:
        if self.is_constant:
            return self.constant
        return helicity_observable(self.phi, self.cut, eta) + self.constant


def lie_derivative(obs: Observable, eta, w, mode: str = "exact", eps: float = FD_EPS) -> float:
    """Directional derivative of an observable along w at eta.

    "exact" uses f(eta + w) - f(eta), exact for affine observables; "fd" uses
    a central difference with step eps.
    """
    e = _eta(eta)
    w = np.asarray(w, dtype=float)
    if mode == "exact":
        return obs(e + w) - obs(e)
    if mode == "fd":
        return (obs(e + eps * w) - obs(e - eps * w)) / (2 * eps)
    raise ValueError("mode must be 'exact' or 'fd'")


def poisson_bracket(obs1: Observable, obs2: Observable) -> float:
    """{f1, f2}: the derivative of f1 along the generator of f2 (a constant)."""
    if obs1.cut is not obs2.cut:
        raise CutError("bracket needs observables on the same cut")
    if obs1.is_constant or obs2.is_constant:
        return 0.0
    return symplectic_pairing(obs1.cut, None, obs2.phi, obs1.phi)


def bracket_observable(obs1: Observable, obs2: Observable) -> Observable:
    """The bracket as a constant observable on the common cut."""
    value = poisson_bracket(obs1, obs2)
    return Observable(np.zeros_like(obs1.phi), obs1.cut, f"{{{obs1.label},{obs2.label}}}", value)


def hamilton_check(obs: Observable, eta, w) -> dict:
    """|L_w f(eta) + omega(phi, w)| for a linearized solution w."""
    lie = lie_derivative(obs, eta, w)
    om = symplectic_pairing(obs.cut, eta, obs.phi, w)
    return {"lie_derivative": lie, "omega": om, "discrepancy": abs(lie + om)}


# ---------------------------------------------------------------- generators
def generator(name: str, complex: SimplicialComplex, metric: MetricData, seed: int = 0) -> np.ndarray:
    """Named linearized solution: harmonicK, dirichletK, gK (seeded random), uniform."""
    if name == "uniform":
        return uniform_field(complex, metric)
    for prefix, flavor in (("harmonic", "neumann"), ("dirichlet", "dirichlet")):
        if name.startswith(prefix) and name[len(prefix):].isdigit():
            k = int(name[len(prefix):])
            H = harmonic_basis(complex, metric, flavor)
            if k >= H.shape[1]:
                raise ValueError(f"{name}: only {H.shape[1]} {flavor} harmonic fields")
            return H[:, k]
    if name.startswith("g") and name[1:].isdigit():
        rng = np.random.default_rng([seed, int(name[1:])])
        return random_solution(complex, metric, rng)
    raise ValueError(f"unknown generator {name!r}")


def standard_generators(complex: SimplicialComplex, metric: MetricData, seed: int = 0,
                        n_random: int = 3) -> list[tuple[str, np.ndarray]]:
    out = []
    b = betti_numbers(complex)
    b_rel = betti_numbers(complex, relative=True)
    out += [(f"harmonic{k}", generator(f"harmonic{k}", complex, metric)) for k in range(b[1])]
    out += [(f"dirichlet{k}", generator(f"dirichlet{k}", complex, metric)) for k in range(b_rel[1])]
    if metric.embedded:
        out.append(("uniform", uniform_field(complex, metric)))
    out += [(f"g{k}", generator(f"g{k}", complex, metric, seed)) for k in range(n_random)]
    return out


def standard_cuts(complex: SimplicialComplex, metric: MetricData) -> list[Hypersurface]:
    """Coordinate level cuts at several heights, plus angular slits on non-simply connected meshes."""
    cuts = []
    bary = metric.cell_barycenters()
    for axis in range(min(metric.cell_coords.shape[2], complex.dimension)):
        vals = bary[:, axis]
        lo, hi = vals.min(), vals.max()
        for frac in (0.5, 0.3, 0.7):
            level = _generic_level(vals, lo + frac * (hi - lo))
            try:
                cuts.append(cut_from_level(complex, metric, lambda p, a=axis: p[:, a], level,
                                           label=f"{'xyzw'[axis]}:{level:.6g}"))
            except CutError:
                pass
    if metric.embedded and (betti_numbers(complex)[1] or betti_numbers(complex, True)[1]):
        for t in (0.0, np.pi / 2):
            try:
                cuts.append(slit_cut(complex, metric, t, t + np.pi))
            except CutError:
                pass
    return cuts


def _generic_level(values, level):
    vals = np.unique(values)
    i = np.searchsorted(vals, level)
    if 0 < i < len(vals):
        return 0.5 * (vals[i - 1] + vals[i])
    return level


# ------------------------------------------------------------- separation
@dataclass
class SeparationCertificate:
    verdict: str  # "gauge", "separated" or "undecided"
    witness: np.ndarray | None = None
    generator: str | None = None
    cut: str | None = None
    values: tuple | None = None
    difference: float = 0.0
    threshold: float = 0.0
    searched: int = 0

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "generator": self.generator,
            "cut": self.cut,
            "values": None if self.values is None else list(self.values),
            "difference": self.difference,
            "threshold": self.threshold,
            "searched": self.searched,
            "has_witness": self.witness is not None,
        }


def separation_certificate(eta: Connection, eta_prime: Connection, generators=None, cuts=None,
                           threshold: float | None = None, seed: int = 0) -> SeparationCertificate:
    """Gauge witness, or a (generator, cut) pair whose observable tells eta and eta' apart.

    Candidates are searched generator-major in the given order; the first
    hit wins. Exhausting the search gives the explicit verdict "undecided".
    """
    verdict = gauge_equivalent(eta, eta_prime)
    if verdict.equivalent:
        return SeparationCertificate("gauge", witness=verdict.witness)
    dec = eta.dec
    cx, metric = dec.complex, dec.metric
    if threshold is None:
        threshold = 1e-6 * (dec.norm(eta.eta, 1) + dec.norm(eta_prime.eta, 1) + 1.0)
    generators = standard_generators(cx, metric, seed) if generators is None else generators
    cuts = standard_cuts(cx, metric) if cuts is None else cuts
    count = 0
    for gname, phi in generators:
        for cut in cuts:
            count += 1
            a = helicity_observable(phi, cut, eta)
            b = helicity_observable(phi, cut, eta_prime)
            if abs(a - b) > threshold:
                return SeparationCertificate("separated", generator=gname, cut=cut.label,
                                             values=(a, b), difference=b - a,
                                             threshold=threshold, searched=count)
    return SeparationCertificate("undecided", threshold=threshold, searched=count)


def radial_holonomy(complex: SimplicialComplex, metric: MetricData, h) -> float:
    """Integral of a closed 1-cochain along an edge path from the inner to the outer annulus circle.

    The path is a shortest path in the edge graph, from the boundary vertex
    of smallest radius to the boundary vertex of largest radius.
    """
    h = np.asarray(h, dtype=float)
    e = complex.simplices(1)
    nv = complex.n_vertices
    r = np.hypot(metric.coords[:, 0], metric.coords[:, 1])
    bv = np.flatnonzero(complex.boundary_mask(0))
    src, dst = bv[np.argmin(r[bv])], bv[np.argmax(r[bv])]
    length = metric.volumes[1]
    graph = sp.coo_matrix((np.concatenate([length, length]),
                           (np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]]))),
                          shape=(nv, nv)).tocsr()
    _, pred = dijkstra(graph, indices=src, return_predecessors=True)
    total, v = 0.0, dst
    while v != src:
        u = pred[v]
        if u < 0:
            raise ValueError("boundary circles are not connected")
        idx = complex.index(1, [[u, v]])[0]
        total += h[idx] if u < v else -h[idx]
        v = u
    return total


def aharonov_bohm_oracle(complex: SimplicialComplex, metric: MetricData, phi, h) -> float:
    """Predicted jump of f^phi across a slit when eta moves by a closed field h.

    Valid for a generator phi of constant curvature c: the jump is
    c/2 times the integral of h along the slit.
    """
    dec = get_dec(complex, metric)
    dphi = dec.d(np.asarray(phi, dtype=float), 1)
    density = dphi / metric.volumes[complex.dimension] * complex.cell_orientation
    if np.ptp(density) > 1e-9 * (1.0 + np.abs(density).max()):
        raise ValueError("generator curvature is not constant")
    return 0.5 * float(density.mean()) * radial_holonomy(complex, metric, h)


# -------------------------------------------------------- coordinate current
@dataclass
class Grid:
    """Vertex lattice of a structured box mesh."""

    axes: list
    index: np.ndarray  # grid multi-index -> vertex id

    @classmethod
    def of(cls, metric: MetricData) -> "Grid":
        cx = metric.complex
        if not metric.embedded or metric.coords.shape[1] != cx.dimension:
            raise ValueError("coordinate current needs a structured box mesh")
        axes, pos = [], []
        for k in range(cx.dimension):
            u, inv = np.unique(np.round(metric.coords[:, k], 12), return_inverse=True)
            axes.append(u)
            pos.append(inv)
        shape = tuple(len(a) for a in axes)
        if int(np.prod(shape)) != cx.n_vertices:
            raise ValueError("coordinate current needs a structured box mesh")
        index = np.full(shape, -1, dtype=np.int64)
        index[tuple(pos)] = np.arange(cx.n_vertices)
        if np.any(index < 0):
            raise ValueError("coordinate current needs a structured box mesh")
        for a in axes:
            if len(a) < 3 or not np.allclose(np.diff(a), a[1] - a[0]):
                raise ValueError("coordinate current needs a uniform grid with >= 2 cells per axis")
        return cls(axes, index)

    @property
    def spacing(self) -> list[float]:
        return [a[1] - a[0] for a in self.axes]

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def sample(self, fld) -> np.ndarray:
        pts = self.points()
        flat = pts.reshape(-1, pts.shape[-1])
        return np.asarray(fld(flat), dtype=float).reshape(pts.shape)

    def gradient(self, comps) -> np.ndarray:
        """d comps[..., j] / d x_i as array [..., i, j] (centered differences)."""
        n = len(self.axes)
        out = np.empty(comps.shape[:-1] + (n, comps.shape[-1]))
        for j in range(comps.shape[-1]):
            g = np.gradient(comps[..., j], *self.spacing, edge_order=2)
            for i in range(n):
                out[..., i, j] = g[i]
        return out


def current_density(phi_comps, a_comps, grad_phi, grad_a) -> np.ndarray:
    """F^i = sum_j phi^j (d_i A^j - d_j A^i) - A^j (d_i phi^j - d_j phi^i) on a flat grid."""
    FA = grad_a - np.swapaxes(grad_a, -1, -2)  # [..., i, j] = d_i A^j - d_j A^i
    Fphi = grad_phi - np.swapaxes(grad_phi, -1, -2)
    return np.einsum("...j,...ij->...i", phi_comps, FA) - np.einsum("...j,...ij->...i", a_comps, Fphi)


def helicity_current_coordinate(complex: SimplicialComplex, metric: MetricData, phi_field, eta_field,
                                axis: int = 0, level: float | None = None) -> dict:
    """Coordinate helicity current through a grid hyperplane vs the flux-pairing kernel.

    The vector fields are sampled on the vertex grid, differentiated by
    centered differences and the normal component of the current is
    integrated over the hyperplane x_axis = level (a grid plane) with the
    trapezoid rule. The pairing side uses the exact edge integrals of the
    same fields and the cut S- = {x_axis < level}; its value is
    Flux(eta; phi) - Flux(phi; eta) = -2 f^phi(eta).
    """
    grid = Grid.of(metric)
    dec = get_dec(complex, metric)
    ax = grid.axes[axis]
    if level is None:
        level = ax[len(ax) // 2]
    k = int(np.argmin(np.abs(ax - level)))
    if not np.isclose(ax[k], level) or k == 0 or k == len(ax) - 1:
        raise ValueError("level must be an interior grid plane")
    phi_c, a_c = grid.sample(phi_field), grid.sample(eta_field)
    F = current_density(phi_c, a_c, grid.gradient(phi_c), grid.gradient(a_c))
    normal = np.take(F[..., axis], k, axis=axis)
    weights = np.ones(normal.shape)
    for d, h in enumerate([s for i, s in enumerate(grid.spacing) if i != axis]):
        w1 = np.full(normal.shape[d], h)
        w1[[0, -1]] *= 0.5
        shape = [1] * normal.ndim
        shape[d] = -1
        weights = weights * w1.reshape(shape)
    coord_flux = float(np.sum(weights * normal))

    phi = dec.sample_one_form(phi_field)
    eta = dec.sample_one_form(eta_field)
    cut = cut_from_level(complex, metric, lambda p: p[:, axis], float(ax[k]))
    pairing = flux_pairing(cut, eta, phi) - flux_pairing(cut, phi, eta)
    return {
        "density": F,
        "coordinate_flux": coord_flux,
        "pairing_flux": pairing,
        "observable": helicity_observable(phi, cut, eta),
        "discrepancy": abs(coord_flux - pairing),
        "h": max(grid.spacing),
    }


def commutator_field(complex: SimplicialComplex, metric: MetricData, phi1_field, phi2_field,
                     cut: Hypersurface | None = None, etas=None) -> dict:
    """Coordinate bracket phi~^j = phi1^i d_i phi2^j - phi2^i d_i phi1^j and its observable spread.

    The vector field is computed by centered differences on the vertex grid
    and turned into a 1-cochain by the trapezoid rule along edges. When a cut
    and a list of solutions are given, the values of the phi~ observable on
    those solutions are reported with their spread (max - min).
    """
    grid = Grid.of(metric)
    p1, p2 = grid.sample(phi1_field), grid.sample(phi2_field)
    g1, g2 = grid.gradient(p1), grid.gradient(p2)
    tilde = np.einsum("...i,...ij->...j", p1, g2) - np.einsum("...i,...ij->...j", p2, g1)
    flat = np.zeros((complex.n_vertices, tilde.shape[-1]))
    flat[grid.index.ravel()] = tilde.reshape(-1, tilde.shape[-1])
    e = complex.simplices(1)
    dx = metric.coords[e[:, 1]] - metric.coords[e[:, 0]]
    cochain = 0.5 * np.einsum("ij,ij->i", flat[e[:, 0]] + flat[e[:, 1]], dx)
    out = {"cochain": cochain, "max_abs": float(np.abs(cochain).max(initial=0.0))}
    if cut is not None and etas:
        vals = [helicity_observable(cochain, cut, eta) for eta in etas]
        scale = max(1.0, max(abs(v) for v in vals))
        out.update(values=vals, spread=float(max(vals) - min(vals)),
                   relative_spread=float((max(vals) - min(vals)) / scale))
    return out
