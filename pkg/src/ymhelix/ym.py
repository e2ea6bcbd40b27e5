"""Discrete abelian Yang-Mills fields on a mesh with boundary.

A connection is a 1-cochain eta = eta0 + phi. It solves the discrete field
equations when (K eta)(e) = 0 on every interior edge, where K = d1^T *2 d1.
Interior edges are edges not contained in the boundary subcomplex; interior
gauge transformations are vertex functions vanishing on boundary vertices.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .dec import DEC
from .geometry.complex import SimplicialComplex
from .geometry.homology import betti_numbers
from .geometry.metric import MetricData
from .solver import (DEFAULT_TOL, SolveReport, SolverError, nullspace, numerical_rank,
                     solve_spsd)


def get_dec(complex: SimplicialComplex, metric: MetricData) -> DEC:
    """DEC operators for a mesh, cached on the metric object."""
    dec = metric.__dict__.get("_dec")
    if dec is None or dec.complex is not complex:
        dec = DEC(complex, metric)
        metric.__dict__["_dec"] = dec
    return dec


class Mesh:
    """Index sets and operators shared by the field-theory routines."""

    def __init__(self, dec: DEC):
        self.dec = dec
        self.complex = dec.complex
        self.metric = dec.metric
        cx = self.complex
        self.bedge_mask = cx.boundary_mask(1)
        self.bvert_mask = cx.boundary_mask(0)
        self.bedges = np.flatnonzero(self.bedge_mask)
        self.iedges = np.flatnonzero(~self.bedge_mask)
        self.bverts = np.flatnonzero(self.bvert_mask)
        self.iverts = np.flatnonzero(~self.bvert_mask)

    @classmethod
    def of(cls, complex_or_dec, metric=None) -> "Mesh":
        dec = complex_or_dec if isinstance(complex_or_dec, DEC) else get_dec(complex_or_dec, metric)
        mesh = dec.__dict__.get("_mesh")
        if mesh is None:
            mesh = cls(dec)
            dec.__dict__["_mesh"] = mesh
        return mesh

    @property
    def K(self) -> sp.csr_matrix:
        return self.dec.stiffness.matrix

    @cached_property
    def d0(self) -> sp.csr_matrix:
        return self.dec.d_matrix(0)

    @cached_property
    def gauge_operator(self) -> sp.csr_matrix:
        """d0^T *1 (the weighted divergence, without the *0 factor)."""
        return (self.d0.T @ sp.diags(self.dec.star(1))).tocsr()

    @cached_property
    def laplacian0(self) -> sp.csr_matrix:
        return self.dec.laplacian0()

    @cached_property
    def vertex_components(self) -> np.ndarray:
        e = self.complex.simplices(1)
        nv = self.complex.n_vertices
        adj = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(nv, nv))
        return connected_components(adj, directed=False)[1]

    def component_kernel(self) -> np.ndarray:
        labels = self.vertex_components
        k = labels.max() + 1
        basis = np.zeros((len(labels), k))
        basis[np.arange(len(labels)), labels] = 1.0
        return basis / np.sqrt(basis.sum(axis=0))

    def interior_residual(self, eta) -> np.ndarray:
        return (self.K @ eta)[self.iedges]

    def codifferential(self, phi) -> np.ndarray:
        return self.dec.delta(phi, 1)

    def project_out(self, phi, basis) -> np.ndarray:
        """*1-orthogonal projection removing a *1-orthonormal basis (columns)."""
        if basis is None or basis.shape[1] == 0:
            return phi
        w = self.dec.star(1)
        return phi - basis @ (basis.T @ (w * phi))


# ----------------------------------------------------------------- data types
@dataclass
class Connection:
    """Affine point eta = eta0 + phi of the space of discrete connections."""

    dec: DEC
    phi: np.ndarray
    eta0: np.ndarray | None = None

    def __post_init__(self):
        m = self.dec.complex.count(1)
        self.phi = np.asarray(self.phi, dtype=float)
        if self.phi.shape != (m,):
            raise ValueError("phi must have one value per edge")
        if self.eta0 is None:
            self.eta0 = np.zeros(m)
        self.eta0 = np.asarray(self.eta0, dtype=float)
        if self.eta0.shape != (m,):
            raise ValueError("eta0 must have one value per edge")

    @property
    def eta(self) -> np.ndarray:
        return self.eta0 + self.phi

    def shifted(self, w, t: float = 1.0) -> "Connection":
        return Connection(self.dec, self.phi + t * np.asarray(w, dtype=float), self.eta0)

    def rebased(self, eta0) -> "Connection":
        """Same connection written over a different base point."""
        eta0 = np.asarray(eta0, dtype=float)
        return Connection(self.dec, self.eta - eta0, eta0)


@dataclass
class GaugeTransformation:
    f: np.ndarray
    interior: bool

    @classmethod
    def classify(cls, mesh: Mesh, f, tol: float = 0.0) -> "GaugeTransformation":
        f = np.asarray(f, dtype=float)
        return cls(f, bool(np.all(np.abs(f[mesh.bverts]) <= tol)))

    def act(self, mesh: Mesh, eta) -> np.ndarray:
        return np.asarray(eta) + mesh.d0 @ self.f


@dataclass
class BoundaryData:
    """Dirichlet trace (eta on boundary edges) and Neumann trace (K eta on boundary edges).

    K eta on a boundary edge is the discrete flux of *d eta through the
    boundary at that edge: it is the boundary term of the discrete Green
    identity <d v, d w> = sum_e w(e) (K v)(e).
    """

    dirichlet: np.ndarray
    neumann: np.ndarray

    @classmethod
    def of(cls, mesh: Mesh, eta) -> "BoundaryData":
        eta = np.asarray(eta, dtype=float)
        return cls(eta[mesh.bedges].copy(), (mesh.K @ eta)[mesh.bedges])

    def to_json(self) -> str:
        return json.dumps({"degree": 1, "dirichlet": self.dirichlet.tolist(),
                           "neumann": self.neumann.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "BoundaryData":
        data = json.loads(text)
        return cls(np.asarray(data["dirichlet"], float), np.asarray(data["neumann"], float))


@dataclass
class HmfDecomposition:
    exact_dirichlet: np.ndarray
    harmonic_neumann: np.ndarray
    harmonic_exact: np.ndarray
    coexact_neumann: np.ndarray
    residual: float
    coexact_residual: float
    orthogonality: dict = field(default_factory=dict)

    @property
    def parts(self) -> list[np.ndarray]:
        return [self.exact_dirichlet, self.harmonic_neumann, self.harmonic_exact,
                self.coexact_neumann]


@dataclass
class ModuliReport:
    solution_space_dim: int
    interior_gauge_dim: int
    dim_h1_neumann: int
    dim_h1_dirichlet: int
    domain_dim: int
    rank: int
    kernel_dim: int
    reduced_kernel_dim: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class GaugeVerdict:
    equivalent: bool
    witness: np.ndarray | None
    residual: float
    mode: str


# ------------------------------------------------------------------ solutions
def solve_ym(complex: SimplicialComplex, metric: MetricData, dirichlet, tol: float = DEFAULT_TOL,
             eta0=None) -> tuple[Connection, SolveReport]:
    """Solve (K eta)(e) = 0 on interior edges with eta prescribed on boundary edges.

    The returned phi (eta = eta0 + phi) is in Dirichlet Lorentz gauge
    (coclosed at interior vertices) and orthogonal to the harmonic Dirichlet
    fields, which makes it unique. ``report.kernel_dim`` is the dimension of
    that harmonic Dirichlet space, the freedom left by the boundary data.
    """
    mesh = Mesh.of(complex, metric)
    dirichlet = np.asarray(dirichlet, dtype=float)
    if dirichlet.shape != (len(mesh.bedges),):
        raise ValueError(f"dirichlet data needs {len(mesh.bedges)} boundary-edge values")
    m = complex.count(1)
    eta0 = np.zeros(m) if eta0 is None else np.asarray(eta0, dtype=float)
    # eta = eta0 + phi: solve for phi with the shifted boundary values
    b = -(mesh.K @ eta0)
    eta_b = dirichlet - eta0[mesh.bedges]
    phi, report = solve_spsd(mesh.K, b, fixed=(mesh.bedges, eta_b), tol=tol)
    phi, _ = lorentz_gauge_fix(mesh, phi, "dirichlet", tol=tol)
    b1_rel = betti_numbers(complex, relative=True)[1]
    if b1_rel:
        phi = mesh.project_out(phi, harmonic_basis(complex, metric, "dirichlet"))
    report.kernel_dim = b1_rel
    conn = Connection(mesh.dec, phi, eta0)
    ok, res = is_solution(conn, tol=None)
    report.residual = res
    return conn, report


def is_solution(eta: Connection, tol: float | None = 1e-10) -> tuple[bool, float]:
    """Maximum interior-edge residual of K eta; verdict against ``tol``."""
    mesh = Mesh.of(eta.dec)
    res = mesh.interior_residual(eta.eta)
    r = float(np.abs(res).max()) if len(res) else 0.0
    return (True if tol is None else r <= tol), r


def radial_variation(eta: Connection) -> np.ndarray:
    """The radial vector field evaluated at eta: the fiber coordinates of eta itself."""
    return eta.eta.copy()


def lorentz_gauge_fix(mesh_or_complex, phi, flavor: str = "dirichlet", metric=None,
                      tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Return (phi - d psi, psi) with phi - d psi coclosed.

    dirichlet: psi vanishes on boundary vertices and the result is coclosed at
    interior vertices. neumann: psi is free (mean zero per component) and the
    result is coclosed at every vertex.
    """
    mesh = mesh_or_complex if isinstance(mesh_or_complex, Mesh) else Mesh.of(mesh_or_complex, metric)
    phi = np.asarray(phi, dtype=float)
    L = mesh.laplacian0
    rhs = mesh.gauge_operator @ phi
    if flavor == "dirichlet":
        psi, _ = solve_spsd(L, rhs, fixed=(mesh.bverts, 0.0), tol=tol) if np.any(rhs[mesh.iverts]) \
            else (np.zeros(len(rhs)), None)
    elif flavor == "neumann":
        kernel = mesh.component_kernel()
        if np.linalg.norm(kernel.T @ rhs) > 1e-8 * max(np.linalg.norm(rhs), 1e-300):
            raise SolverError("Neumann gauge problem violates compatibility")
        psi, _ = solve_spsd(L, rhs, tol=tol, kernel=kernel) if np.any(rhs) \
            else (np.zeros(len(rhs)), None)
    else:
        raise ValueError("flavor must be 'dirichlet' or 'neumann'")
    return phi - mesh.d0 @ psi, psi


def gauge_equivalent(eta: Connection, eta_prime: Connection, tol: float = 1e-9,
                     mode: str = "interior") -> GaugeVerdict:
    """Decide whether eta' - eta = d f.

    mode "interior" requires f = 0 on boundary vertices (the gauge group that
    acts trivially on the boundary); mode "free" allows any f.
    """
    if eta.dec is not eta_prime.dec:
        raise ValueError("connections live on different meshes")
    mesh = Mesh.of(eta.dec)
    diff = eta_prime.eta - eta.eta
    scale = 1.0 + float(np.abs(diff).max(initial=0.0))
    L = mesh.laplacian0
    rhs = mesh.gauge_operator @ diff
    if not np.any(diff):
        return GaugeVerdict(True, np.zeros(mesh.complex.n_vertices), 0.0, mode)
    if mode == "interior":
        if np.abs(diff[mesh.bedges]).max(initial=0.0) > tol * scale:
            r = float(np.abs(diff[mesh.bedges]).max())
            return GaugeVerdict(False, None, r, mode)
        f, _ = solve_spsd(L, rhs, fixed=(mesh.bverts, 0.0))
    elif mode == "free":
        f, _ = solve_spsd(L, rhs, kernel=mesh.component_kernel())
    else:
        raise ValueError("mode must be 'interior' or 'free'")
    r = float(np.abs(mesh.d0 @ f - diff).max())
    ok = r <= tol * scale
    return GaugeVerdict(ok, f if ok else None, r, mode)


# ------------------------------------------------------- harmonic fields, HMF
def harmonic_basis(complex: SimplicialComplex, metric: MetricData, flavor: str = "neumann",
                   cap: int | None = None) -> np.ndarray:
    """*1-orthonormal basis (columns) of the discrete harmonic Neumann or Dirichlet fields.

    neumann: closed 1-cochains coclosed at every vertex (absolute conditions).
    dirichlet: closed 1-cochains vanishing on boundary edges and coclosed at
    interior vertices (relative conditions).
    """
    key = ("harmonic", flavor)
    cache = metric.__dict__.setdefault("_ym_cache", {})
    if key in cache:
        return cache[key]
    mesh = Mesh.of(complex, metric)
    dec = mesh.dec
    s1, s0 = dec.star(1), dec.star(0)
    d1 = dec.d_matrix(1)
    d0 = mesh.d0
    if flavor == "neumann":
        edges, verts = np.arange(complex.count(1)), np.arange(complex.n_vertices)
    elif flavor == "dirichlet":
        edges, verts = mesh.iedges, mesh.iverts
    else:
        raise ValueError("flavor must be 'neumann' or 'dirichlet'")
    D1 = d1[:, edges]
    D0 = d0[edges][:, verts]
    w2 = dec.star(2)
    curl = D1.T @ sp.diags(w2) @ D1
    div = sp.diags(s1[edges]) @ D0 @ sp.diags(1.0 / s0[verts]) @ D0.T @ sp.diags(s1[edges])
    kwargs = {} if cap is None else {"cap": cap}
    vecs = nullspace((curl + div).tocsr(), mass=s1[edges], **kwargs)
    out = np.zeros((complex.count(1), vecs.shape[1]))
    out[edges] = vecs
    cache[key] = out
    return out


def hmf_decompose(complex: SimplicialComplex, metric: MetricData, alpha,
                  tol: float = DEFAULT_TOL) -> HmfDecomposition:
    """Split a 1-cochain into exact-Dirichlet, harmonic-Neumann, harmonic-exact and coexact parts."""
    mesh = Mesh.of(complex, metric)
    dec = mesh.dec
    alpha = np.asarray(alpha, dtype=float)
    L = mesh.laplacian0
    rhs = mesh.gauge_operator @ alpha
    # (i) projection onto d of vertex functions vanishing on the boundary
    if np.any(rhs[mesh.iverts]):
        psi_d, _ = solve_spsd(L, rhs, fixed=(mesh.bverts, 0.0), tol=tol)
    else:
        psi_d = np.zeros(complex.n_vertices)
    exact_d = mesh.d0 @ psi_d
    # (ii) projection onto the harmonic Neumann fields
    H = harmonic_basis(complex, metric, "neumann")
    harm_n = H @ (H.T @ (dec.star(1) * alpha)) if H.shape[1] else np.zeros_like(alpha)
    # (iii) full exact projection minus (i)
    if np.any(rhs):
        psi_all, _ = solve_spsd(L, rhs, kernel=mesh.component_kernel(), tol=tol)
    else:
        psi_all = np.zeros(complex.n_vertices)
    harm_e = mesh.d0 @ psi_all - exact_d
    # (iv) remainder, checked against the range of the codifferential on 2-cochains
    coex = alpha - exact_d - harm_n - harm_e
    coex_res = _coexact_residual(dec, coex, tol)
    recon = alpha - (exact_d + harm_n + harm_e + coex)
    parts = [exact_d, harm_n, harm_e, coex]
    names = ["exact_dirichlet", "harmonic_neumann", "harmonic_exact", "coexact_neumann"]
    ortho = {}
    for i in range(4):
        for j in range(i + 1, 4):
            ni, nj = dec.norm(parts[i], 1), dec.norm(parts[j], 1)
            ip = dec.inner(parts[i], parts[j], 1)
            ortho[f"{names[i]}|{names[j]}"] = abs(ip) / (ni * nj) if ni * nj > 0 else 0.0
    anorm = dec.norm(alpha, 1)
    return HmfDecomposition(exact_d, harm_n, harm_e, coex,
                            residual=dec.norm(recon, 1) / anorm if anorm else 0.0,
                            coexact_residual=coex_res, orthogonality=ortho)


def _coexact_residual(dec: DEC, r: np.ndarray, tol: float) -> float:
    """Relative distance from r to the range of *1^-1 d1^T *2 (best fit in the *1 norm)."""
    rn = dec.norm(r, 1)
    if rn == 0:
        return 0.0
    d1 = dec.d_matrix(1)
    s1, s2 = dec.star(1), dec.star(2)
    B = sp.diags(1.0 / s1) @ d1.T @ sp.diags(s2)
    A = (B.T @ sp.diags(s1) @ B).tocsr()
    rhs = B.T @ (s1 * r)
    chi, _ = solve_spsd(A, rhs, tol=tol, maxiter=20 * A.shape[0])
    return dec.norm(B @ chi - r, 1) / rn


# ---------------------------------------------------------------- moduli
def linearized_solution_space(complex: SimplicialComplex, metric: MetricData,
                              gauge: str = "dirichlet") -> np.ndarray:
    """Basis (columns) of gauge-fixed discrete linearized solutions.

    gauge "dirichlet": K phi = 0 on interior edges and phi coclosed at
    interior vertices (solutions modulo interior gauge). gauge "neumann":
    coclosed at every vertex (solutions modulo all gauge transformations).
    """
    mesh = Mesh.of(complex, metric)
    verts = mesh.iverts if gauge == "dirichlet" else np.arange(complex.n_vertices)
    M = sp.vstack([mesh.K[mesh.iedges], mesh.gauge_operator[verts]]).toarray()
    return _dense_null(M)


def _dense_null(M: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    if M.shape[0] == 0:
        return np.eye(M.shape[1])
    return sla.null_space(M, rcond=rtol)


def boundary_map(complex: SimplicialComplex, metric: MetricData) -> tuple[np.ndarray, ModuliReport, np.ndarray]:
    """Matrix of (solution mod interior gauge) -> (Dirichlet trace, Neumann trace).

    Returns (matrix, report, kernel basis in edge coordinates). The domain is
    the gauge-fixed solution space of :func:`linearized_solution_space`; the
    kernel is the space of harmonic Dirichlet fields. ``reduced_kernel_dim``
    additionally reports the kernel after quotienting by all gauge
    transformations and reducing the Dirichlet trace modulo boundary-exact
    cochains.
    """
    mesh = Mesh.of(complex, metric)
    V = linearized_solution_space(complex, metric, "dirichlet")
    KV = mesh.K @ V
    R = np.vstack([V[mesh.bedges], KV[mesh.bedges]])
    rank = numerical_rank(R)
    null = _dense_null(R) if R.size else np.zeros((V.shape[1], 0))
    kernel = V @ null

    # reduced variant: full gauge quotient, Dirichlet trace modulo boundary-exact cochains
    W = linearized_solution_space(complex, metric, "neumann")
    dB = mesh.d0[mesh.bedges][:, mesh.bverts].toarray()
    Q = _dense_null(dB.T) if dB.size else np.eye(len(mesh.bedges))
    R2 = np.vstack([Q.T @ W[mesh.bedges], (mesh.K @ W)[mesh.bedges]])
    reduced_kernel = W.shape[1] - numerical_rank(R2)

    b = betti_numbers(complex)
    b_rel = betti_numbers(complex, relative=True)
    interior_gauge = numerical_rank(mesh.d0[:, mesh.iverts].toarray()) if len(mesh.iverts) else 0
    report = ModuliReport(
        solution_space_dim=interior_gauge + b_rel[1],
        interior_gauge_dim=interior_gauge,
        dim_h1_neumann=harmonic_basis(complex, metric, "neumann").shape[1],
        dim_h1_dirichlet=harmonic_basis(complex, metric, "dirichlet").shape[1],
        domain_dim=V.shape[1],
        rank=rank,
        kernel_dim=V.shape[1] - rank,
        reduced_kernel_dim=reduced_kernel,
    )
    if report.dim_h1_neumann != b[1] or report.dim_h1_dirichlet != b_rel[1]:
        report_msg = (f"harmonic dimensions ({report.dim_h1_neumann}, {report.dim_h1_dirichlet}) "
                      f"disagree with Betti numbers ({b[1]}, {b_rel[1]})")
        raise SolverError(report_msg)
    return R, report, kernel


# ------------------------------------------------------------ generators
def random_solution(complex: SimplicialComplex, metric: MetricData, rng, scale: float = 1.0):
    """Solution with random boundary data, in Dirichlet Lorentz gauge."""
    mesh = Mesh.of(complex, metric)
    data = scale * rng.standard_normal(len(mesh.bedges))
    conn, _ = solve_ym(complex, metric, data)
    return conn.eta


def uniform_field(complex: SimplicialComplex, metric: MetricData, axes=(0, 1)) -> np.ndarray:
    """Exact edge integrals of the potential (x_a dx_b - x_b dx_a) / 2 (constant curvature).

    Its curvature is constant, so it solves the field equations on flat meshes
    in any dimension. Requires an embedded mesh.
    """
    if not metric.embedded:
        raise ValueError("uniform field needs embedded coordinates")
    a, b = axes
    e = complex.simplices(1)
    p, q = metric.coords[e[:, 0]], metric.coords[e[:, 1]]
    # the potential is linear, so the midpoint rule is exact
    mid = 0.5 * (p + q)
    dx = q - p
    return 0.5 * (mid[:, a] * dx[:, b] - mid[:, b] * dx[:, a])

