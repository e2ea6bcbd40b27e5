"""Invariant suite: every structural identity checked on one mesh, as pass/fail records."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .geometry import betti_numbers
from .gluing import glue, glue_solutions, restrict, split
from .observables import (Observable, aharonov_bohm_oracle, bracket_observable, cut_from_level,
                          helicity_observable, lie_derivative, poisson_bracket,
                          separation_certificate, slit_cut, symplectic_pairing, _generic_level)
from .solver import DEFAULT_TOL
from .studies import build_mesh, helicity_field
from .ym import (Connection, Mesh, boundary_map, harmonic_basis, hmf_decompose,
                 lorentz_gauge_fix, random_solution, solve_ym, uniform_field)

# standard meshes and their default resolutions
SUITE = {"box2": 8, "box3": 4, "annulus": 3, "torus": 3, "periodic3": 4}

TOLERANCES = {
    "energy_identity": 1e-12,
    "solve_residual": 1e-10,
    "coclosed": 1e-10,
    "hmf": 1e-8,
    "conservation": 1e-10,
    "gauge_invariance": 1e-10,
    "hamilton": 1e-11,
    "bracket_oracle": 1e-12,
    "ab_relative": 0.05,
    "helicity_gauge": 1e-10,
}


class Suite:
    def __init__(self, name: str, res: int, seed: int, tol: float):
        self.name, self.res, self.seed, self.tol = name, res, seed, tol
        self.records: list[dict] = []
        self.rng = np.random.default_rng([seed, sum(map(ord, name)), res])

    def record(self, check: str, value, tolerance, passed=None, **extra):
        value = float(value)
        if passed is None:
            passed = value <= tolerance
        self.records.append({"check": check, "value": value, "tolerance": tolerance,
                             "passed": bool(passed), **extra})


def _geometry(s: Suite, cx, m):
    worst = 0.0
    for k in range(2, cx.dimension + 1):
        worst = max(worst, abs(cx.boundary_matrix(k - 1) @ cx.boundary_matrix(k)).max())
    s.record("geometry.boundary_squared", worst, 0.0)
    b = betti_numbers(cx)
    euler_b = sum((-1) ** k * bk for k, bk in enumerate(b))
    s.record("geometry.euler_poincare", abs(euler_b - cx.euler_characteristic), 0.0)
    s.record("geometry.positive_volumes", -min(v.min() for v in m.volumes), 0.0,
             passed=all(v.min() > 0 for v in m.volumes))


def _dec(s: Suite, mesh: Mesh):
    dec = mesh.dec
    n = dec.complex.dimension
    worst = 0.0
    for k in range(n - 1):
        worst = max(worst, abs(dec.d_matrix(k + 1) @ dec.d_matrix(k)).max())
    s.record("dec.d_squared", worst, 0.0)
    phi = s.rng.standard_normal(dec.complex.count(1))
    e1 = phi @ (mesh.K @ phi)
    e2 = dec.norm(dec.d(phi, 1), 2) ** 2
    s.record("dec.energy_identity", abs(e1 - e2) / e2, TOLERANCES["energy_identity"])
    K = mesh.K
    s.record("dec.stiffness_symmetric", abs(K - K.T).max(), 0.0)


def _solver(s: Suite, cx, m, mesh: Mesh):
    data = s.rng.standard_normal(len(mesh.bedges))
    conn, rep = solve_ym(cx, m, data, tol=s.tol)
    s.record("ym.solve_residual", rep.residual, TOLERANCES["solve_residual"],
             iterations=rep.iterations)
    s.record("ym.dirichlet_data", np.abs(conn.eta[mesh.bedges] - data).max(), 0.0)
    s.record("ym.solve_kernel_dim", rep.kernel_dim, 0,
             passed=rep.kernel_dim == betti_numbers(cx, relative=True)[1])
    fixed, _ = lorentz_gauge_fix(mesh, s.rng.standard_normal(cx.count(1)), "dirichlet", tol=s.tol)
    div = mesh.gauge_operator @ fixed
    s.record("ym.lorentz_coclosed", np.abs(div[mesh.iverts]).max(initial=0) /
             (1 + np.abs(fixed).max()), TOLERANCES["coclosed"])
    return conn


def _harmonic(s: Suite, cx, m, n_hmf: int):
    b, b_rel = betti_numbers(cx), betti_numbers(cx, relative=True)
    dn = harmonic_basis(cx, m, "neumann").shape[1]
    s.record("ym.dim_h1_neumann", dn, b[1], passed=dn == b[1])
    if not cx.is_closed:
        dd = harmonic_basis(cx, m, "dirichlet").shape[1]
        s.record("ym.dim_h1_dirichlet", dd, b_rel[1], passed=dd == b_rel[1])
        worst_r, worst_o = 0.0, 0.0
        for _ in range(n_hmf):
            dec = hmf_decompose(cx, m, s.rng.standard_normal(cx.count(1)), tol=s.tol)
            worst_r = max(worst_r, dec.residual, dec.coexact_residual)
            worst_o = max(worst_o, max(dec.orthogonality.values()))
        s.record("ym.hmf_reconstruction", worst_r, TOLERANCES["hmf"], trials=n_hmf)
        s.record("ym.hmf_orthogonality", worst_o, TOLERANCES["hmf"], trials=n_hmf)
        _, rep, _ = boundary_map(cx, m)
        s.record("ym.boundary_map_kernel", rep.kernel_dim, b_rel[1],
                 passed=rep.kernel_dim == b_rel[1], reduced_kernel_dim=rep.reduced_kernel_dim)


def _cuts(cx, m):
    """Three homologous cuts with the same boundary trace, bent both ways in the interior.

    Axis-0 level cuts on simply connected meshes, angular slits otherwise.
    """
    if betti_numbers(cx)[1] == 0:
        bary = m.cell_barycenters()
        lo, hi = bary[:, 0].min(), bary[:, 0].max()
        level = _generic_level(bary[:, 0], 0.5 * (lo + hi))
        width = hi - lo
        others = list(range(1, bary.shape[1]))

        def bump(p):
            out = np.full(len(p), 0.2 * width)
            for a in others:
                span = bary[:, a].max() - bary[:, a].min() or 1.0
                out *= np.sin(np.pi * (p[:, a] - bary[:, a].min()) / span)
            return out
        return [cut_from_level(cx, m, lambda p: p[:, 0], level, bend=b, label=lab)
                for b, lab in ((None, "flat"), (bump, "bent+"), (lambda p: -bump(p), "bent-"))]
    radius = lambda p: np.hypot(p[:, 0], p[:, 1])  # noqa: E731
    r = radius(m.cell_barycenters())
    # angular bend (radians), wide enough to move cells on the coarse torus
    bend = lambda p: 0.4 * np.sin(np.pi * (radius(p) - r.min()) / np.ptp(r))  # noqa: E731
    return [slit_cut(cx, m, 0.1, np.pi, bend=b, label=lab)
            for b, lab in ((None, "slit"), (bend, "slit+"), (lambda p: -bend(p), "slit-"))]


def _observables(s: Suite, cx, m, mesh: Mesh, trials: int):
    dec = mesh.dec
    cuts = _cuts(cx, m)
    # identical cuts would make the conservation check vacuous
    distinct = len({c.cell_minus.tobytes() for c in cuts})
    s.record("obs.cuts_distinct", 0, 0, passed=distinct == len(cuts), value_raw=distinct)
    worst_c = 0.0
    for _ in range(trials):
        phi = random_solution(cx, m, s.rng)
        eta = random_solution(cx, m, s.rng)
        w = random_solution(cx, m, s.rng)
        f = [helicity_observable(phi, c, eta) for c in cuts]
        om = [symplectic_pairing(c, eta, phi, w) for c in cuts]
        worst_c = max(worst_c, np.ptp(f) / max(1.0, abs(f[0])), np.ptp(om) / max(1.0, abs(om[0])))
    s.record("obs.conservation", worst_c, TOLERANCES["conservation"], cuts=len(cuts), trials=trials)

    cut = cuts[0]
    phi = random_solution(cx, m, s.rng)
    eta = Connection(dec, random_solution(cx, m, s.rng))
    obs = Observable(phi, cut)
    f0 = obs(eta)
    worst_g = 0.0
    for _ in range(trials):
        g = s.rng.standard_normal(cx.n_vertices)
        g[mesh.bverts] = 0.0
        worst_g = max(worst_g, abs(obs(eta.eta + mesh.d0 @ g) - f0) / (1 + abs(f0)))
    s.record("obs.gauge_invariance", worst_g, TOLERANCES["gauge_invariance"], trials=trials)

    worst_h = 0.0
    for _ in range(trials):
        w = random_solution(cx, m, s.rng)
        lie = lie_derivative(obs, eta, w)
        worst_h = max(worst_h, abs(lie + symplectic_pairing(cut, eta, phi, w)))
    s.record("obs.hamilton", worst_h, TOLERANCES["hamilton"], trials=trials)

    o = [Observable(random_solution(cx, m, s.rng), cut, f"g{k}") for k in range(3)]
    anti = max(abs(poisson_bracket(a, b) + poisson_bracket(b, a)) for a in o for b in o)
    s.record("obs.bracket_antisymmetry", anti, 0.0)
    jac = max(abs(poisson_bracket(bracket_observable(o[i], o[j]), o[k])
                  + poisson_bracket(bracket_observable(o[j], o[k]), o[i])
                  + poisson_bracket(bracket_observable(o[k], o[i]), o[j]))
              for i, j, k in ((0, 1, 2), (1, 2, 0), (0, 2, 1)))
    s.record("obs.jacobi", jac, 0.0)
    # bracket {f1, f2} is the derivative of f1 along the generator of f2
    orc = max(abs(poisson_bracket(a, b) - lie_derivative(a, eta, b.phi)) for a in o for b in o)
    s.record("obs.bracket_oracle", orc, TOLERANCES["bracket_oracle"])


def _separation(s: Suite, cx, m, mesh: Mesh, conn: Connection):
    g = s.rng.standard_normal(cx.n_vertices)
    g[mesh.bverts] = 0.0
    cert = separation_certificate(conn, conn.shifted(mesh.d0 @ g), seed=s.seed)
    s.record("obs.separation_gauge_pair", 0, 0, passed=cert.verdict == "gauge", verdict=cert.verdict)
    other, _ = solve_ym(cx, m, conn.eta[mesh.bedges] + 0.1 * s.rng.standard_normal(len(mesh.bedges)))
    cert = separation_certificate(conn, other, seed=s.seed)
    s.record("obs.separation_random_pair", 0, 0, passed=cert.verdict != "undecided",
             verdict=cert.verdict)
    hd = harmonic_basis(cx, m, "dirichlet")
    if hd.shape[1] and cx.dimension == 2 and m.embedded:
        h = hd[:, 0]
        pair = conn.shifted(h)
        same = np.abs(pair.eta[mesh.bedges] - conn.eta[mesh.bedges]).max()
        phi = uniform_field(cx, m)
        slit = slit_cut(cx, m, 0.1, np.pi)
        delta = helicity_observable(phi, slit, pair) - helicity_observable(phi, slit, conn)
        oracle = aharonov_bohm_oracle(cx, m, phi, h)
        cert = separation_certificate(conn, pair, seed=s.seed)
        rel = abs(delta - oracle) / abs(oracle)
        s.record("obs.ab_oracle", rel, TOLERANCES["ab_relative"],
                 passed=rel <= TOLERANCES["ab_relative"] and cert.verdict == "separated"
                 and same <= 1e-10, delta=delta, oracle=oracle, verdict=cert.verdict)


def _gluing(s: Suite, cx, m, conn: Connection):
    bary = m.cell_barycenters()[:, 0]
    mask = bary < _generic_level(bary, 0.5 * (bary.min() + bary.max()))
    U1, U2, gmap, o1, o2 = split(cx, m, mask)
    glued = glue(U1, U2, gmap)
    gconn, _ = glue_solutions(restrict(conn.eta, o1, U1[0], cx), restrict(conn.eta, o2, U2[0], cx),
                              glued)
    orig = np.empty(glued.complex.n_vertices, dtype=np.int64)
    orig[glued.vertex_maps[1]] = o2
    orig[glued.vertex_maps[0]] = o1
    ge = orig[glued.complex.simplices(1)]
    sign = np.where(ge[:, 0] < ge[:, 1], 1.0, -1.0)
    same = np.array_equal(sign * gconn.eta, conn.eta[cx.index(1, ge)])
    s.record("glue.roundtrip_bitwise", 0, 0, passed=same)


def _closed(s: Suite, cx, m, mesh: Mesh):
    dec = mesh.dec
    if cx.dimension != 3:
        return
    alpha = dec.sample_one_form(helicity_field)
    h0 = dec.helicity(alpha)
    g = s.rng.standard_normal(cx.n_vertices)
    h1 = dec.helicity(alpha + mesh.d0 @ g)
    s.record("dec.helicity_gauge", abs(h1 - h0) / (1 + abs(h0)), TOLERANCES["helicity_gauge"])
    s.record("dec.helicity_value", abs(h0 + (2 * np.pi) ** 3) / (2 * np.pi) ** 3, 1.0,
             value_raw=h0, exact=-(2 * np.pi) ** 3)


def verify_mesh(name: str, res: int | None = None, seed: int = 0, tol: float = DEFAULT_TOL,
                trials: int = 5, n_hmf: int = 10) -> dict:
    """Run every applicable invariant check on one named mesh."""
    res = SUITE.get(name, 4) if res is None else res
    s = Suite(name, res, seed, tol)
    cx, m = build_mesh(name, res)
    mesh = Mesh.of(cx, m)
    _geometry(s, cx, m)
    _dec(s, mesh)
    _harmonic(s, cx, m, n_hmf)
    if cx.is_closed:
        _closed(s, cx, m, mesh)
    else:
        conn = _solver(s, cx, m, mesh)
        _observables(s, cx, m, mesh, trials)
        _separation(s, cx, m, mesh, conn)
        _gluing(s, cx, m, conn)
    return {
        "mesh": name,
        "res": res,
        "f_vector": list(map(int, cx.f_vector)),
        "records": s.records,
        "passed": all(r["passed"] for r in s.records),
    }


def run_suite(meshes=None, seed: int = 0, tol: float = DEFAULT_TOL, threads: int = 1,
              trials: int = 5, n_hmf: int = 10) -> dict:
    """Verify several meshes; ``threads`` > 1 runs meshes concurrently (results keep input order)."""
    meshes = list(SUITE.items()) if meshes is None else meshes

    def one(item):
        name, res = item
        return verify_mesh(name, res, seed=seed, tol=tol, trials=trials, n_hmf=n_hmf)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, meshes))
    else:
        results = [one(item) for item in meshes]
    return {
        "tolerances": TOLERANCES,
        "meshes": results,
        "passed": all(r["passed"] for r in results),
    }
