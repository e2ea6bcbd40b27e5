import numpy as np
import pytest
from hypothesis import given, strategies as st

from ymhelix.dec import DEC
from ymhelix.geometry import betti_numbers, build_annulus, build_box, build_solid_torus
from ymhelix.solver import SolverError
from ymhelix.ym import (BoundaryData, Connection, GaugeTransformation, Mesh, boundary_map,
                        gauge_equivalent, get_dec, harmonic_basis, hmf_decompose, is_solution,
                        linearized_solution_space, lorentz_gauge_fix, random_solution, solve_ym,
                        uniform_field)

MESHES = {
    "box2": lambda: build_box(2, 6),
    "box3": lambda: build_box(3, 3),
    "annulus": lambda: build_annulus(3, 18),
    "torus": lambda: build_solid_torus(8, 2),
}


@pytest.fixture(scope="module", params=list(MESHES))
def mesh(request):
    return MESHES[request.param]()


def test_solve_residual_and_data(mesh):
    cx, m = mesh
    mm = Mesh.of(cx, m)
    data = np.random.default_rng(0).standard_normal(len(mm.bedges))
    conn, rep = solve_ym(cx, m, data)
    ok, res = is_solution(conn)
    assert ok and res < 1e-10
    assert np.array_equal(conn.eta[mm.bedges], data)
    assert rep.kernel_dim == betti_numbers(cx, relative=True)[1]


@pytest.mark.parametrize("n,res", [(2, 5), (3, 3)])
def test_uniqueness_recovers_uniform_field(n, res):
    # with trivial relative cohomology, boundary data fix the solution up to interior gauge
    cx, m = build_box(n, res)
    mm = Mesh.of(cx, m)
    u = uniform_field(cx, m)
    assert is_solution(Connection(mm.dec, u))[0]
    conn, _ = solve_ym(cx, m, u[mm.bedges])
    verdict = gauge_equivalent(conn, Connection(mm.dec, u))
    assert verdict.equivalent
    f = verdict.witness
    assert np.all(f[mm.bverts] == 0)


def test_solution_with_base_point(mesh):
    cx, m = mesh
    mm = Mesh.of(cx, m)
    rng = np.random.default_rng(1)
    data = rng.standard_normal(len(mm.bedges))
    eta0 = rng.standard_normal(cx.count(1))
    a, _ = solve_ym(cx, m, data)
    b, _ = solve_ym(cx, m, data, eta0=eta0)
    assert is_solution(b)[0]
    assert np.abs(b.eta[mm.bedges] - data).max() < 1e-14
    # same data: the two differ by interior gauge plus a harmonic Dirichlet field
    diff = Connection(mm.dec, b.eta - a.eta)
    assert is_solution(diff)[0]
    if betti_numbers(cx, relative=True)[1] == 0:
        assert gauge_equivalent(a, Connection(mm.dec, b.eta)).equivalent
    rebased = b.rebased(np.zeros(cx.count(1)))
    assert np.array_equal(rebased.eta, b.eta)


def test_gauge_action_preserves_solutions(mesh):
    cx, m = mesh
    mm = Mesh.of(cx, m)
    conn, _ = solve_ym(cx, m, np.random.default_rng(2).standard_normal(len(mm.bedges)))
    f = np.random.default_rng(3).standard_normal(cx.n_vertices)
    g = GaugeTransformation.classify(mm, f)
    assert not g.interior
    moved = Connection(mm.dec, g.act(mm, conn.eta))
    assert is_solution(moved)[0]
    assert gauge_equivalent(conn, moved, mode="free").equivalent
    assert not gauge_equivalent(conn, moved, mode="interior").equivalent


def test_lorentz_gauge(mesh):
    cx, m = mesh
    mm = Mesh.of(cx, m)
    phi = np.random.default_rng(4).standard_normal(cx.count(1))
    fixed, psi = lorentz_gauge_fix(mm, phi, "dirichlet")
    div = mm.gauge_operator @ fixed
    assert np.abs(div[mm.iverts]).max() < 1e-10
    assert np.all(psi[mm.bverts] == 0)
    again, _ = lorentz_gauge_fix(mm, fixed, "dirichlet")
    assert np.abs(again - fixed).max() < 1e-10
    fixed_n, _ = lorentz_gauge_fix(mm, phi, "neumann")
    assert np.abs(mm.gauge_operator @ fixed_n).max() < 1e-10
    # gauge fixing changes phi by an exact cochain only
    assert np.abs(mm.dec.d(fixed_n - phi, 1)).max() < 1e-10


def test_harmonic_dimensions(mesh):
    cx, m = mesh
    b, b_rel = betti_numbers(cx), betti_numbers(cx, relative=True)
    hn = harmonic_basis(cx, m, "neumann")
    hd = harmonic_basis(cx, m, "dirichlet")
    assert hn.shape[1] == b[1] and hd.shape[1] == b_rel[1]
    dec = get_dec(cx, m)
    mm = Mesh.of(cx, m)
    for h in hn.T:
        assert np.abs(dec.d(h, 1)).max() < 1e-9
        assert np.abs(mm.gauge_operator @ h).max() < 1e-9
    for h in hd.T:
        assert np.abs(dec.d(h, 1)).max() < 1e-9
        assert np.all(h[mm.bedges] == 0)
        assert is_solution(Connection(dec, h))[0]


def test_annulus_dirichlet_field_is_invisible_at_boundary():
    cx, m = build_annulus(3, 18)
    mm = Mesh.of(cx, m)
    h = harmonic_basis(cx, m, "dirichlet")[:, 0]
    base, _ = solve_ym(cx, m, np.random.default_rng(5).standard_normal(len(mm.bedges)))
    other = base.shifted(h)
    assert np.array_equal(BoundaryData.of(mm, other.eta).dirichlet, BoundaryData.of(mm, base.eta).dirichlet)
    # not an interior gauge transform, but exact: d of the harmonic function that is 0 inside, 1 outside
    assert not gauge_equivalent(base, other).equivalent
    assert gauge_equivalent(base, other, mode="free").equivalent


@given(st.integers(0, 2 ** 31))
def test_hmf_properties(seed):
    for cx, m in (build_annulus(2, 10), build_solid_torus(6, 1)):
        alpha = np.random.default_rng(seed).standard_normal(cx.count(1))
        d = hmf_decompose(cx, m, alpha)
        assert d.residual < 1e-12
        assert d.coexact_residual < 1e-8
        assert max(d.orthogonality.values()) < 1e-8
        mm = Mesh.of(cx, m)
        dec = mm.dec
        # each part lies in its own space
        assert np.abs(d.exact_dirichlet[mm.bedges]).max() < 1e-12
        assert np.abs(dec.d(d.exact_dirichlet, 1)).max() < 1e-12
        assert np.abs(dec.d(d.harmonic_exact, 1)).max() < 1e-12
        assert np.abs((mm.gauge_operator @ d.harmonic_exact)[mm.iverts]).max(initial=0) < 1e-9
        assert np.abs(mm.gauge_operator @ d.coexact_neumann).max() < 1e-9


def test_linearized_solutions_parametrized_by_boundary_data(mesh):
    # modulo interior gauge, solutions are fixed by Dirichlet data up to the harmonic Dirichlet fields
    cx, m = mesh
    mm = Mesh.of(cx, m)
    V = linearized_solution_space(cx, m, "dirichlet")
    assert V.shape[1] == len(mm.bedges) + betti_numbers(cx, relative=True)[1]


@pytest.mark.parametrize("builder,kernel,reduced", [
    (lambda: build_box(3, 2), 0, 0),
    (lambda: build_solid_torus(6, 1), 0, 0),
    (lambda: build_annulus(2, 10), 1, 0),
])
def test_boundary_map_kernel(builder, kernel, reduced):
    cx, m = builder()
    R, rep, K = boundary_map(cx, m)
    assert rep.kernel_dim == kernel == betti_numbers(cx, relative=True)[1]
    assert rep.reduced_kernel_dim == reduced
    assert K.shape[1] == kernel
    assert rep.rank + rep.kernel_dim == rep.domain_dim


def test_boundary_data_json():
    cx, m = build_box(2, 3)
    mm = Mesh.of(cx, m)
    eta = random_solution(cx, m, np.random.default_rng(6))
    bd = BoundaryData.of(mm, eta)
    back = BoundaryData.from_json(bd.to_json())
    assert np.array_equal(back.dirichlet, bd.dirichlet) and np.array_equal(back.neumann, bd.neumann)
    # Green identity: the energy equals the boundary pairing for a solution
    assert eta @ (mm.K @ eta) == pytest.approx(bd.dirichlet @ bd.neumann, rel=1e-10)


def test_input_errors():
    cx, m = build_box(2, 2)
    with pytest.raises(ValueError):
        solve_ym(cx, m, np.zeros(3))
    with pytest.raises(ValueError):
        Connection(get_dec(cx, m), np.zeros(2))
    with pytest.raises(ValueError):
        lorentz_gauge_fix(Mesh.of(cx, m), np.zeros(cx.count(1)), "sideways")
    a = Connection(get_dec(cx, m), np.zeros(cx.count(1)))
    b = Connection(DEC(cx, m), np.zeros(cx.count(1)))
    with pytest.raises(ValueError):
        gauge_equivalent(a, b)


def test_neumann_gauge_compatibility():
    # the Neumann gauge problem is always compatible for coboundary right-hand sides
    cx, m = build_annulus(2, 8)
    mm = Mesh.of(cx, m)
    try:
        lorentz_gauge_fix(mm, np.random.default_rng(7).standard_normal(cx.count(1)), "neumann")
    except SolverError:  # pragma: no cover
        pytest.fail("compatible problem rejected")
