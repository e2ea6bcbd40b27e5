import numpy as np
import pytest
from hypothesis import given, strategies as st

from ymhelix.geometry import Chain, build_annulus, build_box, build_solid_torus, is_relative_boundary
from ymhelix.observables import (CutError, Hypersurface, Observable, aharonov_bohm_oracle,
                                 bracket_observable, commutator_field, cut_from_level, flux_pairing,
                                 generator, hamilton_check, helicity_current_coordinate,
                                 helicity_observable, lie_derivative, parse_cut, poisson_bracket,
                                 presymplectic_potential, radial_holonomy, separation_certificate,
                                 slit_cut, standard_cuts, symplectic_pairing)
from ymhelix.ym import Connection, Mesh, get_dec, harmonic_basis, random_solution, solve_ym, uniform_field


@pytest.fixture(scope="module")
def box3():
    cx, m = build_box(3, 3)
    return cx, m, Mesh.of(cx, m)


def bent_cuts(cx, m, level=0.55):
    bump = lambda p: 0.3 * np.sin(np.pi * p[:, 1]) * np.sin(np.pi * p[:, 2])  # noqa: E731
    return [cut_from_level(cx, m, lambda p: p[:, 0], level, bend=b)
            for b in (None, bump, lambda p: -bump(p))]


def assert_homologous(cuts):
    cx = cuts[0].dec.complex
    for c in cuts[1:]:
        diff = c.chain.coefficients - cuts[0].chain.coefficients
        assert is_relative_boundary(cx, Chain(cx.dimension - 1, diff))


def test_bent_cuts_are_distinct_and_homologous(box3):
    cx, m, _ = box3
    cuts = bent_cuts(cx, m)
    assert len({c.cell_minus.tobytes() for c in cuts}) == 3
    assert_homologous(cuts)
    # same trace on the boundary: bent cells never touch it
    for c in cuts[1:]:
        touching = cx.boundary_mask(0)[cx.cells].any(axis=1)
        assert np.array_equal(c.cell_minus[touching], cuts[0].cell_minus[touching])


@given(st.integers(0, 2 ** 31))
def test_conservation_across_cuts(seed):
    cx, m = build_box(3, 3)
    rng = np.random.default_rng(seed)
    cuts = bent_cuts(cx, m)
    phi, eta, w = (random_solution(cx, m, rng) for _ in range(3))
    f = [helicity_observable(phi, c, eta) for c in cuts]
    om = [symplectic_pairing(c, eta, phi, w) for c in cuts]
    assert np.ptp(f) <= 1e-10 * max(abs(x) for x in f)
    assert np.ptp(om) <= 1e-10 * max(abs(x) for x in om)


def test_plain_flux_depends_on_the_cut_for_non_solutions(box3):
    cx, m, _ = box3
    cuts = bent_cuts(cx, m)
    rng = np.random.default_rng(0)
    v, w = rng.standard_normal((2, cx.count(1)))
    vals = [flux_pairing(c, v, w) for c in cuts]
    assert np.ptp(vals) > 1e-3


def test_slit_conservation_on_annulus_and_torus():
    for (cx, m), amp in ((build_annulus(3, 18), 0.15), (build_solid_torus(8, 3), 0.4)):
        rng = np.random.default_rng(1)
        r = lambda p: np.hypot(p[:, 0], p[:, 1])  # noqa: E731
        rb = r(m.cell_barycenters())
        bend = lambda p: amp * np.sin(np.pi * (r(p) - rb.min()) / np.ptp(rb))  # noqa: E731
        cuts = [slit_cut(cx, m, 0.1, np.pi, bend=b) for b in (None, bend, lambda p: -bend(p))]
        assert len({c.cell_minus.tobytes() for c in cuts}) == 3
        assert_homologous(cuts)
        phi, eta = random_solution(cx, m, rng), random_solution(cx, m, rng)
        f = [helicity_observable(phi, c, eta) for c in cuts]
        assert np.ptp(f) <= 1e-10 * max(abs(x) for x in f)


@given(st.integers(0, 2 ** 31))
def test_gauge_invariance(seed):
    cx, m = build_annulus(2, 12)
    mm = Mesh.of(cx, m)
    rng = np.random.default_rng(seed)
    cut = slit_cut(cx, m, 0.0, np.pi)
    phi, eta = random_solution(cx, m, rng), random_solution(cx, m, rng)
    f0 = helicity_observable(phi, cut, eta)
    g = rng.standard_normal(cx.n_vertices)
    g[mm.bverts] = 0
    assert abs(helicity_observable(phi, cut, eta + mm.d0 @ g) - f0) < 1e-10 * (1 + abs(f0))


def test_hamilton_and_lie_derivative(box3):
    cx, m, mm = box3
    rng = np.random.default_rng(2)
    cut = bent_cuts(cx, m)[0]
    obs = Observable(random_solution(cx, m, rng), cut)
    eta = Connection(mm.dec, random_solution(cx, m, rng))
    for _ in range(5):
        w = random_solution(cx, m, rng)
        r = hamilton_check(obs, eta, w)
        assert r["discrepancy"] < 1e-11
        assert lie_derivative(obs, eta, w, mode="fd") == pytest.approx(r["lie_derivative"], rel=1e-9)
        # bilinearity in w
        r3 = hamilton_check(obs, eta, 3 * w)
        assert r3["lie_derivative"] == pytest.approx(3 * r["lie_derivative"], rel=1e-12)
    # gauge directions are degenerate: both sides vanish
    g = rng.standard_normal(cx.n_vertices)
    g[mm.bverts] = 0
    r = hamilton_check(obs, eta, mm.d0 @ g)
    assert abs(r["lie_derivative"]) < 1e-10 and abs(r["omega"]) < 1e-10


def test_affinity_and_base_point(box3):
    cx, m, mm = box3
    rng = np.random.default_rng(3)
    cut = bent_cuts(cx, m)[0]
    phi, eta, w, base = (random_solution(cx, m, rng) for _ in range(4))
    vals = [helicity_observable(phi, cut, eta + t * w) for t in (0.0, 1.0, 2.0)]
    assert vals[2] - 2 * vals[1] + vals[0] == pytest.approx(0, abs=1e-12 * (1 + max(map(abs, vals))))
    conn = Connection(mm.dec, eta)
    moved = conn.rebased(base)
    assert helicity_observable(phi, cut, moved) == pytest.approx(helicity_observable(phi, cut, conn),
                                                                 abs=1e-11)


def test_pairing_antisymmetry_and_potential(box3):
    cx, m, _ = box3
    rng = np.random.default_rng(4)
    cut = bent_cuts(cx, m)[0]
    v, w, eta = (random_solution(cx, m, rng) for _ in range(3))
    assert symplectic_pairing(cut, eta, v, w) == -symplectic_pairing(cut, eta, w, v)
    # omega is the antisymmetrized variation of the potential
    lhs = presymplectic_potential(cut, eta + w, v) - presymplectic_potential(cut, eta, v)
    rhs = presymplectic_potential(cut, eta + v, w) - presymplectic_potential(cut, eta, w)
    assert 0.5 * (lhs - rhs) == pytest.approx(symplectic_pairing(cut, eta, v, w), rel=1e-10)


def test_brackets(box3):
    cx, m, mm = box3
    cut = bent_cuts(cx, m)[0]
    obs = [Observable(generator(f"g{k}", cx, m, seed=5), cut, f"g{k}") for k in range(3)]
    eta = Connection(mm.dec, random_solution(cx, m, np.random.default_rng(6)))
    for a in obs:
        assert poisson_bracket(a, a) == 0.0
        for b in obs:
            assert poisson_bracket(a, b) == -poisson_bracket(b, a)
            assert poisson_bracket(a, b) == pytest.approx(lie_derivative(a, eta, b.phi), abs=1e-12)
            # and the central finite-difference oracle
            scale = abs(lie_derivative(obs[0], eta, obs[1].phi))
            assert poisson_bracket(a, b) == pytest.approx(lie_derivative(a, eta, b.phi, "fd"),
                                                          rel=1e-8, abs=1e-8 * scale)
    c = bracket_observable(obs[0], obs[1])
    assert c.is_constant and c(eta) == poisson_bracket(obs[0], obs[1])
    jac = (poisson_bracket(bracket_observable(obs[0], obs[1]), obs[2])
           + poisson_bracket(bracket_observable(obs[1], obs[2]), obs[0])
           + poisson_bracket(bracket_observable(obs[2], obs[0]), obs[1]))
    assert jac == 0.0
    other = bent_cuts(cx, m)[1]
    with pytest.raises(CutError):
        poisson_bracket(obs[0], Observable(obs[1].phi, other))


def test_non_solution_generator_warns(box3):
    cx, m, _ = box3
    obs = Observable(np.random.default_rng(7).standard_normal(cx.count(1)), bent_cuts(cx, m)[0])
    assert obs.warnings


def test_cut_parsing_and_errors():
    cx, m = build_annulus(2, 12)
    assert parse_cut("radial:1.5", cx, m).boundary_empty
    assert parse_cut("angle:0:3.1", cx, m).is_slit
    assert parse_cut("x:0.1", cx, m).null_homologous
    for bad in ("radial", "z:0.5", "nope:1", "x:abc", "radial:5"):
        with pytest.raises(CutError):
            parse_cut(bad, cx, m)
    dec = get_dec(cx, m)
    with pytest.raises(CutError):
        Hypersurface(dec, np.zeros(3, dtype=bool))
    # a window that keeps half of a closed interface leaves its rim inside the region
    minus = np.hypot(*m.cell_barycenters().T) < 1.5
    with pytest.raises(CutError):
        Hypersurface(dec, minus, face_window=m.simplex_points(1).mean(axis=1)[:, 1] > 0)


def test_standard_cuts():
    cx, m = build_box(3, 3)
    cuts = standard_cuts(cx, m)
    assert len(cuts) == 9 and all(c.null_homologous for c in cuts)
    cx, m = build_annulus(2, 12)
    labels = [c.label for c in standard_cuts(cx, m)]
    assert any(lab.startswith("angle") for lab in labels)


def test_ab_pair_separated_with_holonomy_oracle():
    cx, m = build_annulus(4, 24)
    mm = Mesh.of(cx, m)
    h = harmonic_basis(cx, m, "dirichlet")[:, 0]
    eta, _ = solve_ym(cx, m, np.random.default_rng(8).standard_normal(len(mm.bedges)))
    other = eta.shifted(h)
    assert np.abs(other.eta[mm.bedges] - eta.eta[mm.bedges]).max() <= 1e-10
    phi = uniform_field(cx, m)
    oracle = aharonov_bohm_oracle(cx, m, phi, h)
    for bend in (None, lambda p: 0.2 * np.sin(np.pi * (np.hypot(p[:, 0], p[:, 1]) - 1))):
        slit = slit_cut(cx, m, 0.1, np.pi, bend=bend)
        delta = helicity_observable(phi, slit, other) - helicity_observable(phi, slit, eta)
        assert delta == pytest.approx(oracle, rel=0.05)
    cert = separation_certificate(eta, other)
    assert cert.verdict == "separated" and abs(cert.difference) > cert.threshold
    # in 2D every solution has constant curvature, so any of them is a valid generator
    sol = random_solution(cx, m, np.random.default_rng(9))
    assert np.isfinite(aharonov_bohm_oracle(cx, m, sol, h))
    with pytest.raises(ValueError):
        aharonov_bohm_oracle(cx, m, np.random.default_rng(9).standard_normal(cx.count(1)), h)


def test_radial_holonomy_of_exact_field():
    cx, m = build_annulus(2, 12)
    r = np.hypot(m.coords[:, 0], m.coords[:, 1])
    # holonomy of d(r^2) from r = 1 to r = 2 is 3 along any path
    assert radial_holonomy(cx, m, get_dec(cx, m).d(r ** 2, 0)) == pytest.approx(3.0, rel=1e-12)


def test_separation_verdicts(box3):
    cx, m, mm = box3
    rng = np.random.default_rng(10)
    eta, _ = solve_ym(cx, m, rng.standard_normal(len(mm.bedges)))
    g = rng.standard_normal(cx.n_vertices)
    g[mm.bverts] = 0
    cert = separation_certificate(eta, eta.shifted(mm.d0 @ g))
    assert cert.verdict == "gauge" and cert.witness is not None
    other, _ = solve_ym(cx, m, eta.eta[mm.bedges] + 0.1 * rng.standard_normal(len(mm.bedges)))
    cert = separation_certificate(eta, other)
    assert cert.verdict == "separated"
    assert abs(cert.values[1] - cert.values[0]) == pytest.approx(abs(cert.difference))
    # no candidates at all: explicit "undecided", never a silent false negative
    cert = separation_certificate(eta, other, generators=[], cuts=[])
    assert cert.verdict == "undecided"


def field_a(p):
    return np.stack([-0.5 * p[:, 1] + 0.3 * np.sin(2 * p[:, 0]), 0.5 * p[:, 0] + np.cos(p[:, 1])], 1)


def field_b(p):
    return np.stack([np.cos(p[:, 0] + 2 * p[:, 1]), np.sin(p[:, 0] * p[:, 1]) + p[:, 0] ** 2], 1)


def test_coordinate_current_matches_pairing_in_2d():
    errs = []
    for n in (8, 16, 32):
        cx, m = build_box(2, n)
        r = helicity_current_coordinate(cx, m, field_a, field_b, axis=0, level=0.5)
        assert r["observable"] == pytest.approx(-0.5 * r["pairing_flux"], rel=1e-12)
        errs.append(r["discrepancy"])
    assert errs[0] > errs[1] > errs[2]
    assert np.log(errs[0] / errs[2]) / np.log(4) > 0.8


def test_commutator_trivial_cases():
    cx, m = build_box(2, 8)
    assert commutator_field(cx, m, field_a, field_a)["max_abs"] == 0.0
    const = lambda p: np.tile([0.4, -1.2], (len(p), 1))  # noqa: E731
    const2 = lambda p: np.tile([2.0, 0.5], (len(p), 1))  # noqa: E731
    assert commutator_field(cx, m, const, const2)["max_abs"] < 1e-14
    # phi1 = x d/dx, phi2 = d/dy commute; phi1 = d/dx, phi2 = x d/dy give d/dy
    lin = lambda p: np.stack([p[:, 0], 0 * p[:, 0]], 1)  # noqa: E731
    ey = lambda p: np.stack([0 * p[:, 0], 1 + 0 * p[:, 0]], 1)  # noqa: E731
    assert commutator_field(cx, m, lin, ey)["max_abs"] < 1e-13
    ex = lambda p: np.stack([1 + 0 * p[:, 0], 0 * p[:, 0]], 1)  # noqa: E731
    xey = lambda p: np.stack([0 * p[:, 0], p[:, 0]], 1)  # noqa: E731
    tilde = commutator_field(cx, m, ex, xey)["cochain"]
    assert np.allclose(tilde, get_dec(cx, m).sample_one_form(ey), atol=1e-13)
