import numpy as np
import pytest
from hypothesis import given, strategies as st

from ymhelix.cli import GLUE_PAIRS, _glue_pair
from ymhelix.geometry import betti_numbers, build_box
from ymhelix.gluing import (GluingError, GluingMap, canonical_form, face_gluing_map, glue,
                            glue_solutions, gluing_dimension_check, restrict, split)
from ymhelix.ym import Connection, Mesh, is_solution, random_solution, solve_ym


def test_two_squares_make_a_rectangle():
    U = build_box(2, 2)
    glued = glue(U, U, face_gluing_map(U, U, 0))
    ref = build_box(2, [4, 2], [2.0, 1.0])
    assert canonical_form(glued.complex, glued.metric) == canonical_form(*ref)
    assert glued.report["max_length_error"] == 0.0


@given(st.integers(1, 3), st.integers(1, 3), st.integers(2, 3))
def test_f_vector_of_glued_pieces(a, b, n):
    # simplices of the glued faces are counted once instead of twice
    U1, U2 = build_box(n, [a] + [b] * (n - 1)), build_box(n, [b] * n)
    gmap = face_gluing_map(U1, U2, 0)
    glued = glue(U1, U2, gmap)
    face = (b + 1, b) if n == 2 else build_box(2, b)[0].f_vector
    expect = [U1[0].f_vector[k] + U2[0].f_vector[k] - (face[k] if k < n else 0) for k in range(n + 1)]
    assert list(glued.complex.f_vector) == expect


def test_self_gluing_makes_a_ring():
    U = build_box(2, [3, 2])
    glued = glue(U, None, face_gluing_map(U, None, 0))
    assert betti_numbers(glued.complex) == (1, 1, 0)
    assert betti_numbers(glued.complex, relative=True) == (0, 1, 1)


@pytest.mark.parametrize("name", GLUE_PAIRS)
def test_dimension_check(name):
    r = gluing_dimension_check(*_glue_pair(name))
    assert r["equal"]
    assert r["glued_solutions_modulo_gauge"] == r["boundary_edges_plus_b1_rel"]


def test_split_and_reglue_is_bitwise():
    cx, m = build_box(3, 3)
    mesh = Mesh.of(cx, m)
    conn, _ = solve_ym(cx, m, np.random.default_rng(0).standard_normal(len(mesh.bedges)))
    mask = m.cell_barycenters()[:, 0] < 0.4
    U1, U2, gmap, o1, o2 = split(cx, m, mask)
    glued = glue(U1, U2, gmap)
    e1, e2 = restrict(conn.eta, o1, U1[0], cx), restrict(conn.eta, o2, U2[0], cx)
    # each restriction is still a solution on its piece
    for (pcx, pm), e in ((U1, e1), (U2, e2)):
        assert is_solution(Connection(Mesh.of(pcx, pm).dec, e))[0]
    gconn, rep = glue_solutions(e1, e2, glued)
    assert rep["dirichlet_mismatch"] == 0.0
    orig = np.empty(glued.complex.n_vertices, dtype=np.int64)
    orig[glued.vertex_maps[1]] = o2
    orig[glued.vertex_maps[0]] = o1
    ge = orig[glued.complex.simplices(1)]
    sign = np.where(ge[:, 0] < ge[:, 1], 1.0, -1.0)
    assert np.array_equal(sign * gconn.eta, conn.eta[cx.index(1, ge)])
    assert canonical_form(glued.complex, glued.metric) == canonical_form(cx, m)


def test_mismatched_solutions_report_bad_edges():
    U = build_box(2, 2)
    glued = glue(U, U, face_gluing_map(U, U, 0))
    rng = np.random.default_rng(1)
    with pytest.raises(GluingError) as err:
        glue_solutions(random_solution(*U, rng), random_solution(*U, rng), glued)
    assert err.value.details["dirichlet_bad_edges"]


def test_gluing_map_json():
    U = build_box(2, 2)
    gmap = face_gluing_map(U, U, 0)
    back = GluingMap.from_json(gmap.to_json())
    for name in ("sigma1", "sigma2", "vertex_map"):
        assert np.array_equal(getattr(back, name), getattr(gmap, name))


def test_rejects_bad_maps():
    U1 = build_box(2, 2)
    stretched = build_box(2, 2, [1.0, 2.0])
    gmap = face_gluing_map(U1, U1, 0)
    with pytest.raises(GluingError, match="isometry"):
        glue(U1, stretched, gmap)
    with pytest.raises(GluingError):
        face_gluing_map(U1, stretched, 0)
    bad = GluingMap(gmap.sigma1, gmap.sigma2, gmap.vertex_map[[0, 0, 2]])
    with pytest.raises(GluingError):
        glue(U1, U1, bad)
    with pytest.raises(GluingError):
        glue(U1, build_box(3, 1), gmap)
    cx, m = U1
    with pytest.raises(GluingError):
        split(cx, m, np.ones(cx.count(2), dtype=bool))
