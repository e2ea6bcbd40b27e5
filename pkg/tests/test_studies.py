import csv
import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ymhelix.studies import MESHES, build_mesh, fitted_order, refinement_study, study_csv


@given(st.floats(0.5, 4.0), st.floats(0.1, 10.0))
def test_fitted_order_recovers_power_law(p, c):
    h = np.array([0.5, 0.25, 0.125, 0.0625])
    assert fitted_order(h, c * h ** p) == pytest.approx(p, rel=1e-9)


def test_fitted_order_degenerate():
    assert np.isnan(fitted_order([0.5, 0.25], [1.0, 0.0]))


@pytest.mark.parametrize("name", MESHES)
def test_named_meshes_build(name):
    cx, m = build_mesh(name, 2)
    assert cx.count(cx.dimension) > 0 and m.total_volume > 0


def test_study_needs_three_resolutions():
    with pytest.raises(ValueError):
        refinement_study("helicity", [4, 8])
    with pytest.raises(ValueError):
        refinement_study("nonsense", [4, 8, 16])


def test_helicity_study_and_csv():
    study = refinement_study("helicity", [4, 8, 16])
    assert study["monotone"] and study["order"] > 1
    rows = list(csv.DictReader(io.StringIO(study_csv(study))))
    assert [int(r["res"]) for r in rows] == [4, 8, 16]
    assert float(rows[0]["exact"]) == pytest.approx(-(2 * np.pi) ** 3)
    for r, src in zip(rows, study["rows"]):
        assert float(r["error"]) == src["error"]


def test_conservation_study_is_at_roundoff():
    study = refinement_study("conservation", [3, 4, 5])
    assert max(r["error"] for r in study["rows"]) <= 1e-11
