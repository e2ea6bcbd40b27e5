"""Named meshes and mesh-refinement studies."""
from __future__ import annotations

import csv
import io

import numpy as np

from .dec import DEC
from .geometry import build_annulus, build_box, build_periodic_box, build_solid_torus
from .observables import (_generic_level, commutator_field, cut_from_level, helicity_current_coordinate,
                          helicity_observable, symplectic_pairing)
from .ym import get_dec, random_solution

MESHES = ("box2", "box3", "box4", "annulus", "torus", "periodic3")


def build_mesh(name: str, res: int):
    """Standard meshes by name; ``res`` sets the number of cells across."""
    if res < 1:
        raise ValueError("resolution must be >= 1")
    if name == "box2":
        return build_box(2, res)
    if name == "box3":
        return build_box(3, res)
    if name == "box4":
        return build_box(4, res)
    if name == "annulus":
        return build_annulus(res, max(3, 6 * res))
    if name == "torus":
        return build_solid_torus(max(3, 4 * res), res)
    if name == "periodic3":
        return build_periodic_box(max(3, res))
    raise ValueError(f"unknown mesh {name!r}; choose from {', '.join(MESHES)}")


def fitted_order(h, err) -> float:
    """Slope of log(err) against log(h) by least squares."""
    h, err = np.asarray(h, float), np.asarray(err, float)
    if len(h) < 2 or np.any(err <= 0):
        return float("nan")
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


# Smooth test fields used by the coordinate-current and commutator studies.
def field_a(p):
    return np.stack([-0.5 * p[:, 1] + 0.3 * np.sin(2 * p[:, 0]), 0.5 * p[:, 0] + np.cos(p[:, 1])], 1)


def field_b(p):
    return np.stack([np.cos(p[:, 0] + 2 * p[:, 1]), np.sin(p[:, 0] * p[:, 1]) + p[:, 0] ** 2], 1)


def helicity_field(p):
    return np.stack([np.cos(p[:, 2]), np.sin(p[:, 2]), np.zeros(len(p))], 1)


def _helicity_row(res, seed):
    cx, m = build_periodic_box(res)
    dec = DEC(cx, m)
    alpha = dec.sample_one_form(helicity_field)
    exact = -(2 * np.pi) ** 3
    value = dec.helicity(alpha)
    return {"res": res, "h": 2 * np.pi / res, "value": float(value), "exact": exact,
            "error": float(abs(value - exact))}


def _current_row(res, seed):
    cx, m = build_box(2, res)
    r = helicity_current_coordinate(cx, m, field_a, field_b, axis=0, level=0.5)
    return {"res": res, "h": r["h"], "value": r["pairing_flux"], "exact": r["coordinate_flux"],
            "error": r["discrepancy"]}


def _conservation_row(res, seed):
    cx, m = build_box(3, res)
    rng = np.random.default_rng([seed, res])
    phi = random_solution(cx, m, rng)
    eta = random_solution(cx, m, rng)
    bump = lambda p: 0.25 * np.sin(np.pi * p[:, 1]) * np.sin(np.pi * p[:, 2])  # noqa: E731
    level = _generic_level(m.cell_barycenters()[:, 0], 0.5)
    cuts = [cut_from_level(cx, m, lambda p: p[:, 0], level, bend=b)
            for b in (None, bump, lambda p: -bump(p))]
    f = [helicity_observable(phi, c, eta) for c in cuts]
    w = [symplectic_pairing(c, eta, phi, eta) for c in cuts]
    spread = max(np.ptp(f), np.ptp(w)) / max(1.0, abs(f[0]))
    return {"res": res, "h": 1.0 / res, "value": float(f[0]), "exact": float("nan"), "error": float(spread)}


def _commutator_row(res, seed):
    cx, m = build_box(2, res)
    rng = np.random.default_rng([seed, res])
    etas = [random_solution(cx, m, rng) for _ in range(3)]
    cut = cut_from_level(cx, m, lambda p: p[:, 0], _generic_level(m.cell_barycenters()[:, 0], 0.5))
    r = commutator_field(cx, m, field_a, field_b, cut=cut, etas=etas)
    return {"res": res, "h": 1.0 / res, "value": float(r["values"][0]), "exact": float("nan"),
            "error": float(r["relative_spread"])}


STUDIES = {
    "helicity": _helicity_row,
    "current": _current_row,
    "conservation": _conservation_row,
    "commutator": _commutator_row,
}


def refinement_study(kind: str, resolutions, seed: int = 0) -> dict:
    """Error per resolution for one of the named studies, with the fitted order in h."""
    if kind not in STUDIES:
        raise ValueError(f"unknown study {kind!r}; choose from {', '.join(STUDIES)}")
    resolutions = [int(r) for r in resolutions]
    if len(resolutions) < 3:
        raise ValueError("a refinement study needs at least 3 resolutions")
    rows = [STUDIES[kind](r, seed) for r in resolutions]
    errs = [r["error"] for r in rows]
    return {
        "kind": kind,
        "rows": rows,
        "order": fitted_order([r["h"] for r in rows], errs),
        "monotone": bool(all(b < a for a, b in zip(errs, errs[1:]))),
    }


def study_csv(study: dict) -> str:
    buf = io.StringIO()
    cols = ["res", "h", "value", "exact", "error"]
    writer = csv.DictWriter(buf, fieldnames=cols)
    writer.writeheader()
    for row in study["rows"]:
        writer.writerow({c: row[c] for c in cols})
    return buf.getvalue()


def dec_for(name: str, res: int):
    cx, m = build_mesh(name, res)
    return cx, m, get_dec(cx, m)
