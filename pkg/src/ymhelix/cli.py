"""Command-line front end: ``ym-helix <command> [options]``.

Every command writes one JSON report (stdout, or --out) holding the full
config, the computed values and pass/fail flags. ``ym-helix replay REPORT``
reruns the config embedded in a report.

Exit codes: 0 all checks pass, 1 an invariant check failed, 2 bad input,
3 solver failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dec import Cochain
from .geometry import betti_numbers, build_box, save_mesh
from .gluing import GluingError, face_gluing_map, gluing_dimension_check
from .observables import (CutError, Observable, aharonov_bohm_oracle, generator,
                          helicity_observable, lie_derivative, parse_cut, poisson_bracket,
                          separation_certificate, slit_cut, standard_cuts, symplectic_pairing)
from .solver import DEFAULT_TOL, NullspaceError, SolverError
from .studies import MESHES, STUDIES, build_mesh, refinement_study, study_csv
from .verify import SUITE, run_suite
from .ym import (Connection, Mesh, boundary_map, harmonic_basis, hmf_decompose, is_solution,
                 lorentz_gauge_fix, random_solution, solve_ym, uniform_field)

log = logging.getLogger("ymhelix")

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3
DEFAULT_MESH = "box3"
DEFAULT_RES = {"box2": 8, "box3": 4, "box4": 2, "annulus": 3, "torus": 2, "periodic3": 4}
GLUE_PAIRS = ("squares", "cubes", "ring2", "ring3")


@dataclass
class ExperimentConfig:
    command: str
    mesh: str | None = None
    res: int | None = None
    seed: int = 0
    tol: float = DEFAULT_TOL
    out: str | None = None
    threads: int = 1
    params: dict = field(default_factory=dict)

    def mesh_name(self) -> str:
        return self.mesh or DEFAULT_MESH

    def resolution(self) -> int:
        return self.res if self.res is not None else DEFAULT_RES.get(self.mesh_name(), 4)


# ---------------------------------------------------------------- helpers
def _mesh(cfg):
    return build_mesh(cfg.mesh_name(), cfg.resolution())


def _rng(cfg, stream: int):
    return np.random.default_rng([cfg.seed, stream])


def _load_cochain(path, m_expected):
    c = Cochain.from_json(Path(path).read_text())
    if c.degree != 1 or len(c.values) != m_expected:
        raise ValueError(f"{path}: expected a 1-cochain with {m_expected} values")
    return c.values


def _connection(cfg, cx, m):
    return Connection(Mesh.of(cx, m).dec, random_solution(cx, m, _rng(cfg, 1000)))


def _cut(cfg, cx, m):
    text = cfg.params.get("cut")
    if text:
        return parse_cut(text, cx, m)
    cuts = standard_cuts(cx, m)
    if not cuts:
        raise CutError("mesh admits no standard cut; pass --cut")
    return cuts[0]


# --------------------------------------------------------------- commands
def cmd_mesh(cfg):
    cx, m = _mesh(cfg)
    if cfg.params.get("save"):
        save_mesh(cfg.params["save"], cx, m)
    return {
        "f_vector": cx.f_vector,
        "euler_characteristic": cx.euler_characteristic,
        "betti": betti_numbers(cx),
        "betti_relative": betti_numbers(cx, relative=True),
        "closed": cx.is_closed,
        "boundary_components": cx.boundary_components(),
        "volume": m.total_volume,
    }, True


def cmd_solve(cfg):
    cx, m = _mesh(cfg)
    mesh = Mesh.of(cx, m)
    if cfg.params.get("dirichlet"):
        data = np.asarray(json.loads(Path(cfg.params["dirichlet"]).read_text()), dtype=float)
    else:
        data = _rng(cfg, 1).standard_normal(len(mesh.bedges))
    conn, rep = solve_ym(cx, m, data, tol=cfg.tol)
    ok, res = is_solution(conn)
    if cfg.params.get("save"):
        Path(cfg.params["save"]).write_text(Cochain(1, conn.eta).to_json())
    return {
        "boundary_edges": len(mesh.bedges),
        "interior_residual": res,
        "relative_residual": rep.residual,
        "iterations": rep.iterations,
        "kernel_dim": rep.kernel_dim,
        "energy": float(conn.eta @ (mesh.K @ conn.eta)),
    }, ok


def cmd_gauge_fix(cfg):
    cx, m = _mesh(cfg)
    mesh = Mesh.of(cx, m)
    flavor = cfg.params.get("flavor", "dirichlet")
    if cfg.params.get("cochain"):
        phi = _load_cochain(cfg.params["cochain"], cx.count(1))
    else:
        phi = _rng(cfg, 2).standard_normal(cx.count(1))
    fixed, psi = lorentz_gauge_fix(mesh, phi, flavor, tol=cfg.tol)
    div = mesh.gauge_operator @ fixed
    verts = mesh.iverts if flavor == "dirichlet" else np.arange(cx.n_vertices)
    worst = float(np.abs(div[verts]).max(initial=0.0))
    if cfg.params.get("save"):
        Path(cfg.params["save"]).write_text(Cochain(1, fixed).to_json())
    return {"flavor": flavor, "max_divergence": worst,
            "gauge_function_norm": float(np.linalg.norm(psi))}, worst <= 1e-10 * (1 + np.abs(fixed).max())


def cmd_decompose(cfg):
    cx, m = _mesh(cfg)
    if cfg.params.get("cochain"):
        alpha = _load_cochain(cfg.params["cochain"], cx.count(1))
    else:
        alpha = _rng(cfg, 3).standard_normal(cx.count(1))
    d = hmf_decompose(cx, m, alpha, tol=cfg.tol)
    dec = Mesh.of(cx, m).dec
    names = ["exact_dirichlet", "harmonic_neumann", "harmonic_exact", "coexact_neumann"]
    worst = max([d.residual, d.coexact_residual, *d.orthogonality.values()])
    return {
        "norms": {k: dec.norm(p, 1) for k, p in zip(names, d.parts)},
        "reconstruction": d.residual,
        "coexact_residual": d.coexact_residual,
        "orthogonality": d.orthogonality,
    }, worst < 1e-8


def cmd_harmonic(cfg):
    cx, m = _mesh(cfg)
    b, b_rel = betti_numbers(cx), betti_numbers(cx, relative=True)
    dn = harmonic_basis(cx, m, "neumann").shape[1]
    out = {"dim_h1_neumann": dn, "b1": b[1]}
    ok = dn == b[1]
    if not cx.is_closed:
        dd = harmonic_basis(cx, m, "dirichlet").shape[1]
        out.update(dim_h1_dirichlet=dd, b1_relative=b_rel[1])
        ok = ok and dd == b_rel[1]
    return out, ok


def cmd_boundary_map(cfg):
    cx, m = _mesh(cfg)
    R, rep, _ = boundary_map(cx, m)
    b_rel = betti_numbers(cx, relative=True)[1]
    return {**rep.as_dict(), "shape": list(R.shape), "b1_relative": b_rel}, rep.kernel_dim == b_rel


def cmd_observe(cfg):
    cx, m = _mesh(cfg)
    name = cfg.params.get("generator", "g0")
    cut = _cut(cfg, cx, m)
    obs = Observable(generator(name, cx, m, cfg.seed), cut, name)
    eta = _connection(cfg, cx, m)
    return {
        "generator": name,
        "cut": cut.describe(),
        "connection": f"random_solution(seed={cfg.seed})",
        "value": obs(eta),
        "warnings": obs.warnings,
    }, not obs.warnings


def cmd_bracket(cfg):
    cx, m = _mesh(cfg)
    cut = _cut(cfg, cx, m)
    n1, n2 = cfg.params.get("gen1", "g1"), cfg.params.get("gen2", "g2")
    o1 = Observable(generator(n1, cx, m, cfg.seed), cut, n1)
    o2 = Observable(generator(n2, cx, m, cfg.seed), cut, n2)
    eta = _connection(cfg, cx, m)
    b12, b21 = poisson_bracket(o1, o2), poisson_bracket(o2, o1)
    oracle = lie_derivative(o1, eta, o2.phi)
    omega = symplectic_pairing(cut, eta, o2.phi, o1.phi)
    ok = b12 == -b21 and abs(b12 - oracle) < 1e-12 and not (o1.warnings or o2.warnings)
    return {
        "cut": cut.describe(),
        "bracket": b12,
        "reverse": b21,
        "symplectic_pairing": omega,
        "directional_derivative": oracle,
        "warnings": o1.warnings + o2.warnings,
    }, ok


def cmd_hamilton(cfg):
    cx, m = _mesh(cfg)
    cut = _cut(cfg, cx, m)
    name = cfg.params.get("generator", "g0")
    direction = cfg.params.get("direction", "g5")
    obs = Observable(generator(name, cx, m, cfg.seed), cut, name)
    w = generator(direction, cx, m, cfg.seed)
    eta = _connection(cfg, cx, m)
    exact = lie_derivative(obs, eta, w)
    fd = lie_derivative(obs, eta, w, mode="fd")
    om = symplectic_pairing(cut, eta, obs.phi, w)
    disc = abs(exact + om)
    return {"cut": cut.describe(), "lie_derivative": exact, "lie_derivative_fd": fd,
            "omega": om, "discrepancy": disc}, disc < 1e-11


def cmd_separate(cfg):
    cx, m = _mesh(cfg)
    mesh = Mesh.of(cx, m)
    kind = cfg.params.get("pair", "random")
    eta = _connection(cfg, cx, m)
    rng = _rng(cfg, 4)
    extra = {}
    if kind == "gauge":
        f = rng.standard_normal(cx.n_vertices)
        f[mesh.bverts] = 0.0
        other = eta.shifted(mesh.d0 @ f)
    elif kind == "random":
        data = eta.eta[mesh.bedges] + 0.1 * rng.standard_normal(len(mesh.bedges))
        other, _ = solve_ym(cx, m, data, tol=cfg.tol)
    elif kind == "ab":
        H = harmonic_basis(cx, m, "dirichlet")
        if not H.shape[1] or cx.dimension != 2:
            raise ValueError("the ab pair needs a 2D mesh with a harmonic Dirichlet field (annulus)")
        other = eta.shifted(H[:, 0])
        phi = uniform_field(cx, m)
        slit = slit_cut(cx, m, 0.1, np.pi)
        delta = helicity_observable(phi, slit, other) - helicity_observable(phi, slit, eta)
        oracle = aharonov_bohm_oracle(cx, m, phi, H[:, 0])
        extra = {"slit_delta": delta, "oracle": oracle,
                 "relative_error": abs(delta - oracle) / abs(oracle),
                 "boundary_mismatch": float(np.abs(other.eta[mesh.bedges] - eta.eta[mesh.bedges]).max())}
    else:
        raise ValueError(f"unknown pair {kind!r}; choose gauge, random or ab")
    cert = separation_certificate(eta, other, seed=cfg.seed)
    ok = cert.verdict != "undecided"
    if kind == "ab":
        ok = ok and extra["relative_error"] <= 0.05
    return {"pair": kind, **cert.as_dict(), **extra}, ok


def _glue_pair(name):
    if name == "squares":
        U1, U2 = build_box(2, 2), build_box(2, 2)
        return U1, U2, face_gluing_map(U1, U2, 0)
    if name == "cubes":
        U1, U2 = build_box(3, 1), build_box(3, 1)
        return U1, U2, face_gluing_map(U1, U2, 0)
    if name == "ring2":
        U = build_box(2, [3, 2])
        return U, None, face_gluing_map(U, None, 0)
    if name == "ring3":
        U = build_box(3, [3, 1, 1], [3, 1, 1])
        return U, None, face_gluing_map(U, None, 0)
    raise ValueError(f"unknown pair {name!r}; choose from {', '.join(GLUE_PAIRS)}")


def cmd_glue(cfg):
    names = [cfg.params["pair"]] if cfg.params.get("pair") else list(GLUE_PAIRS)
    out = {}
    for name in names:
        out[name] = gluing_dimension_check(*_glue_pair(name))
    return out, all(r["equal"] for r in out.values())


def cmd_verify(cfg):
    if cfg.mesh:
        meshes = [(cfg.mesh, cfg.res)]
    else:
        meshes = list(SUITE.items())
    rep = run_suite(meshes, seed=cfg.seed, tol=cfg.tol, threads=cfg.threads,
                    trials=cfg.params.get("trials", 5))
    for r in rep["meshes"]:
        for rec in r["records"]:
            if not rec["passed"]:
                log.warning("%s: %s failed (value %.3e, tolerance %g)", r["mesh"], rec["check"],
                            rec["value"], rec["tolerance"])
    return rep, rep["passed"]


def cmd_study(cfg):
    kind = cfg.params.get("kind", "helicity")
    resolutions = cfg.params.get("resolutions") or {"helicity": [4, 8, 16], "current": [8, 16, 32],
                                                    "conservation": [3, 4, 5],
                                                    "commutator": [8, 16, 32]}[kind]
    study = refinement_study(kind, resolutions, seed=cfg.seed)
    files = {}
    if cfg.out:
        stem = Path(cfg.out).with_suffix("")
        csv_path = stem.with_suffix(".csv")
        csv_path.write_text(study_csv(study))
        files["csv"] = str(csv_path)
        if cfg.params.get("plot", True):
            try:
                from .plotting import plot_study
                files["figure"] = str(plot_study(study, stem.with_suffix(".png")))
            except RuntimeError as exc:
                log.warning("%s", exc)
    if kind == "conservation":
        ok = max(r["error"] for r in study["rows"]) <= 1e-11
    else:
        ok = study["monotone"]
    return {**study, "files": files}, ok


COMMANDS = {
    "mesh": cmd_mesh,
    "solve": cmd_solve,
    "gauge-fix": cmd_gauge_fix,
    "decompose": cmd_decompose,
    "harmonic": cmd_harmonic,
    "boundary-map": cmd_boundary_map,
    "observe": cmd_observe,
    "bracket": cmd_bracket,
    "hamilton": cmd_hamilton,
    "separate": cmd_separate,
    "glue": cmd_glue,
    "verify": cmd_verify,
    "study": cmd_study,
}


# ------------------------------------------------------------------- run
def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def run(cfg: ExperimentConfig) -> tuple[dict, int]:
    """Execute one experiment; returns (report, exit code). Errors become failure records."""
    report = {"version": __version__, "config": asdict(cfg)}
    try:
        results, ok = COMMANDS[cfg.command](cfg)
        report.update(results=results, passed=bool(ok))
        code = EXIT_OK if ok else EXIT_FAIL
    except (SolverError, NullspaceError) as exc:
        report.update(passed=False, error={"kind": type(exc).__name__, "message": str(exc)})
        rep = getattr(exc, "report", None)
        if rep is not None:
            report["error"]["solve"] = rep.as_dict()
        code = EXIT_SOLVER
    except (ValueError, KeyError, OSError, CutError, GluingError) as exc:
        report.update(passed=False, error={"kind": type(exc).__name__, "message": str(exc)})
        if isinstance(exc, GluingError):
            report["error"]["details"] = exc.details
        code = EXIT_INPUT
    return report, code


def write_report(report: dict, out: str | None) -> str:
    text = json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return text


def _resolutions(text):
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad resolution list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mesh", choices=MESHES, help="standard mesh (default box3; verify: all)")
    common.add_argument("--res", type=int, help="mesh resolution (cells across)")
    common.add_argument("--seed", type=int, default=0, help="seed for every random input")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="solver tolerance")
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--threads", type=int, default=1,
                        help="parallel independent experiments (verify only)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ym-helix", description="Discrete abelian Yang-Mills helicity lab.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help):
        return sub.add_parser(name, parents=[common], help=help)

    add("mesh", "mesh summary: f-vector, Betti numbers").add_argument("--save", help="write mesh JSON")
    s = add("solve", "solve with random (or given) Dirichlet data")
    s.add_argument("--dirichlet", help="JSON list of boundary-edge values")
    s.add_argument("--save", help="write the solution cochain JSON")
    s = add("gauge-fix", "Lorentz gauge fixing")
    s.add_argument("--flavor", choices=("dirichlet", "neumann"), default="dirichlet")
    s.add_argument("--cochain", help="input 1-cochain JSON (default: random)")
    s.add_argument("--save", help="write the gauge-fixed cochain JSON")
    add("decompose", "four-part Hodge decomposition of a 1-cochain").add_argument(
        "--cochain", help="input 1-cochain JSON (default: random)")
    add("harmonic", "harmonic field dimensions against Betti numbers")
    add("boundary-map", "boundary-conditions map and its kernel")
    for name, help in (("observe", "evaluate a helicity observable"),
                       ("hamilton", "Hamilton's equation check")):
        s = add(name, help)
        s.add_argument("--generator", default="g0",
                       help="harmonicK, dirichletK, uniform or gK (seeded random)")
        s.add_argument("--cut", help='"x:0.5", "radial:1.5" or "angle:t1:t2" (default: first standard cut)')
        if name == "hamilton":
            s.add_argument("--direction", default="g5", help="generator name of the variation")
    s = add("bracket", "Poisson bracket of two observables")
    s.add_argument("--gen1", default="g1")
    s.add_argument("--gen2", default="g2")
    s.add_argument("--cut")
    add("separate", "separation certificate for a pair of solutions").add_argument(
        "--pair", choices=("gauge", "random", "ab"), default="random")
    add("glue", "gluing dimension check on standard pairs").add_argument("--pair", choices=GLUE_PAIRS)
    add("verify", "full invariant suite").add_argument("--trials", type=int, default=5)
    s = add("study", "mesh-refinement study (JSON report, CSV and PNG next to --out)")
    s.add_argument("--kind", choices=tuple(STUDIES), default="helicity")
    s.add_argument("--resolutions", type=_resolutions, help="comma list, at least 3")
    s.add_argument("--no-plot", dest="plot", action="store_false")

    s = sub.add_parser("replay", help="rerun the config embedded in a report")
    s.add_argument("report")
    s.add_argument("--out")
    return p


_GLOBAL = ("mesh", "res", "seed", "tol", "out", "threads")


def config_from_args(args) -> ExperimentConfig:
    params = {k: v for k, v in vars(args).items()
              if k not in _GLOBAL + ("command", "verbose") and v is not None}
    return ExperimentConfig(args.command, **{k: getattr(args, k) for k in _GLOBAL}, params=params)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "replay":
        try:
            data = json.loads(Path(args.report).read_text())["config"]
            cfg = ExperimentConfig(**data)
        except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
            write_report({"passed": False, "error": {"kind": type(exc).__name__, "message": str(exc)}},
                         args.out)
            return EXIT_INPUT
        cfg.out = args.out
    else:
        cfg = config_from_args(args)
    if cfg.command not in COMMANDS:
        write_report({"passed": False, "error": {"kind": "ValueError",
                                                 "message": f"unknown command {cfg.command!r}"}}, cfg.out)
        return EXIT_INPUT
    report, code = run(cfg)
    write_report(report, cfg.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
