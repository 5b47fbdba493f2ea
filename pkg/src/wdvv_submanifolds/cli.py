"""Command line entry point.

Every subcommand loads a JSON problem file, runs its checks and prints a JSON
report on stdout. Exit status: 0 when every check passes, 1 when a residual
exceeds its tolerance, 2 on input errors (reported as JSON on stderr).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bonnet_builder as bb
from . import frobenius_algebra as fa
from . import hydro_flows as hf
from . import lax_integrator as lx
from . import submanifold_equations as se
from .potential_field import (
    Domain,
    ProblemSpec,
    _fraction_str,
    load_problem,
    to_fraction,
)
from .residuals import ResidualReport, sweep

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


# --------------------------------------------------------------------------
# deterministic JSON


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return json.dumps(str(x))
    text = format(x, ".17g")
    return text if any(ch in text for ch in ".e") else text + ".0"


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with insertion-ordered keys and floats at 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, Fraction):
        return _fmt_float(float(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    return json.dumps(str(obj))


# --------------------------------------------------------------------------
# report assembly


def _num(x):
    return _fraction_str(x) if isinstance(x, Fraction) else float(x)


class Report:
    def __init__(self, command: str, spec_path: Path, spec: ProblemSpec, timings: bool):
        self.command = command
        self.fingerprint = hashlib.sha256(spec_path.read_bytes()).hexdigest()
        self.spec = spec
        self.timings = timings
        self.checks: list[dict] = []
        self.extra: dict = {}

    def add(self, name: str, value, tolerance: float, started: float,
            worst_point=(), worst_indices=(), extra: dict | None = None) -> None:
        entry = {"name": name, "value": float(value)}
        if isinstance(value, Fraction):
            entry["exact_value"] = _fraction_str(value)
        entry["tolerance"] = float(tolerance)
        entry["pass"] = bool(value <= tolerance)
        if worst_point is not None:
            entry["worst_point"] = [_num(x) for x in worst_point]
        if worst_indices is not None:
            entry["worst_indices"] = [int(i) for i in worst_indices]
        if extra:
            entry.update(extra)
        if self.timings:
            entry["wall_clock_s"] = time.perf_counter() - started
        self.checks.append(entry)

    def add_residual(self, r: ResidualReport, tolerance: float, started: float) -> None:
        self.add(r.name, r.value, tolerance, started, r.worst_point, r.worst_indices)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def to_dict(self) -> dict:
        out = {
            "schema": SCHEMA,
            "command": self.command,
            "spec_fingerprint": self.fingerprint,
            "arithmetic": "rational" if self.spec.exact else "float",
            "n": self.spec.n,
            "l": self.spec.l,
            "checks": self.checks,
            "pass": self.passed,
        }
        out.update(self.extra)
        return out


# --------------------------------------------------------------------------
# helpers


def _parse_point(text: str | None, spec: ProblemSpec):
    if text is None:
        return None
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != spec.n:
        raise InputError(f"--point needs {spec.n} comma-separated coordinates")
    try:
        if spec.exact:
            return tuple(to_fraction(p) for p in parts)
        return tuple(float(Fraction(p.strip())) for p in parts)
    except (TypeError, ValueError) as exc:
        raise InputError(f"--point: {exc}") from exc


def _points(args, spec: ProblemSpec) -> list[tuple]:
    point = _parse_point(args.point, spec)
    if point is not None:
        return [point]
    return spec.grid_points()


def _algebra_tol(spec: ProblemSpec) -> float:
    return spec.tolerances["exact"] if spec.exact else spec.tolerances["algebra"]


def _require_phi(spec: ProblemSpec) -> None:
    if spec.phi is None:
        raise InputError("this command needs a potential 'phi'")


def _load(args) -> ProblemSpec:
    exact = None
    if args.arithmetic is not None:
        exact = args.arithmetic == "rational"
    spec = load_problem(args.spec, exact)
    dom = spec.domain
    if args.grid is not None:
        if args.grid < 1:
            raise InputError("--grid must be positive")
        dom = Domain(dom.base, dom.half_width, args.grid)
    tols = dict(spec.tolerances)
    for key in ("exact", "algebra", "ode", "fd"):
        value = getattr(args, f"tol_{key}")
        if value is not None:
            tols[key] = value
    return ProblemSpec(spec.n, spec.l, spec.eta_inv, spec.mu_inv, dom, spec.psi, spec.phi,
                       spec.mu_scale, spec.exact, tols)


def _float_point(p) -> list[float]:
    return [float(x) for x in p]


# --------------------------------------------------------------------------
# subcommands


def cmd_check_wdvv(args, spec, rep: Report) -> None:
    _require_phi(spec)
    pts = _points(args, spec)
    tol = _algebra_tol(spec)
    eta = spec.eta

    t = time.perf_counter()
    rep.add_residual(sweep("wdvv", lambda p: fa.wdvv_tensor(spec.phi, spec.eta_inv, p), pts), tol, t)
    t = time.perf_counter()
    rep.add_residual(sweep("associativity", lambda p: fa.associativity_tensor(
        fa.structure_constants(spec.phi, spec.eta_inv, p)), pts), tol, t)
    t = time.perf_counter()
    rep.add_residual(sweep("invariance", lambda p: fa.invariance_tensor(
        fa.structure_constants(spec.phi, spec.eta_inv, p), eta), pts), tol, t)
    rep.extra["points"] = len(pts)


def cmd_check_gcr(args, spec, rep: Report) -> None:
    pts = _points(args, spec)
    tol = _algebra_tol(spec)
    psi = spec.potentials

    t = time.perf_counter()
    rep.add_residual(sweep("gauss", lambda p: se.gauss_tensor(se.second_forms(psi, p), spec.mu_inv), pts),
                     tol, t)
    t = time.perf_counter()
    rep.add_residual(sweep("ricci", lambda p: se.ricci_tensor(se.second_forms(psi, p), spec.eta_inv), pts),
                     tol, t)
    t = time.perf_counter()
    rep.add_residual(sweep("codazzi", lambda p: se.codazzi_tensor(psi, p), pts), tol, t)
    rep.extra["points"] = len(pts)
    pos, neg = se.ambient_signature(spec.eta_inv, spec.mu_inv)
    rep.extra["ambient_signature"] = [pos, neg]


def cmd_check_reduction(args, spec, rep: Report) -> None:
    _require_phi(spec)
    if args.c is not None:
        try:
            c = to_fraction(args.c) if spec.exact else float(Fraction(args.c))
        except (TypeError, ValueError) as exc:
            raise InputError(f"--c: {exc}") from exc
    elif spec.mu_scale is not None:
        c = spec.mu_scale if spec.exact else float(spec.mu_scale)
    else:
        c = Fraction(1) if spec.exact else 1.0
    if c == 0:
        raise InputError("--c must be nonzero")
    pts = _points(args, spec)
    tol = _algebra_tol(spec)
    t = time.perf_counter()
    res = se.reduction_check(spec.phi, spec.eta_inv, c, pts, tol)
    rep.add("reduction_deviation", res.deviation, tol, t, res.worst_point, None)
    rep.extra["c"] = _num(c)
    rep.extra["points"] = len(pts)


def _float_list(text: str, what: str) -> list[float]:
    try:
        return [float(Fraction(v.strip())) for v in text.split(",") if v.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"{what}: {exc}") from exc


def cmd_lax_holonomy(args, spec, rep: Report) -> None:
    system = lx.LaxSystem.from_spec(spec)
    base = _parse_point(args.point, spec) or spec.domain.base
    base = _float_point(base)
    loops = _float_list(args.loop_size, "--loop-size")
    params = _float_list(args.params, "--params")
    if args.substeps < 1:
        raise InputError("--substeps must be positive")
    t = time.perf_counter()
    table = lx.holonomy_table(base, loops, system, params, args.substeps)
    worst = max(table, key=lambda r: r["defect"])
    rep.add("holonomy", worst["defect"], spec.tolerances["ode"], t, base, None,
            {"lambda": worst["lambda"], "rho": worst["rho"], "h_loop": worst["h_loop"]})
    t = time.perf_counter()
    b1 = b2 = 0.0
    for p in _points(args, spec):
        r1, r2 = lx.consistency_residual(spec.potentials, spec.eta_inv, spec.mu_inv, p)
        b1, b2 = max(b1, r1), max(b2, r2)
    tol = _algebra_tol(spec)
    rep.add("consistency_b1", b1, tol, t, None, None)
    rep.add("consistency_b2", b2, tol, t, None, None)
    if len(loops) >= 2:
        by_h = {h: max(r["defect"] for r in table if r["h_loop"] == h) for h in loops}
        if all(v > 0 for v in by_h.values()):
            rep.extra["loop_scaling_exponent"] = lx.scaling_exponent(list(by_h), list(by_h.values()))
    rep.extra["substeps"] = args.substeps
    rep.extra["table"] = table


def _write_point_cloud(path: Path, grid: bb.ImmersionGrid, drift, frames: bool) -> None:
    n, amb = grid.n, grid.n + grid.l
    header = [f"u{i + 1}" for i in range(n)] + [f"r{a + 1}" for a in range(amb)]
    if frames:
        header += [f"T{i + 1}_{a + 1}" for i in range(n) for a in range(amb)]
        header += [f"n{b + 1}_{a + 1}" for b in range(grid.l) for a in range(amb)]
    if drift is not None:
        header.append("gram_drift")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for idx, u in grid.nodes():
            f = grid.frames[idx]
            row = list(u) + list(f[0])
            if frames:
                row += list(f[1:1 + n].ravel()) + list(f[1 + n:].ravel())
            if drift is not None:
                row.append(drift[idx])
            w.writerow([format(float(v), ".17g") for v in row])


def cmd_reconstruct(args, spec, rep: Report) -> None:
    t = time.perf_counter()
    grid, form = bb.reconstruct(spec, args.substeps)
    eta = spec.eta
    rep.add("induced_metric", bb.verify_induced_metric(grid, form, eta), spec.tolerances["ode"], t, None, None)
    drift = bb.gram_drift(grid, form)
    t = time.perf_counter()
    rep.add("gram_drift", float(np.max(drift)), spec.tolerances["ode"], t, None, None)
    if min(len(a) for a in grid.axes) >= 3:
        t = time.perf_counter()
        rep.add("second_forms", bb.verify_second_forms(grid, form, spec.potentials, args.stencil),
                spec.tolerances["fd"], t, None, None)
        t = time.perf_counter()
        rep.add("torsion", bb.verify_torsion(grid, form, args.stencil), spec.tolerances["fd"], t, None, None)
    if spec.n > 1:
        t = time.perf_counter()
        pdep = bb.path_dependence(spec, substeps=args.substeps)
        rep.add("path_independence", float(np.max(pdep)), spec.tolerances["ode"], t, None, None)
    if args.out:
        _write_point_cloud(Path(args.out), grid, drift if args.gram_drift else None, args.frames)
        rep.extra["out"] = str(args.out)
    rep.extra["nodes"] = int(np.prod([len(a) for a in grid.axes]))
    rep.extra["ambient_signature"] = list(form.signature())


def cmd_flows(args, spec, rep: Report) -> None:
    system = hf.FlowSystem.from_spec(spec)
    base = _float_point(_parse_point(args.point, spec) or spec.domain.base)
    if args.pair:
        try:
            pairs = [tuple(int(v) - 1 for v in args.pair.split(","))]
        except ValueError as exc:
            raise InputError(f"--pair: {exc}") from exc
        if len(pairs[0]) != 2 or not all(0 <= a < spec.l for a in pairs[0]):
            raise InputError(f"--pair needs two flow indices in 1..{spec.l}")
    else:
        pairs = list(itertools.combinations(range(spec.l), 2))
    if args.points < hf.MIN_POINTS:
        raise InputError(f"--points must be at least {hf.MIN_POINTS}")
    state = hf.GridState.single_mode(base, args.points, args.amplitude)
    table = []
    for a, b in pairs:
        t = time.perf_counter()
        d = hf.commutator_defect(state, a, b, args.dt, args.steps, system, args.filter)
        table.append({"alpha": a + 1, "beta": b + 1, "defect": d})
        rep.add(f"commutator_{a + 1}_{b + 1}", d, spec.tolerances["ode"], t, None, None)
    rep.extra["dt"] = args.dt
    rep.extra["steps"] = args.steps
    rep.extra["grid_points"] = args.points
    rep.extra["amplitude"] = args.amplitude
    rep.extra["commutators"] = table
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["flow", "step", "t", "max_norm", "l2_norm"])
            for alpha in sorted({i for p in pairs for i in p}):
                for row in hf.norm_series(state, alpha, args.dt, args.steps, system, args.filter):
                    w.writerow([alpha + 1, row["step"], format(row["t"], ".17g"),
                                format(row["max_norm"], ".17g"), format(row["l2_norm"], ".17g")])
        rep.extra["out"] = str(args.out)


def _matrix(a) -> list:
    return [[_num(x) for x in row] for row in a]


def cmd_algebra(args, spec, rep: Report) -> None:
    point = _parse_point(args.point, spec) or spec.domain.base
    tol = _algebra_tol(spec)
    t = time.perf_counter()
    w = fa.weingarten_operators(spec.potentials, spec.eta_inv, point)
    rep.add("weingarten_commutator", fa.weingarten_commutator_defect(w), tol, t, point, None)
    rep.extra["point"] = [_num(x) for x in point]
    rep.extra["weingarten_operators"] = [_matrix(op) for op in w.operators]
    if spec.phi is not None:
        t = time.perf_counter()
        c = fa.structure_constants(spec.phi, spec.eta_inv, point)
        rep.add("associativity", fa.associativity_residual(c), tol, t, point, None)
        rep.add("invariance", fa.invariance_residual(c, spec.eta), tol, t, point, None)
        rep.extra["structure_constants"] = [_matrix(c.c[k]) for k in range(spec.n)]
        rep.extra["structure_constants_layout"] = "c[k][i][j] = coefficient of e_k in e_i*e_j"


COMMANDS = {
    "check-wdvv": cmd_check_wdvv,
    "check-gcr": cmd_check_gcr,
    "check-reduction": cmd_check_reduction,
    "lax-holonomy": cmd_lax_holonomy,
    "reconstruct": cmd_reconstruct,
    "flows": cmd_flows,
    "algebra": cmd_algebra,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wdvv-sub",
        description="Verify WDVV potentials, flat torsionless submanifold data and their reconstructions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("spec", help="JSON problem file")
    common.add_argument("--point", help="single point u1,u2,... (rationals allowed)")
    common.add_argument("--grid", type=int, help="override grid points per axis")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--rational", dest="arithmetic", action="store_const", const="rational")
    mode.add_argument("--float", dest="arithmetic", action="store_const", const="float")
    for key in ("exact", "algebra", "ode", "fd"):
        common.add_argument(f"--tol-{key}", type=float, default=None)
    common.add_argument("--out", help="path for CSV output")
    common.add_argument("--timings", action="store_true",
                        help="add wall-clock times (makes reports non-reproducible)")

    sub.add_parser("check-wdvv", parents=[common], help="WDVV, associativity and invariance residuals")
    sub.add_parser("check-gcr", parents=[common], help="Gauss, Ricci and Codazzi residuals")
    p = sub.add_parser("check-reduction", parents=[common], help="potential reduction identity")
    p.add_argument("--c", help="scale in mu^-1 = c eta^-1 (default: from the file, else 1)")
    p = sub.add_parser("lax-holonomy", parents=[common], help="loop holonomy of the linear problem")
    p.add_argument("--loop-size", default="0.1", help="comma-separated loop sizes")
    p.add_argument("--params", default="-1,-1/2,1/2,1,2", help="values for both lambda and rho")
    p.add_argument("--substeps", type=int, default=lx.DEFAULT_SUBSTEPS, help="RK4 steps per loop edge")
    p = sub.add_parser("reconstruct", parents=[common], help="integrate the frame and verify the immersion")
    p.add_argument("--substeps", type=int, default=bb.DEFAULT_CELL_SUBSTEPS, help="RK4 steps per grid cell")
    p.add_argument("--stencil", type=int, default=bb.DEFAULT_STENCIL, help="finite-difference stencil width")
    p.add_argument("--frames", action="store_true", help="include frame vectors in the CSV")
    p.add_argument("--gram-drift", action="store_true", help="include per-node Gram drift in the CSV")
    p = sub.add_parser("flows", parents=[common], help="commutativity of the hydrodynamic flows")
    p.add_argument("--pair", help="two 1-based flow indices, e.g. 1,2 (default: all pairs)")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--points", type=int, default=128, help="periodic grid size")
    p.add_argument("--amplitude", type=float, default=1e-2)
    p.add_argument("--filter", action="store_true", help="damp the top third of Fourier modes")
    sub.add_parser("algebra", parents=[common], help="structure constants and shape operators at a point")
    return parser


def _error(kind: str, message: str) -> int:
    sys.stderr.write(dumps({"schema": SCHEMA, "error": {"type": kind, "message": message}}) + "\n")
    return EXIT_INPUT


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        spec = _load(args)
        rep = Report(args.command, Path(args.spec), spec, args.timings)
        COMMANDS[args.command](args, spec, rep)
    except FileNotFoundError as exc:
        return _error("FileNotFoundError", str(exc))
    except (InputError, ValueError, IndexError) as exc:
        return _error(type(exc).__name__, str(exc))
    sys.stdout.write(dumps(rep.to_dict()) + "\n")
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
