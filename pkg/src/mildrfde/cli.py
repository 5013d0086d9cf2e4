"""Command line front end.

``solve``   writes ``trajectory.csv`` and ``forcing.csv``.
``verify``  solves, runs the certification checks and writes ``report.json``.
``props``   runs the seeded randomized suites and writes ``report.json``.

Exit status: 0 when every check passes, 1 when a check fails, 2 on input or
I/O errors.  ``MILDRFDE_TOL_SCALE`` multiplies every tolerance.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .errors import PicardError, SolverConfigError, StepRejection
from .forcing import (
    check_G_bound,
    check_G_is_volterra_of_g,
    forcing_function,
    forcing_report,
)
from .model import kernel_variation, lp_norm
from .problem import ProblemSpec, SchemaError, parse_problem
from .randomized import run_all
from .rs_calculus import norms
from .solver import solve_classical, solve_forced_dde, solve_mild

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
TOL_ENV = "MILDRFDE_TOL_SCALE"


class InputError(Exception):
    pass


def tolerance_scale() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return 1.0
    try:
        val = float(raw)
    except ValueError:
        raise InputError(f"{TOL_ENV} must be a positive number, got {raw!r}") from None
    if not val > 0 or not math.isfinite(val):
        raise InputError(f"{TOL_ENV} must be a positive number, got {raw!r}")
    return val


def _json_safe(v):
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_report(path: Path, report: dict):
    path.write_text(json.dumps(_json_safe(report), sort_keys=True, indent=2) + "\n")


def write_csv(path: Path, header, columns):
    data = np.column_stack(columns)
    np.savetxt(path, data, delimiter=",", header=",".join(header), comments="", fmt="%.17g")


def record(check, anchor, lhs, rhs, tol, passed=None) -> dict:
    lhs, rhs, tol = float(lhs), float(rhs), float(tol)
    if passed is None:
        passed = lhs <= rhs + tol
    return {"check": check, "anchor": anchor, "lhs": lhs, "rhs": rhs, "tol": tol, "pass": bool(passed)}


# ---------------------------------------------------------------------------
# commands


def cmd_solve(spec: ProblemSpec, out: Path) -> int:
    K, phi, T = spec.kernel, spec.history, spec.horizon
    x = solve_mild(K, phi, T, spec.solver)
    names = [f"x_{i + 1}" for i in range(K.n)]
    write_csv(out / "trajectory.csv", ["t"] + names, [x.grid, x.values])
    G = forcing_function(K, phi, "G", x.T)(x.grid)
    f = forcing_function(K, phi, "f", x.T)(x.grid)
    write_csv(out / "forcing.csv", ["t"] + [f"G_{i + 1}" for i in range(K.n)] + [f"f_{i + 1}" for i in range(K.n)],
              [x.grid, G, f])
    return EXIT_OK


def _ac_ratio_check(x, h):
    base = max(0.01, 10 * h)
    deltas = [8 * base, 4 * base, 2 * base, base]
    table = dg.ac_modulus(x, deltas)
    vals = np.array([v for _, v in table])
    if vals.max() <= 1e-14:
        worst = 0.0
    else:
        ratios = vals[:-1] / np.maximum(vals[1:], 1e-300)
        worst = float(np.max(np.abs(np.log(ratios / 2.0))))
    return table, record("ac_modulus_ratio", "local absolute continuity: AC modulus scales like delta",
                         worst, math.log(1.5), 0.0)


def verify_problem(spec: ProblemSpec, corrupt: bool = False, scale: float = 1.0):
    """Run the certification checks; returns ``(records, extras)``."""
    K, phi, T, cfg = spec.kernel, spec.history, spec.horizon, spec.solver
    h = cfg.h
    x = solve_mild(K, phi, T, cfg)
    if corrupt:
        # perturb the node farthest from every flagged breakpoint
        dist = np.min(np.abs(x.grid[:, None] - x.breakpoints[None, :]), axis=1) if x.breakpoints.size \
            else np.minimum(x.grid, x.T - x.grid)
        vals = x.values.copy()
        vals[int(np.argmax(dist))] += 1.0
        x = x.with_values(vals)
    size = max(1.0, float(np.max(norms(x.values))))
    recs, extras = [], {}
    recs.append(record("initial_value", "x(0) = phi(0)", float(np.max(np.abs(x.values[0] - phi.value_at_zero))),
                       0.0, 0.0))
    f_pf = forcing_function(K, phi, "f", x.T)
    if "mild" in spec.checks:
        res = dg.mild_residual(K, phi, x)
        recs.append(record("mild_residual", "mild solution equation x(t) = phi(0) + L int_0^t x_s ds",
                           res.max, 0.0, 1e-9 * size * scale))
    if "routes" in spec.checks:
        y = solve_forced_dde(K, f_pf, phi.value_at_zero, T, cfg)
        diff = float(np.max(np.abs(x.values - y.values)))
        recs.append(record("route_equivalence", "Volterra form and forced DDE give the same solution",
                           diff, 0.0, 5 * h * h * size * scale))
    if "classical" in spec.checks and phi.is_continuous():
        y = solve_classical(K, phi, T, cfg)
        diff = float(np.max(np.abs(x.values - y.values)))
        recs.append(record("classical_agreement", "mild solution equals the classical solution for continuous phi",
                           diff, 0.0, 10 * h * h * size * scale))
    if "regularity" in spec.checks:
        table, rec = _ac_ratio_check(x, h)
        recs.append(rec)
        p = phi.p if math.isfinite(phi.p) else 2.0
        dlp = dg.derivative_lp(x, p, levels=5)
        spread = dg.relative_spread(dlp)
        recs.append(record("derivative_lp_bounded", "derivative in L^p_loc: norms stable under refinement",
                           spread, 0.1 * scale, 0.0))
        res_t = dg.de_residual(K, x, f_pf, "truncated")
        recs.append(record("de_residual", "a.e. equation x' = int_{-t}^0 d eta x(t+.) + f",
                           res_t.max, 0.0, 100 * h * h * size * scale))
        if x.T > K.r:
            res_f = dg.de_residual(K, x, None, "full")
            recs.append(record("de_residual_full_memory", "x' = L x_t for t >= r",
                               res_f.max, 0.0, 100 * h * h * size * scale))
        # piecewise-polynomial histories are bounded, so the Lipschitz route applies
        Lint = dg.integrated_segment_map(K, phi, x)
        lip = dg.lipschitz_estimate(Lint)
        bound = kernel_variation(K) * max(float(np.max(norms(x.values))), lp_norm(phi, np.inf))
        recs.append(record("integrated_segment_lipschitz", "Lipschitz bound for t -> L int_0^t x_s ds",
                           lip, bound, 1e-9 * size * scale))
        extras["regularity"] = dg.RegularityReport(table, dg.lipschitz_estimate(x), dlp, res_t).as_dict()
    if "forcing" in spec.checks:
        T2 = max(T, 2 * K.r)
        fr = forcing_report(K, phi, T2)
        recs.append(record("forcing_tail", "g and f vanish on [r, inf)", fr.tail_max, 0.0, 1e-10 * scale))
        recs.append(record("G_constancy", "G is constant on [r, inf)", fr.constancy_defect, 0.0, 1e-10 * scale))
        gb = check_G_bound(K, phi, np.linspace(0.0, T2, 101))
        recs.append(record("G_bound", "|G(t)| <= 2 Var(eta) ||phi||_1", gb.lhs, gb.rhs, gb.tol * scale))
        if phi.is_continuous():
            cv = check_G_is_volterra_of_g(K, phi, T2)
            recs.append(record("G_equals_Vg", "G = Vg for continuous phi", cv.lhs, 0.0, 1e-8 * scale))
        extras["forcing"] = fr.as_dict()
    return recs, extras


def cmd_verify(spec: ProblemSpec, out: Path, corrupt: bool = False) -> int:
    scale = tolerance_scale()
    recs, extras = verify_problem(spec, corrupt, scale)
    ok = all(r["pass"] for r in recs)
    report = {"command": "verify", "pass": ok, "checks": recs, "tolScale": scale, "corrupted": corrupt,
              "solver": {"h": spec.solver.h, "quadOrder": spec.solver.quad_order,
                         "picardTol": spec.solver.picard_tol, "picardMax": spec.solver.picard_max,
                         "alignBreakpoints": spec.solver.align_breakpoints},
              **extras}
    write_report(out / "report.json", report)
    for r in recs:
        print(f"{'PASS' if r['pass'] else 'FAIL'}  {r['check']}: lhs={r['lhs']:.3e} rhs={r['rhs']:.3e} tol={r['tol']:.1e}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_props(seed: int, trials: int, out: Path) -> int:
    scale = tolerance_scale()
    results = run_all(seed, trials, 1e-9 * scale)
    recs = [r.as_record() for r in results]
    ok = all(r.passed for r in results)
    write_report(out / "report.json", {"command": "props", "seed": seed, "trials": trials, "tolScale": scale,
                                       "pass": ok, "checks": recs})
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: worst={r.worst:.3e} tol={r.tol:.1e} "
              f"({len(r.failures)}/{r.trials} failed)")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------


def _u64(text: str) -> int:
    val = int(text, 0)
    if not 0 <= val < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return val


def _positive_int(text: str) -> int:
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return val


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mildrfde", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("solve", "solve a problem and write CSV files"),
                           ("verify", "solve and run certification checks")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--spec", required=True, help="JSON problem file")
        p.add_argument("--out", required=True, help="output directory")
        if name == "verify":
            p.add_argument("--corrupt", action="store_true",
                           help="test mode: perturb the computed trajectory before checking")
    p = sub.add_parser("props", help="run the seeded randomized property suites")
    p.add_argument("--seed", type=_u64, required=True)
    p.add_argument("--trials", type=_positive_int, required=True)
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "props":
            return cmd_props(args.seed, args.trials, out)
        spec = parse_problem(args.spec)
        if args.command == "solve":
            return cmd_solve(spec, out)
        return cmd_verify(spec, out, args.corrupt)
    except (SchemaError, SolverConfigError, StepRejection, PicardError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
