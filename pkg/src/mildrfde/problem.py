"""JSON problem files.

Example (scalar, one discrete delay plus a distributed delay)::

    {
      "n": 1, "r": 1.0,
      "kernel": {"atoms": [{"theta": -1.0, "matrix": [[-0.5]]}],
                 "density": [{"interval": [-1.0, 0.0], "poly": [[[0.4]]]}]},
      "history": {"pieces": [{"interval": [-1.0, -0.5], "poly": [[1.0]]},
                             {"interval": [-0.5, 0.0], "poly": [[0.0]]}],
                  "valueAtZero": [0.0], "p": 1},
      "horizon": 3.0,
      "solver": {"h": 0.001, "quadOrder": 5, "picardTol": 1e-13,
                 "picardMax": 50, "alignBreakpoints": true},
      "checks": ["routes", "regularity", "forcing"]
    }

Polynomials are ascending coefficient lists in the absolute variable
``theta``; each coefficient is an ``n x n`` matrix (kernel density) or an
``n``-vector (history).  Plain numbers are accepted when ``n == 1``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SolverConfigError
from .model import History, Kernel, density_from_pieces
from .piecewise import BREAK_TOL, PiecewiseFunction
from .solver import SolverConfig

CHECKS = ("routes", "classical", "regularity", "forcing", "mild")


class SchemaError(ValueError):
    """Problem file violates the schema; ``errors`` lists ``(path, reason)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p} {m}" if p else m for p, m in self.errors))


@dataclass(frozen=True)
class ProblemSpec:
    n: int
    r: float
    kernel: Kernel
    history: History
    horizon: float
    solver: SolverConfig
    checks: tuple = CHECKS
    raw: dict = field(default_factory=dict, repr=False)


def parse_problem(path) -> ProblemSpec:
    """Read and validate a JSON problem file.

    Raises
    ------
    FileNotFoundError
        ``path`` does not exist.
    SchemaError
        Malformed JSON or schema violations.
    """
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError([("", f"invalid JSON: {exc}")]) from None
    return problem_from_dict(data)


def _number(d, key, path, errors, default=None, positive=False):
    if key not in d:
        if default is None:
            errors.append((f"{path}{key}", "required"))
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        errors.append((f"{path}{key}", "must be a number"))
        return default
    if positive and not v > 0:
        errors.append((f"{path}{key}", "must be positive"))
        return default
    return float(v)


def _poly(raw, shape, path, errors):
    """Coefficient list -> array ``(deg + 1, *shape)``."""
    try:
        c = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        errors.append((path, "coefficients must be numbers"))
        return None
    if c.ndim == 0:
        c = c.reshape(1)
    if c.ndim == 1 and shape != () and int(np.prod(shape)) == 1:
        c = c.reshape((-1,) + shape)
    if c.shape[1:] != shape or c.shape[0] < 1:
        errors.append((path, f"each coefficient must have shape {list(shape)}"))
        return None
    return c


def _interval(raw, path, errors):
    if not (isinstance(raw, (list, tuple)) and len(raw) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw)):
        errors.append((path, "must be [lo, hi]"))
        return None
    lo, hi = float(raw[0]), float(raw[1])
    if not hi > lo:
        errors.append((path, "requires lo < hi"))
        return None
    return lo, hi


def problem_from_dict(data: dict) -> ProblemSpec:
    errors = []
    if not isinstance(data, dict):
        raise SchemaError([("", "top level must be an object")])
    r = _number(data, "r", "", errors, positive=True)
    horizon = _number(data, "horizon", "", errors, positive=True)
    n_raw = data.get("n", 1)
    if isinstance(n_raw, bool) or not isinstance(n_raw, int) or n_raw < 1:
        errors.append(("n", "must be a positive integer"))
        n_raw = 1
    n = n_raw
    if errors:
        raise SchemaError(errors)
    tol = BREAK_TOL * max(1.0, r)

    kern = data.get("kernel", {})
    if not isinstance(kern, dict):
        raise SchemaError([("kernel", "must be an object")])
    atoms = []
    for i, a in enumerate(kern.get("atoms", [])):
        p = f"kernel.atoms[{i}]"
        if not isinstance(a, dict):
            errors.append((p, "must be an object"))
            continue
        th = _number(a, "theta", p + ".", errors)
        if th is not None and not (-r - tol <= th <= tol):
            errors.append((p + ".theta", f"must lie in [-r, 0] = [{-r:g}, 0]"))
        if "matrix" not in a:
            errors.append((p + ".matrix", "required"))
            continue
        try:
            m = np.asarray(a["matrix"], dtype=float)
        except (TypeError, ValueError):
            errors.append((p + ".matrix", "must be numeric"))
            continue
        if m.ndim == 0 and n == 1:
            m = m.reshape(1, 1)
        if m.shape != (n, n):
            errors.append((p + ".matrix", f"must be {n}x{n}"))
            continue
        if th is not None:
            atoms.append((min(max(th, -r), 0.0), m))
    locs = sorted(th for th, _ in atoms)
    if any(b - a <= tol for a, b in zip(locs, locs[1:])):
        errors.append(("kernel.atoms", "atom locations must be distinct"))
    dens_pieces = []
    for i, d in enumerate(kern.get("density", [])):
        p = f"kernel.density[{i}]"
        if not isinstance(d, dict):
            errors.append((p, "must be an object"))
            continue
        iv = _interval(d.get("interval"), p + ".interval", errors)
        c = _poly(d.get("poly"), (n, n), p + ".poly", errors)
        if iv is not None and (iv[0] < -r - tol or iv[1] > tol):
            errors.append((p + ".interval", "must lie in [-r, 0]"))
        elif iv is not None and c is not None:
            dens_pieces.append((iv, c))

    hist = data.get("history")
    if not isinstance(hist, dict):
        errors.append(("history", "required"))
        raise SchemaError(errors)
    if "valueAtZero" not in hist:
        errors.append(("history.valueAtZero", "required"))
        v0 = None
    else:
        v0 = np.asarray(hist["valueAtZero"], dtype=float).reshape(-1) if _is_numeric(hist["valueAtZero"]) else None
        if v0 is None or v0.shape != (n,):
            errors.append(("history.valueAtZero", f"must be a vector of length {n}"))
            v0 = None
    hp = hist.get("p", 1)
    if hp == "inf":
        hp = float("inf")
    if isinstance(hp, bool) or not isinstance(hp, (int, float)) or not hp >= 1:
        errors.append(("history.p", "must be a number >= 1 or \"inf\""))
        hp = 1.0
    pieces = []
    for i, pc in enumerate(hist.get("pieces", [])):
        p = f"history.pieces[{i}]"
        if not isinstance(pc, dict):
            errors.append((p, "must be an object"))
            continue
        iv = _interval(pc.get("interval"), p + ".interval", errors)
        c = _poly(pc.get("poly"), (n,), p + ".poly", errors)
        if iv is not None and c is not None:
            pieces.append((iv, c))
    if not pieces and not any(path.startswith("history.pieces") for path, _ in errors):
        errors.append(("history.pieces", "required"))
    pieces.sort(key=lambda q: q[0][0])
    if pieces:
        edges_ok = abs(pieces[0][0][0] + r) <= tol and abs(pieces[-1][0][1]) <= tol and all(
            abs(a[0][1] - b[0][0]) <= tol for a, b in zip(pieces, pieces[1:]))
        if not edges_ok:
            errors.append(("history.pieces", "intervals must tile [-r, 0] without gaps or overlaps"))

    scfg = data.get("solver", {})
    if not isinstance(scfg, dict):
        errors.append(("solver", "must be an object"))
        scfg = {}
    h = _number(scfg, "h", "solver.", errors, default=1e-3, positive=True)
    quad = scfg.get("quadOrder", 5)
    if isinstance(quad, bool) or not isinstance(quad, int) or quad < 1:
        errors.append(("solver.quadOrder", "must be a positive integer"))
        quad = 5
    ptol = _number(scfg, "picardTol", "solver.", errors, default=1e-13, positive=True)
    pmax = scfg.get("picardMax", 50)
    if isinstance(pmax, bool) or not isinstance(pmax, int) or pmax < 1:
        errors.append(("solver.picardMax", "must be a positive integer"))
        pmax = 50
    align = scfg.get("alignBreakpoints", True)
    if not isinstance(align, bool):
        errors.append(("solver.alignBreakpoints", "must be true or false"))
        align = True

    checks = data.get("checks", list(CHECKS))
    if not isinstance(checks, list) or any(c not in CHECKS for c in checks):
        errors.append(("checks", f"must be a list drawn from {list(CHECKS)}"))
        checks = list(CHECKS)

    if errors:
        raise SchemaError(errors)
    try:
        density = density_from_pieces(r, dens_pieces, n) if dens_pieces else None
        kernel = Kernel.from_parts(r, atoms, density, n=n)
        breaks = [pieces[0][0][0]] + [iv[1] for iv, _ in pieces]
        breaks[0], breaks[-1] = -r, 0.0
        pv = {}
        for item in hist.get("pointValues", []):
            pv[float(item["theta"])] = np.asarray(item["value"], dtype=float).reshape(n)
        pf = PiecewiseFunction.from_global(breaks, [c for _, c in pieces], pv)
        history = History(r, pf, v0, hp)
        solver = SolverConfig(h, quad, ptol, pmax, align)
    except (ValueError, KeyError, TypeError) as exc:
        if isinstance(exc, SolverConfigError):
            raise SchemaError([("solver", str(exc))]) from None
        raise SchemaError([("", str(exc))]) from None
    return ProblemSpec(n, r, kernel, history, horizon, solver, tuple(checks), data)


def _is_numeric(v) -> bool:
    try:
        np.asarray(v, dtype=float)
        return True
    except (TypeError, ValueError):
        return False
