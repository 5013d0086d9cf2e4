"""Grid-scale regularity diagnostics for computed trajectories."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import History, Kernel
from .piecewise import PiecewiseFunction
from .rs_calculus import norms, pair, stieltjes_rule
from .trajectory import Trajectory


@dataclass(frozen=True)
class ResidualStats:
    """Residual samples of a differential or integral equation."""

    max: float
    l1: float
    times: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)

    def as_dict(self) -> dict:
        return {"max": self.max, "l1": self.l1, "samples": int(self.times.size)}


@dataclass(frozen=True)
class RegularityReport:
    """AC table, Lipschitz estimate, derivative norms and DE residual of one trajectory."""

    ac_table: list
    lip_estimate: float
    deriv_lp_norms: list
    residual: ResidualStats | None = None

    def as_dict(self) -> dict:
        return {
            "acTable": [[float(d), float(v)] for d, v in self.ac_table],
            "lipEstimate": float(self.lip_estimate),
            "derivLpNorms": [[float(h), float(v)] for h, v in self.deriv_lp_norms],
            "residualStats": None if self.residual is None else self.residual.as_dict(),
        }


def _increments(x: Trajectory):
    dt = np.diff(x.grid)
    dx = norms(np.diff(x.values, axis=0).reshape(dt.size, -1))
    return dt, dx


def ac_modulus(x: Trajectory, deltas) -> list:
    """Worst ``sum |x(b_i) - x(a_i)|`` over grid cells of total length ``delta``.

    Cells are taken greedily by slope ``|dx|/dt``; the last one is used
    fractionally.  Returns ``[(delta, value), ...]`` in the order given.
    """
    dt, dx = _increments(x)
    order = np.argsort(-dx / dt, kind="stable")
    cum_len = np.cumsum(dt[order])
    cum_var = np.cumsum(dx[order])
    out = []
    for delta in deltas:
        j = int(np.searchsorted(cum_len, delta))
        if j >= order.size:
            out.append((float(delta), float(cum_var[-1])))
            continue
        prev_len = cum_len[j - 1] if j else 0.0
        prev_var = cum_var[j - 1] if j else 0.0
        frac = (delta - prev_len) / dt[order[j]]
        out.append((float(delta), float(prev_var + frac * dx[order[j]])))
    return out


def lipschitz_estimate(x: Trajectory) -> float:
    """Largest difference quotient between adjacent grid nodes."""
    dt, dx = _increments(x)
    return float(np.max(dx / dt))


def derivative_lp(x: Trajectory, p: float, levels: int = 5) -> list:
    """L^p norm of the difference-quotient derivative on nested grids.

    Level ``j`` keeps every ``2**(levels - 1 - j)``-th node, so the list runs
    from the coarsest grid to the full one.  Returns ``[(h, norm), ...]``.
    """
    out = []
    for j in range(levels):
        stride = 2 ** (levels - 1 - j)
        idx = np.arange(0, x.grid.size, stride)
        if idx.size < 2:
            continue
        t = x.grid[idx]
        v = x.values[idx].reshape(idx.size, -1)
        dt = np.diff(t)
        slope = norms(np.diff(v, axis=0)) / dt
        if np.isinf(p):
            val = float(np.max(slope))
        else:
            val = float(np.dot(dt, slope ** p) ** (1.0 / p))
        out.append((float(np.max(dt)), val))
    return out


def relative_spread(values) -> float:
    """``(max - min) / max`` of a sequence of positive numbers."""
    v = np.asarray([val for _, val in values] if np.ndim(values) == 2 else values, dtype=float)
    top = float(np.max(np.abs(v)))
    return 0.0 if top == 0 else float((np.max(v) - np.min(v)) / top)


def _memory_rule(K: Kernel, h: float, degree: int):
    """Rule for ``int_{-r}^0 d eta(theta) F(theta)`` with cells of width ``h`` ending at 0."""
    M = int(np.ceil(K.r / h - 1e-9))
    breaks = -h * np.arange(M + 1)
    return stieltjes_rule(K.eta, -K.r, 0.0, degree=degree, breaks=breaks)


def _guard_mask(x: Trajectory, guard: float) -> np.ndarray:
    keep = np.ones(x.grid.size, dtype=bool)
    keep[[0, -1]] = False
    for b in x.breakpoints:
        keep &= np.abs(x.grid - b) > guard * (1 + 1e-9)
    return keep


def _eval_forcing(f, ts, n):
    if f is None:
        return np.zeros((ts.size, n))
    vals = f(ts) if isinstance(f, PiecewiseFunction) else np.asarray(f(ts))
    return np.asarray(vals).reshape(ts.size, n)


def de_residual(K: Kernel, x: Trajectory, f=None, mode: str = "truncated", guard: float | None = None) -> ResidualStats:
    """Residual of ``x'(t) = int_{-t}^0 d eta(theta) x(t + theta) + f(t)``.

    ``x'`` comes from central differences at interior nodes; nodes within
    ``guard`` (default ``2 h``) of a flagged breakpoint are skipped.  In
    ``"full"`` mode only ``t >= r`` is sampled and the full memory
    ``L x_t`` is used without forcing.  Works for vector trajectories and for
    fundamental matrices (each column separately).
    """
    if mode not in ("truncated", "full"):
        raise ValueError("mode must be 'truncated' or 'full'")
    grid, vals = x.grid, x.values
    h = float(np.max(np.diff(grid)))
    guard = 2 * h if guard is None else guard
    keep = _guard_mask(x, guard)
    if mode == "full":
        keep &= grid >= K.r - 1e-12
    idx = np.nonzero(keep)[0]
    if idx.size == 0:
        return ResidualStats(0.0, 0.0, np.zeros(0), np.zeros(0))
    deriv = (vals[idx + 1] - vals[idx - 1]) / (grid[idx + 1] - grid[idx - 1]).reshape((-1,) + (1,) * (vals.ndim - 1))
    rule = _memory_rule(K, h, degree=1)
    theta, W = rule.points, rule.weights
    is_atom = np.zeros(theta.size, dtype=bool)
    is_atom[: rule.atom_points.size] = True
    rhs = np.empty_like(deriv)
    tol = 1e-12 * max(1.0, K.r)
    for j, k in enumerate(idx):
        t = grid[k]
        if mode == "full":
            sel = np.ones(theta.size, dtype=bool)
        else:
            sel = np.where(is_atom, theta > -t + tol, theta >= -t - tol)
        pts = t + theta[sel]
        rhs[j] = pair(W[sel], x(np.clip(pts, 0.0, x.T))).sum(axis=0)
    if mode == "truncated" and f is not None:
        if vals.ndim != 2:
            raise ValueError("forcing applies to vector trajectories only")
        rhs = rhs + _eval_forcing(f, grid[idx], vals.shape[1])
    res = norms((deriv - rhs).reshape(idx.size, -1))
    return ResidualStats(float(np.max(res)), float(h * np.sum(res)), grid[idx], res)


def integrated_segment_map(K: Kernel, phi: History, x: Trajectory) -> Trajectory:
    """``t -> L int_0^t x_s ds`` on the trajectory grid.

    ``int_0^t x_s ds`` is ``theta -> Y(t + theta) - Y(theta)`` with ``Y`` an
    antiderivative of the history joined to the trajectory interpolant.
    """
    path = phi.pieces.without_point_values().concat(x.as_piecewise())
    Y = path.antiderivative()
    h = float(np.max(np.diff(x.grid)))
    rule = _memory_rule(K, h, degree=max(2, phi.pieces.degree + 1))
    theta, W = rule.points, rule.weights
    base = Y(theta)
    out = np.empty((x.grid.size,) + x.vshape)
    for k, t in enumerate(x.grid):
        out[k] = pair(W, Y(np.minimum(t + theta, x.T)) - base).sum(axis=0)
    return Trajectory(x.grid, out, x.breakpoints)


def mild_residual(K: Kernel, phi: History, x: Trajectory) -> ResidualStats:
    """Residual of ``x(t) = phi(0) + L int_0^t x_s ds`` at every grid node."""
    Lint = integrated_segment_map(K, phi, x)
    res = norms((x.values - phi.value_at_zero - Lint.values).reshape(x.grid.size, -1))
    h = float(np.max(np.diff(x.grid)))
    return ResidualStats(float(np.max(res)), float(h * np.sum(res)), x.grid, res)


def regularity_report(K: Kernel, x: Trajectory, f=None, *, deltas=(0.08, 0.04, 0.02, 0.01), p: float = 1.0,
                      levels: int = 5, mode: str = "truncated") -> RegularityReport:
    """Bundle the AC table, Lipschitz estimate, derivative norms and DE residual."""
    return RegularityReport(ac_modulus(x, deltas), lipschitz_estimate(x), derivative_lp(x, p, levels),
                            de_residual(K, x, f, mode))
