"""Forcing terms generated by the initial history.

For a kernel ``eta`` on ``[-r, 0]`` and a history ``phi``:

* ``g(t) = int_{-r}^{-t} d eta(theta) phibar(t + theta)`` (continuous ``phi``),
* ``f(t)``: the same integral with the a.e. representative of ``phi``; it is
  defined off a finite set and agrees with ``g`` when ``phi`` is continuous,
* ``G(t) = int_{-r}^0 d eta Phi0 - int_{-r}^{-t} d eta(theta) Phi0(t + theta)``
  with ``Phi0(theta) = int_theta^0 phi``.

All three vanish (g, f) or are constant (G) on ``[r, inf)`` and are piecewise
polynomial in ``t`` between the points returned by
:func:`forcing_breakpoints`, which makes exact tabulation possible.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UndefinedPointError
from .model import History, Kernel, kernel_variation, lp_norm
from .piecewise import BREAK_TOL, PiecewiseFunction, merge_breaks, piecewise_from_function
from .rs_calculus import CheckResult, _roundoff_tol, norm, rs_integral

KINDS = ("g", "G", "f")


def _zero(K: Kernel) -> np.ndarray:
    return np.zeros(K.n)


def _tol(K: Kernel) -> float:
    return BREAK_TOL * max(1.0, K.r) * 10


def _check_time(t: float):
    if t < 0:
        raise DomainError(f"forcing terms are defined for t >= 0, got {t}")


def _shifted(pf: PiecewiseFunction, t: float, r: float) -> PiecewiseFunction:
    """``theta -> pf(t + theta)`` on ``[-r, -t]``."""
    return pf.restrict(t - r, 0.0).shift(-t)


def history_antiderivative(phi: History) -> PiecewiseFunction:
    """``Phi0(theta) = int_theta^0 phi`` on ``[-r, 0]``."""
    A = phi.pieces.without_point_values().antiderivative()
    total = A(np.array(0.0))
    return PiecewiseFunction.constant(-phi.r, 0.0, total) - A


def endpoint_atoms(K: Kernel, t: float) -> list:
    """Atom locations of ``eta`` sitting on the moving endpoint ``-t``."""
    return [float(s) for s in K.eta.locs if abs(s + t) <= _tol(K)]


def g_forcing(K: Kernel, phi: History, t: float) -> np.ndarray:
    """``g(t; phi) = int_{-r}^{-t} d eta(theta) phibar(t + theta)``.

    The integrand is the static prolongation, so an atom exactly at ``-t``
    is counted and sees ``phi(0)`` (right-continuous convention);
    :func:`endpoint_atoms` reports such coincidences.  Meant for continuous
    histories; for others it is evaluated pointwise and raises
    :class:`SharedDiscontinuityError` when an atom meets a jump.
    """
    _check_time(t)
    if t >= K.r - _tol(K):
        return _zero(K)
    integrand = _shifted(phi.pieces, t, K.r).with_point_values({-t: phi.value_at_zero})
    return rs_integral(K.eta, integrand, -K.r, -t)


def G_forcing(K: Kernel, phi: History, t: float) -> np.ndarray:
    """``G(t; phi)``; constant for ``t >= r``."""
    _check_time(t)
    Phi0 = history_antiderivative(phi)
    total = rs_integral(K.eta, Phi0, -K.r, 0.0)
    if t < K.r - _tol(K):
        total = total - rs_integral(K.eta, _shifted(Phi0, t, K.r), -K.r, -t)
    return total


def undefined_points(K: Kernel, phi: History) -> np.ndarray:
    """Times in ``[0, r]`` where ``f`` has no pointwise value.

    These are ``-s`` for atoms ``s`` (an atom leaves the range) and
    ``theta_d - s`` where a jump ``theta_d`` of ``phi`` meets an atom.
    """
    jumps = phi.discontinuities()
    pts = [-s for s in K.eta.locs]
    pts += [d - s for d in jumps for s in K.eta.locs]
    pts = np.asarray(pts, dtype=float)
    return merge_breaks(pts[(pts >= -_tol(K)) & (pts <= K.r + _tol(K))])


def f_forcing(K: Kernel, phi: History, t: float) -> np.ndarray:
    """Pointwise a.e. value of ``f(t; phi)``.

    Raises
    ------
    UndefinedPointError
        ``t`` is one of :func:`undefined_points`.
    """
    _check_time(t)
    bad = undefined_points(K, phi)
    if bad.size and np.min(np.abs(bad - t)) <= _tol(K):
        raise UndefinedPointError(t)
    if t >= K.r - _tol(K):
        return _zero(K)
    integrand = _shifted(phi.pieces.without_point_values(), t, K.r)
    return rs_integral(K.eta, integrand, -K.r, -t)


_EVALUATORS = {"g": g_forcing, "G": G_forcing, "f": f_forcing}


def forcing_breakpoints(K: Kernel, phi: History) -> np.ndarray:
    """Breakpoints in ``[0, r]`` between which g, G and f are polynomials."""
    atoms = K.eta.locs
    edges = K.eta.density.breaks
    hist = np.concatenate([phi.breakpoints(), [0.0]])
    pts = np.concatenate([[0.0, K.r], -atoms, -edges,
                          (hist[:, None] - atoms[None, :]).ravel(),
                          (hist[:, None] - edges[None, :]).ravel()])
    pts = pts[(pts > 0) & (pts < K.r)]
    return merge_breaks([0.0, K.r], pts, tol=1e-10)


def forcing_function(K: Kernel, phi: History, kind: str = "f", T: float | None = None) -> PiecewiseFunction:
    """Exact piecewise-polynomial representation of g, G or f on ``[0, max(T, r)]``.

    Each piece is recovered by interpolating the pointwise formula at
    interior nodes, which reproduces the polynomial exactly (up to rounding).
    Values at breakpoints follow the left-limit convention.
    """
    if kind not in _EVALUATORS:
        raise ValueError(f"kind must be one of {KINDS}")
    fn = _EVALUATORS[kind]
    bps = forcing_breakpoints(K, phi)
    deg = phi.pieces.degree + K.eta.density.degree + 2
    pf = piecewise_from_function(lambda ts: np.array([fn(K, phi, t) for t in ts]), bps, deg)
    if T is not None and T > K.r + _tol(K):
        tail = fn(K, phi, K.r) if kind == "G" else _zero(K)
        pf = pf.concat(PiecewiseFunction.constant(K.r, T, tail))
    return pf


def evaluate(K: Kernel, phi: History, ts, kind: str = "f") -> np.ndarray:
    """Pointwise values at several times, shape ``(len(ts), n)``."""
    fn = _EVALUATORS[kind]
    return np.array([fn(K, phi, float(t)) for t in np.atleast_1d(ts)])


@dataclass(frozen=True)
class ForcingReport:
    """Sampled forcing terms and their behaviour on ``[r, T]``."""

    grid: np.ndarray
    G: np.ndarray
    f: np.ndarray
    g: np.ndarray | None
    tail_max: float
    constancy_defect: float
    coincidences: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"tailMax": self.tail_max, "constancyDefect": self.constancy_defect,
                "endpointAtomTimes": list(self.coincidences)}


def forcing_report(K: Kernel, phi: History, T: float, num: int = 200) -> ForcingReport:
    """Tabulate g (continuous histories only), G and f on a uniform grid of ``[0, T]``.

    ``tail_max`` is the largest ``|g|`` or ``|f|`` at grid times in
    ``[r, T]`` (times where ``f`` is undefined are skipped) and
    ``constancy_defect`` is ``max |G(t) - G(r)|`` over those times.
    """
    T = max(T, K.r)
    grid = np.linspace(0.0, T, num + 1)
    f_pf = forcing_function(K, phi, "f", T)
    G_pf = forcing_function(K, phi, "G", T)
    cont = phi.is_continuous()
    g_vals = forcing_function(K, phi, "g", T)(grid) if cont else None
    tail_t = np.concatenate([[K.r], grid[grid > K.r]])
    tail = 0.0
    for t in tail_t:
        try:
            tail = max(tail, norm(f_forcing(K, phi, t)))
        except UndefinedPointError:
            pass
        if cont:
            tail = max(tail, norm(g_forcing(K, phi, t)))
    G_r = G_forcing(K, phi, K.r)
    defect = max(norm(G_forcing(K, phi, t) - G_r) for t in tail_t)
    coincide = [float(t) for t in grid if endpoint_atoms(K, t)]
    return ForcingReport(grid, G_pf(grid), f_pf(grid), g_vals, float(tail), float(defect), coincide)


def check_G_is_volterra_of_g(K: Kernel, phi: History, T: float | None = None, num: int = 200) -> CheckResult:
    """``G(t) = int_0^t g`` for continuous ``phi``; lhs is the sup error on a grid."""
    if not phi.is_continuous():
        raise ValueError("G = Vg is checked for continuous histories only")
    T = K.r if T is None else T
    grid = np.linspace(0.0, T, num + 1)
    Vg = forcing_function(K, phi, "g", T).antiderivative()(grid)
    G = evaluate(K, phi, grid, "G")
    err = float(np.max(np.abs(G - Vg)))
    return CheckResult(err, 0.0, _roundoff_tol(np.max(np.abs(G))) * 10, "eq")


def check_G_bound(K: Kernel, phi: History, ts) -> CheckResult:
    """``|G(t)| <= 2 Var(eta) ||phi||_{L^1}``; lhs is the largest sampled ``|G|``."""
    lhs = max(norm(G_forcing(K, phi, float(t))) for t in np.atleast_1d(ts))
    rhs = 2.0 * kernel_variation(K) * lp_norm(phi, 1)
    return CheckResult(lhs, rhs, _roundoff_tol(lhs, rhs), "le")


def check_lp_bound(K: Kernel, phi: History, p: float) -> CheckResult:
    """``||g||_{L^p[0, r]} <= Var(eta) ||phi||_{L^p[-r, 0]}`` for continuous ``phi``."""
    if not 1 <= p < np.inf:
        raise ValueError("p must lie in [1, inf)")
    if not phi.is_continuous():
        raise ValueError("the L^p bound of g is stated for continuous histories")
    g = forcing_function(K, phi, "g")
    lhs = lp_norm(g, p)
    rhs = kernel_variation(K) * lp_norm(phi, p)
    return CheckResult(lhs, rhs, _roundoff_tol(lhs, rhs), "le")


def mollify_history(phi: History, eps: float) -> History:
    """Continuous approximant: each jump is replaced by a linear ramp.

    Interior jumps get a ramp on ``[d - eps, d + eps]``; a mismatch between
    the pieces and ``phi(0)`` gets a ramp on ``[-eps, 0]``.  ``phi(0)`` is
    preserved and point values are dropped.

    Raises
    ------
    ValueError
        ``eps`` is not positive, a ramp leaves ``[-r, 0]`` or two ramps overlap.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    pieces = phi.pieces.without_point_values()
    ramps = []
    for d in phi.discontinuities():
        if d == 0.0:
            lo, hi = -eps, 0.0
            right = phi.value_at_zero
        else:
            lo, hi = d - eps, d + eps
            if hi > 0.0:
                raise ValueError(f"eps={eps} too large: ramp at {d} leaves the domain")
            right = pieces(np.array(hi), side="right")
        if lo < -phi.r:
            raise ValueError(f"eps={eps} too large: ramp at {d} leaves the domain")
        if ramps and lo < ramps[-1][1]:
            raise ValueError(f"eps={eps} too large: ramps overlap")
        ramps.append((lo, hi, pieces(np.array(lo)), right))
    if not ramps:
        return History(phi.r, pieces, phi.value_at_zero, phi.p)
    inner = [b for b in pieces.breaks if not any(lo < b < hi for lo, hi, _, _ in ramps)]
    breaks = merge_breaks(inner, [x for lo, hi, _, _ in ramps for x in (lo, hi)])
    ref = pieces.refine(breaks)
    coeffs = []
    for i in range(ref.npieces):
        mid = 0.5 * (ref.breaks[i] + ref.breaks[i + 1])
        ramp = next((rp for rp in ramps if rp[0] < mid < rp[1]), None)
        if ramp is None:
            coeffs.append(ref.coeffs[i])
        else:
            lo, hi, vl, vr = ramp
            c = np.zeros_like(ref.coeffs[i])
            c[0] = vl + (vr - vl) * (ref.breaks[i] - lo) / (hi - lo)
            if c.shape[0] < 2:
                c = np.concatenate([c, np.zeros_like(c)])
            c[1] = (vr - vl) / (hi - lo)
            coeffs.append(c)
    return History(phi.r, PiecewiseFunction(ref.breaks, coeffs), phi.value_at_zero, phi.p)


def density_argument_errors(K: Kernel, phi: History, epsilons, p: float = 1.0) -> list:
    """``||g(.; phi_eps) - f(.; phi)||_{L^p[0, r]}`` for each ``eps``.

    Convergence to 0 shows that the forcing of a discontinuous history is the
    limit of forcings of its continuous approximants.
    """
    f = forcing_function(K, phi, "f")
    out = []
    for eps in epsilons:
        g_eps = forcing_function(K, mollify_history(phi, eps), "g")
        out.append(lp_norm(g_eps - f, p))
    return out
