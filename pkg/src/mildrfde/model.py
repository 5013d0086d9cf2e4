"""Problem objects: kernel, history functions and history segments."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UndefinedPointError
from .piecewise import BREAK_TOL, PiecewiseFunction, gauss_legendre, merge_breaks, nodes_for_degree
from .rs_calculus import BVFunction, norms, rs_integral, sign_split, _real_roots_local
from .trajectory import Trajectory


def _as_matrix(A, n=None) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1) if n in (None, 1) else A * np.eye(n)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("kernel values must be square matrices")
    return A


def _as_vector(v, n=None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1) if n in (None, 1) else np.full(n, float(v))
    if v.ndim != 1:
        raise ValueError("history values must be vectors")
    return v


@dataclass(frozen=True)
class Kernel:
    """Matrix kernel ``eta`` on ``[-r, 0]``, constant on ``(-inf, -r]``.

    ``L psi = int_{-r}^0 d eta(theta) psi(theta)``.
    """

    r: float
    eta: BVFunction

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("delay horizon r must be positive")
        tol = BREAK_TOL * max(1.0, self.r)
        if abs(self.eta.a + self.r) > tol or abs(self.eta.b) > tol:
            raise ValueError("eta must be defined on [-r, 0]")
        if len(self.eta.vshape) != 2:
            raise ValueError("eta must be matrix valued")

    @property
    def n(self) -> int:
        return self.eta.vshape[0]

    @classmethod
    def from_parts(cls, r: float, atoms=(), density=None, n: int | None = None) -> "Kernel":
        """Kernel from atoms ``[(theta, A), ...]`` and a density.

        ``density`` is ``None``, a PiecewiseFunction on ``[-r, 0]`` with
        matrix (or scalar, for ``n == 1``) values, or a list of
        ``((lo, hi), global_coeffs)`` pieces.
        """
        atoms = [(float(th), _as_matrix(A, n)) for th, A in atoms]
        if n is None:
            n = atoms[0][1].shape[0] if atoms else None
        if density is not None and not isinstance(density, PiecewiseFunction):
            density = density_from_pieces(r, density, n)
        if density is not None and density.vshape == ():
            density = density.map_coeffs(lambda c: c[..., None, None])
        if n is None:
            n = density.vshape[0] if density is not None else 1
        return cls(float(r), BVFunction(-r, 0.0, np.zeros((n, n)), atoms, density))

    @classmethod
    def zero(cls, n: int, r: float) -> "Kernel":
        return cls(float(r), BVFunction(-r, 0.0, np.zeros((n, n))))

    def atom_delays(self) -> np.ndarray:
        return -self.eta.locs

    def density_edges(self) -> np.ndarray:
        return self.eta.density.breaks


def density_from_pieces(r, pieces, n=None) -> PiecewiseFunction:
    """Density from ``[((lo, hi), coeffs)]`` in the absolute variable, gaps filled with 0."""
    pieces = sorted(pieces, key=lambda p: p[0][0])
    breaks, polys = [-r], []
    for (lo, hi), coeffs in pieces:
        c = np.asarray(coeffs, dtype=float)
        if c.ndim == 1:
            c = c[:, None, None] * np.eye(n or 1)
        if lo > breaks[-1] + BREAK_TOL:
            polys.append(np.zeros((1,) + c.shape[1:]))
            breaks.append(lo)
        elif lo < breaks[-1] - BREAK_TOL:
            raise ValueError("density pieces overlap")
        polys.append(c)
        breaks.append(hi)
    if breaks[-1] < -BREAK_TOL:
        polys.append(np.zeros((1,) + polys[-1].shape[1:]))
        breaks.append(0.0)
    if abs(breaks[-1]) > BREAK_TOL * max(1.0, r):
        raise ValueError("density pieces exceed [-r, 0]")
    breaks[-1] = 0.0
    return PiecewiseFunction.from_global(breaks, polys)


@dataclass(frozen=True)
class History:
    """Element of M^p: an a.e. class on ``[-r, 0]`` plus the value at 0.

    ``pieces`` uses the left-limit convention at its breakpoints, overridden
    by its point values.  ``value_at_zero`` is always present and need not
    match the limit of the pieces at 0.
    """

    r: float
    pieces: PiecewiseFunction
    value_at_zero: np.ndarray
    p: float = 1.0

    def __post_init__(self):
        v0 = _as_vector(self.value_at_zero)
        object.__setattr__(self, "value_at_zero", v0)
        tol = BREAK_TOL * max(1.0, self.r)
        lo, hi = self.pieces.domain
        if abs(lo + self.r) > tol or abs(hi) > tol:
            raise ValueError("history pieces must tile [-r, 0]")
        if self.pieces.vshape != v0.shape:
            raise ValueError("valueAtZero and pieces must have the same dimension")
        if not (self.p >= 1):
            raise ValueError("p must lie in [1, inf]")

    @property
    def n(self) -> int:
        return self.value_at_zero.shape[0]

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_global(cls, r, breaks, polys, value_at_zero, p=1.0, point_values=None) -> "History":
        polys = [np.asarray(c, dtype=float) for c in polys]
        polys = [c.reshape(-1, 1) if c.ndim <= 1 else c for c in polys]
        pv = {k: _as_vector(v) for k, v in (point_values or {}).items()}
        return cls(float(r), PiecewiseFunction.from_global(breaks, polys, pv), _as_vector(value_at_zero), p)

    @classmethod
    def constant(cls, r, value, p=1.0) -> "History":
        v = _as_vector(value)
        return cls(float(r), PiecewiseFunction.constant(-r, 0.0, v), v, p)

    @classmethod
    def indicator(cls, r, lo, hi, value=1.0, value_at_zero=0.0, p=1.0) -> "History":
        """``value`` on ``[lo, hi]``, zero elsewhere in ``[-r, 0)``."""
        v = _as_vector(value)
        z = np.zeros_like(v)
        breaks = merge_breaks([-r, 0.0], [lo, hi])
        polys = []
        for i in range(breaks.size - 1):
            mid = 0.5 * (breaks[i] + breaks[i + 1])
            polys.append((v if lo <= mid <= hi else z)[None])
        return cls(float(r), PiecewiseFunction(breaks, polys), _as_vector(value_at_zero, v.size), p)

    # -- queries ----------------------------------------------------------
    def left_limit_at_zero(self):
        return self.pieces.limits(0.0)[0]

    def discontinuities(self, tol: float = 1e-12) -> list:
        """Points of ``[-r, 0]`` where the a.e. class (with value at 0) jumps."""
        pts = list(self.pieces.jump_points(tol))
        gap = np.max(np.abs(self.left_limit_at_zero() - self.value_at_zero), initial=0.0)
        if gap > tol * max(1.0, np.max(np.abs(self.value_at_zero), initial=0.0)):
            pts.append(0.0)
        return pts

    def is_continuous(self, tol: float = 1e-12) -> bool:
        """Membership in C: continuous pieces matching ``value_at_zero``."""
        return not self.discontinuities(tol) and self.pieces.is_continuous(tol)

    def breakpoints(self) -> np.ndarray:
        return np.asarray(self.pieces.breaks)

    def with_p(self, p) -> "History":
        return History(self.r, self.pieces, self.value_at_zero, p)


def instantaneous_input(xi, r: float, p: float = 1.0) -> History:
    """History that vanishes on ``[-r, 0)`` and equals ``xi`` at 0."""
    xi = _as_vector(xi)
    return History(float(r), PiecewiseFunction.constant(-r, 0.0, np.zeros_like(xi)), xi, p)


def static_prolongation(phi: History, t, strict: bool = False):
    """``phi(t)`` for ``t < 0`` and ``phi(0)`` for ``t >= 0``.

    With ``strict`` a point where the a.e. class jumps and no point value is
    recorded raises :class:`UndefinedPointError`.
    """
    t = float(t)
    if t < -phi.r - BREAK_TOL * max(1.0, phi.r):
        raise DomainError(f"t={t} precedes the history interval")
    if t >= 0:
        return phi.value_at_zero.copy()
    if strict and t > -phi.r and not any(abs(t - k) <= BREAK_TOL for k in phi.pieces.point_values):
        if phi.pieces.has_jump_at(t):
            raise UndefinedPointError(t)
    return phi.pieces(np.array(t))


def apply_L(K: Kernel, psi: PiecewiseFunction):
    """``L psi = int_{-r}^0 d eta(theta) psi(theta)``."""
    return rs_integral(K.eta, psi, -K.r, 0.0)


def reflect_kernel(K: Kernel) -> BVFunction:
    """``eta_check(u) = -eta(-u)`` on ``[0, r]``."""
    return K.eta.reflect()


def kernel_variation(K: Kernel) -> float:
    return K.eta.variation()


def lp_norm(phi, p=None) -> float:
    """L^p norm of the a.e. class on its domain (point values ignored).

    Exact for integer ``p`` when the values are scalar or ``p`` is even;
    ``p = inf`` gives the essential supremum (exact).  Accepts a History or
    a PiecewiseFunction.
    """
    if isinstance(phi, History):
        p = phi.p if p is None else p
        pf = phi.pieces
    else:
        pf = phi
        if p is None:
            raise ValueError("p required")
    p = float(p)
    if p < 1:
        raise ValueError("p must lie in [1, inf]")
    pf = pf.without_point_values()
    scalar = pf.vshape == () or int(np.prod(pf.vshape)) == 1
    if np.isinf(p):
        return _ess_sup(pf)
    integer = p.is_integer()
    if integer and (scalar or int(p) % 2 == 0):
        split = sign_split(_as_scalar(pf)) if scalar else pf
        x, w = gauss_legendre(nodes_for_degree(int(p) * pf.degree))
    else:
        split = pf.refine(np.linspace(*pf.domain, 257)[1:-1])
        x, w = gauss_legendre(8)
    h = np.diff(split.breaks)
    nodes = (split.breaks[:-1, None] + h[:, None] * x[None, :]).ravel()
    qw = (h[:, None] * w[None, :]).ravel()
    vals = norms(split(nodes, side="right").reshape(nodes.size, -1))
    return float(np.dot(qw, vals ** p) ** (1.0 / p))


def _as_scalar(pf: PiecewiseFunction) -> PiecewiseFunction:
    if pf.vshape == ():
        return pf
    return pf.map_coeffs(lambda c: c.reshape(c.shape[: c.ndim - len(pf.vshape)]))


def _ess_sup(pf: PiecewiseFunction) -> float:
    best = 0.0
    flat = pf.map_coeffs(lambda c: c.reshape(c.shape[: c.ndim - len(pf.vshape)] + (-1,))) if pf.vshape else \
        pf.map_coeffs(lambda c: c[..., None])
    for i in range(flat.npieces):
        w = flat.breaks[i + 1] - flat.breaks[i]
        c = flat.coeffs[i]  # (deg+1, m)
        sq = np.zeros(2 * c.shape[0] - 1)
        for j in range(c.shape[1]):
            prod = np.polynomial.polynomial.polymul(c[:, j], c[:, j])
            sq[: prod.size] += prod
        cand = np.concatenate([[0.0, w], _real_roots_local(np.polynomial.polynomial.polyder(sq), w)
                               if sq.size > 1 else []])
        best = max(best, float(np.sqrt(max(np.polynomial.polynomial.polyval(cand, sq).max(), 0.0))))
    return best


def segment(x: Trajectory, phi: History, t: float) -> PiecewiseFunction:
    """History segment ``theta -> x(t + theta)`` on ``[-r, 0]``."""
    r = phi.r
    tol = BREAK_TOL * max(1.0, x.T)
    if t < -tol or t > x.T + tol:
        raise DomainError(f"t={t} outside [0, {x.T}]")
    t = min(max(t, 0.0), x.T)
    if t <= tol:
        return phi.pieces.with_point_values({0.0: phi.value_at_zero})
    traj = x.as_piecewise().restrict(max(0.0, t - r), t).shift(-t)
    if t >= r - tol:
        return traj
    hist = phi.pieces.restrict(t - r, 0.0).shift(-t)
    return hist.concat(traj).with_point_values({-t: x.values[0]})
