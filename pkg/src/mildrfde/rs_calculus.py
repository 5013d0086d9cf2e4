"""Riemann-Stieltjes calculus for bounded-variation integrators.

A :class:`BVFunction` is ``base + (atoms) + integral of a piecewise
polynomial density``.  Interior atoms are right-continuous; an atom sitting at
the left end ``a`` of the domain is a jump immediately to the right of ``a``
(``alpha(a) == base``).  With this convention the integral over ``[c, d]``
counts an interior atom ``s`` iff ``c < s <= d`` and counts the left-end atom
iff ``c <= a < d``, so increments telescope and a kernel atom at ``-r`` is
seen by ``L``.

Every integral against ``d alpha`` is reduced to a discrete rule
(:func:`stieltjes_rule`): matrix/scalar weights at points.  Polynomial
integrands get Gauss-Legendre rules of sufficient order to be exact; other
integrands get a fixed composite rule.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, SharedDiscontinuityError
from .piecewise import (
    BREAK_TOL,
    BivariatePolynomial,
    PiecewiseFunction,
    gauss_legendre,
    merge_breaks,
    nodes_for_degree,
    piecewise_from_function,
)

DEFAULT_ORDER = 5
DEFAULT_SUBDIVISIONS = 32


# ---------------------------------------------------------------------------
# norms


def norm(v) -> float:
    """Scalar |.|: abs, Euclidean for vectors, operator 2-norm for matrices.

    Matrices larger than 4x4 fall back to the Frobenius norm, an upper bound
    of the operator norm.
    """
    v = np.asarray(v)
    if v.ndim == 0:
        return float(abs(v))
    if v.ndim == 1:
        return float(np.linalg.norm(v))
    if max(v.shape) <= 4:
        return float(np.linalg.norm(v, 2))
    return float(np.linalg.norm(v, "fro"))


def norms(values) -> np.ndarray:
    """Row-wise :func:`norm` over the leading axis."""
    values = np.asarray(values)
    if values.ndim == 1:
        return np.abs(values)
    if values.ndim == 2:
        return np.linalg.norm(values, axis=1)
    if max(values.shape[1:]) <= 4:
        return np.linalg.norm(values, 2, axis=(1, 2))
    return np.linalg.norm(values, "fro", axis=(1, 2))


def pair(weights, values):
    """Products ``W_k v_k`` along the leading axis (matrix @ vector, or scaling)."""
    weights = np.asarray(weights)
    values = np.asarray(values)
    if weights.ndim == 3:
        if values.ndim == 1:
            return weights * values[:, None, None]
        if values.ndim == 2:
            return np.einsum("kij,kj->ki", weights, values)
        return np.einsum("kij,kj...->ki...", weights, values)
    if weights.ndim == 1:
        return weights.reshape((-1,) + (1,) * (values.ndim - 1)) * values
    # vector-valued weights against scalar values
    return weights * values.reshape((-1,) + (1,) * (weights.ndim - 1))


# ---------------------------------------------------------------------------
# BV functions


class BVFunction:
    """Function of bounded variation: base value, atoms and a density.

    ``alpha(t) = base + sum_{atoms counted up to t} J + int_a^t density``.
    See the module docstring for the endpoint convention.  Left of ``a`` the
    function equals ``base``; right of ``b`` it stays at ``alpha(b)``.
    """

    def __init__(self, a: float, b: float, base=0.0, atoms=(), density: PiecewiseFunction | None = None,
                 approximate: bool = False):
        a, b = float(a), float(b)
        if not b > a:
            raise ValueError("BVFunction needs a < b")
        base = np.asarray(base, dtype=float)
        atoms = sorted(((float(c), np.asarray(J, dtype=float)) for c, J in atoms), key=lambda p: p[0])
        locs = np.array([c for c, _ in atoms], dtype=float)
        tol = BREAK_TOL * max(1.0, abs(a), abs(b))
        if locs.size:
            if np.any(np.diff(locs) <= tol):
                raise ValueError("atom locations must be strictly increasing")
            if locs[0] < a - tol or locs[-1] > b + tol:
                raise ValueError("atoms must lie in the domain")
            locs = np.clip(locs, a, b)
        jumps = np.array([J for _, J in atoms], dtype=float).reshape((len(atoms),) + base.shape)
        if density is None:
            density = PiecewiseFunction.constant(a, b, np.zeros(base.shape))
        lo, hi = density.domain
        if abs(lo - a) > tol or abs(hi - b) > tol:
            raise ValueError("density must tile the domain")
        if density.vshape != base.shape:
            raise ValueError("density and base must have the same value shape")
        self.a, self.b = a, b
        self.base = base
        self.locs = locs
        self.jumps = jumps
        self.density = density
        self.approximate = approximate
        self._density_integral = density.antiderivative()
        for arr in (self.base, self.locs, self.jumps):
            arr.setflags(write=False)

    @property
    def vshape(self):
        return self.base.shape

    @property
    def atoms(self):
        return list(zip(self.locs.tolist(), list(self.jumps)))

    def _tol(self):
        return BREAK_TOL * max(1.0, abs(self.a), abs(self.b))

    def atom_mask(self, c: float, d: float) -> np.ndarray:
        """Atoms counted by the integral over ``[c, d]``."""
        tol = self._tol()
        if d <= c + tol:
            return np.zeros(self.locs.size, dtype=bool)
        at_left = np.abs(self.locs - self.a) <= tol
        interior = (self.locs > c + tol) & (self.locs <= d + tol)
        left = (c <= self.a + tol) & (d > self.a + tol)
        return np.where(at_left, left, interior)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t_arr).ravel()
        out = np.empty((flat.size,) + self.vshape)
        for k, tk in enumerate(flat):
            val = self.base.copy()
            if tk > self.a:
                mask = self.atom_mask(self.a, min(tk, self.b))
                val = val + self.jumps[mask].sum(axis=0)
                val = val + self._density_integral(min(tk, self.b))
            out[k] = val
        return out.reshape(t_arr.shape + self.vshape)

    def increment(self, c: float, d: float):
        """``alpha(d) - alpha(c)`` in the integral convention (``int_c^d d alpha``)."""
        return rs_integral(self, lambda ts: np.ones(np.shape(ts)), c, d, degree=0)

    def variation(self) -> float:
        """Total variation over ``[a, b]``."""
        atoms = float(norms(self.jumps).sum()) if self.locs.size else 0.0
        return atoms + _abs_density_integral(self.density)

    def reflect(self) -> "BVFunction":
        """``u -> -alpha(-u)`` on ``[-b, -a]``; atoms keep their increments."""
        total = self(self.b)
        atoms = [(0.0 - c, J) for c, J in self.atoms]
        return BVFunction(0.0 - self.b, 0.0 - self.a, -total, atoms, self.density.reflect().without_point_values())

    def scaled(self, factor) -> "BVFunction":
        return BVFunction(self.a, self.b, self.base * factor, [(c, J * factor) for c, J in self.atoms],
                          self.density * factor, self.approximate)

    def breakpoints(self) -> np.ndarray:
        return merge_breaks(self.locs, self.density.breaks)

    def is_monotone(self, tol: float = 1e-12) -> bool:
        """Nondecreasing (scalar functions only)."""
        if self.vshape != ():
            raise ValueError("monotonicity is defined for scalar functions")
        if np.any(self.jumps < -tol):
            return False
        return _piecewise_min(self.density) >= -tol

    def __repr__(self):
        return (f"BVFunction([{self.a:g}, {self.b:g}], atoms={self.locs.size}, "
                f"density_pieces={self.density.npieces}, vshape={self.vshape})")


def _real_roots_local(c: np.ndarray, width: float) -> np.ndarray:
    c = np.trim_zeros(np.asarray(c, float), "b")
    if c.size <= 1:
        return np.zeros(0)
    roots = np.polynomial.polynomial.polyroots(c)
    roots = roots[np.abs(roots.imag) <= 1e-9 * max(1.0, width)].real
    return np.sort(roots[(roots > 1e-12 * width) & (roots < width * (1 - 1e-12))])


def sign_split(pf: PiecewiseFunction) -> PiecewiseFunction:
    """Refine a scalar piecewise polynomial so each piece has constant sign."""
    pts = []
    for i in range(pf.npieces):
        w = pf.breaks[i + 1] - pf.breaks[i]
        pts.extend(pf.breaks[i] + _real_roots_local(pf.coeffs[i], w))
    return pf.refine(pts) if pts else pf


def abs_piecewise(pf: PiecewiseFunction) -> PiecewiseFunction:
    """|pf| as an exact piecewise polynomial (scalar pf)."""
    split = sign_split(pf)
    mids = 0.5 * (split.breaks[:-1] + split.breaks[1:])
    signs = np.sign(split(mids, side="right"))
    signs[signs == 0] = 1.0
    return PiecewiseFunction(split.breaks, [c * s for c, s in zip(split.coeffs, signs)])


def _piecewise_min(pf: PiecewiseFunction) -> float:
    best = np.inf
    for i in range(pf.npieces):
        w = pf.breaks[i + 1] - pf.breaks[i]
        c = pf.coeffs[i]
        deriv = np.polynomial.polynomial.polyder(c) if c.size > 1 else np.zeros(1)
        cand = np.concatenate([[0.0, w], _real_roots_local(deriv, w)])
        best = min(best, float(np.polynomial.polynomial.polyval(cand, c).min()))
    return best


def _abs_density_integral(density: PiecewiseFunction) -> float:
    if density.vshape == ():
        return float(abs_piecewise(density).integrate())
    # |density(t)| for vector/matrix densities: fixed composite rule
    x, w = gauss_legendre(8)
    total = 0.0
    for i in range(density.npieces):
        lo, hi = density.breaks[i], density.breaks[i + 1]
        edges = np.linspace(lo, hi, 65)
        pts = (edges[:-1, None] + np.diff(edges)[:, None] * x[None, :]).ravel()
        wts = (np.diff(edges)[:, None] * w[None, :]).ravel()
        total += float(np.dot(wts, norms(density(pts, side="right"))))
    return total


def variation_function(alpha: BVFunction) -> BVFunction:
    """Total variation function ``V(t) = Var(alpha on [a, t])``.

    Exact for scalar ``alpha``.  For matrix or vector densities ``|density|``
    is replaced by a piecewise Chebyshev interpolant and the result is marked
    ``approximate``.
    """
    atoms = [(c, norm(J)) for c, J in alpha.atoms]
    if alpha.vshape == ():
        dens = abs_piecewise(alpha.density)
        approximate = alpha.approximate
    else:
        breaks = []
        for i in range(alpha.density.npieces):
            breaks.append(np.linspace(alpha.density.breaks[i], alpha.density.breaks[i + 1], 33)[:-1])
        breaks = np.concatenate(breaks + [alpha.density.breaks[-1:]])
        dens = piecewise_from_function(lambda ts: norms(alpha.density(ts, side="right")), breaks, 10)
        approximate = True
    return BVFunction(alpha.a, alpha.b, 0.0, atoms, dens, approximate=approximate)


# ---------------------------------------------------------------------------
# discrete rules for integrals against d alpha


@dataclass(frozen=True)
class StieltjesRule:
    """``int dalpha F ~= sum_k weights[k] F(points[k])``."""

    points: np.ndarray
    weights: np.ndarray
    atom_points: np.ndarray

    def apply(self, values):
        if self.points.size == 0:
            return None
        return pair(self.weights, values).sum(axis=0)


def stieltjes_rule(alpha: BVFunction, c: float, d: float, *, degree: int | None = None, breaks=(),
                   subdivisions: int = DEFAULT_SUBDIVISIONS, order: int = DEFAULT_ORDER) -> StieltjesRule:
    """Quadrature rule for ``int_c^d d alpha(t) F(t)``.

    ``degree`` is the polynomial degree of ``F`` between consecutive
    ``breaks``; when given the rule is exact.  Otherwise every piece is
    split into ``subdivisions`` cells with ``order`` Gauss nodes each.
    Gauss nodes are interior, so ``F`` is never sampled on a break.
    """
    mask = alpha.atom_mask(c, d)
    apts = alpha.locs[mask]
    awts = alpha.jumps[mask]
    lo, hi = max(c, alpha.a), min(d, alpha.b)
    pts, wts = [apts], [awts]
    if hi > lo + alpha._tol():
        dens = alpha.density
        inner = np.concatenate([dens.breaks, np.asarray(breaks, float).ravel()])
        inner = inner[(inner > lo) & (inner < hi)]
        cuts = merge_breaks([lo, hi], inner)
        if degree is not None:
            x, w = gauss_legendre(nodes_for_degree(degree + dens.degree))
        else:
            x, w = gauss_legendre(order)
            cuts = np.concatenate([np.linspace(cuts[i], cuts[i + 1], subdivisions + 1)[:-1]
                                   for i in range(cuts.size - 1)] + [cuts[-1:]])
        h = np.diff(cuts)
        if np.any(h > 0):
            nodes = (cuts[:-1, None] + h[:, None] * x[None, :]).ravel()
            qw = (h[:, None] * w[None, :]).ravel()
            dvals = dens(nodes, side="right")
            pts.append(nodes)
            wts.append(dvals * qw.reshape((-1,) + (1,) * len(alpha.vshape)))
    points = np.concatenate(pts)
    weights = np.concatenate(wts, axis=0)
    return StieltjesRule(points, weights, apts)


def _eval_integrand(f, pts):
    if isinstance(f, PiecewiseFunction):
        return f(pts)
    return np.asarray(f(pts))


def rs_integral(alpha: BVFunction, f, a: float | None = None, b: float | None = None, *,
                degree: int | None = None, breaks=(), subdivisions: int = DEFAULT_SUBDIVISIONS,
                order: int = DEFAULT_ORDER):
    """Left-measure Riemann-Stieltjes integral ``int_a^b d alpha(t) f(t)``.

    ``f`` is a :class:`PiecewiseFunction` (integrated exactly) or a
    vectorized callable.  For callables pass ``degree`` when ``f`` is a
    polynomial between ``breaks``; otherwise a fixed composite rule is used.

    Raises
    ------
    SharedDiscontinuityError
        An atom of ``alpha`` inside the range sits on a jump of ``f``.
    """
    a = alpha.a if a is None else float(a)
    b = alpha.b if b is None else float(b)
    if b < a:
        raise ValueError("integration range must satisfy a <= b")
    if isinstance(f, PiecewiseFunction):
        degree = f.degree
        breaks = np.concatenate([f.breaks, np.asarray(breaks, float).ravel()])
    rule = stieltjes_rule(alpha, a, b, degree=degree, breaks=breaks, subdivisions=subdivisions, order=order)
    if isinstance(f, PiecewiseFunction):
        lo, hi = f.domain
        for s in rule.atom_points:
            if lo < s < hi and f.has_jump_at(s):
                raise SharedDiscontinuityError(s)
    if rule.points.size == 0:
        if isinstance(f, PiecewiseFunction):
            fshape = f.vshape
        else:
            fshape = np.asarray(f(np.array([min(max(a, alpha.a), alpha.b)]))).shape[1:]
        return _zero_like_product(alpha.vshape, fshape)
    return rule.apply(_eval_integrand(f, rule.points))


def _zero_like_product(ashape, fshape):
    return pair(np.zeros((1,) + tuple(ashape)), np.zeros((1,) + tuple(fshape))).sum(axis=0)


# ---------------------------------------------------------------------------
# convolution and Volterra operator


def _as_piecewise(f):
    if isinstance(f, PiecewiseFunction):
        return f
    if hasattr(f, "as_piecewise"):
        return f.as_piecewise()
    return None


def rs_convolution(alpha: BVFunction, f, t: float, *, domain=None):
    """``(d alpha * f)(t) = int_0^t d alpha(u) f(t - u)``.

    ``alpha`` lives on ``[0, r]`` and is constant beyond ``r``; ``f`` is a
    PiecewiseFunction or Trajectory on ``[0, T]`` (or a callable with an
    explicit ``domain``).
    """
    pf = _as_piecewise(f)
    lo, hi = pf.domain if pf is not None else tuple(domain)
    tol = BREAK_TOL * max(1.0, abs(hi))
    if t < lo - tol or t > hi + tol:
        raise DomainError(f"t={t} outside [{lo}, {hi}]")
    if abs(lo) > tol:
        raise DomainError("convolution integrand must be defined from 0")
    upper = min(t, alpha.b)
    if t <= tol or upper <= alpha.a:
        fshape = pf.vshape if pf is not None else np.asarray(f(np.array([0.0]))).shape[1:]
        return _zero_like_product(alpha.vshape, fshape)
    if pf is not None:
        # u -> f(t - u) on [0, t]
        g = pf.restrict(0.0, t).reflect().shift(t)
        return rs_integral(alpha, g, alpha.a, upper)
    return rs_integral(alpha, lambda us: f(t - us), alpha.a, upper)


def volterra(h, grid, *, breaks=(), order: int = DEFAULT_ORDER):
    """Cumulative integral ``(Vh)(t) = int_0^t h`` sampled on ``grid``.

    Exact for piecewise polynomials and trajectories; callables use Gauss
    rules on each grid cell refined by ``breaks``.  Returns a Trajectory.
    """
    from .trajectory import Trajectory

    grid = np.asarray(grid, dtype=float)
    pf = _as_piecewise(h)
    if pf is not None:
        F = pf.antiderivative()
        vals = F(grid) - F(np.array(0.0))
        return Trajectory(grid, vals)
    x, w = gauss_legendre(order)
    cuts = merge_breaks(grid, np.asarray(breaks, float)[(np.asarray(breaks, float) > grid[0])
                                                        & (np.asarray(breaks, float) < grid[-1])])
    hs = np.diff(cuts)
    nodes = cuts[:-1, None] + hs[:, None] * x[None, :]
    vals = np.asarray(h(nodes.ravel()))
    vshape = vals.shape[1:]
    vals = vals.reshape(nodes.shape + vshape)
    cell = np.einsum("cq,cq...->c...", hs[:, None] * w[None, :], vals)
    cum = np.concatenate([np.zeros((1,) + vshape), np.cumsum(cell, axis=0)])
    idx = np.searchsorted(cuts, grid - 1e-14 * max(1.0, grid[-1]))
    return Trajectory(grid, cum[np.clip(idx, 0, cuts.size - 1)])


# ---------------------------------------------------------------------------
# checks of the integral identities


class CheckResult(NamedTuple):
    lhs: float
    rhs: float
    tol: float
    relation: str  # "eq" or "le"

    @property
    def passed(self) -> bool:
        if self.relation == "eq":
            return abs(self.lhs - self.rhs) <= self.tol
        return self.lhs <= self.rhs + self.tol

    def passes(self, tol: float) -> bool:
        if self.relation == "eq":
            return abs(self.lhs - self.rhs) <= tol
        return self.lhs <= self.rhs + tol


def _roundoff_tol(*values) -> float:
    return 1e-11 * max([1.0] + [abs(float(v)) for v in values])


def _scalar_roots(pf: PiecewiseFunction) -> list:
    if pf.vshape != ():
        return []
    return list(sign_split(pf).breaks[1:-1])


def check_sharp_estimate(alpha: BVFunction, f: PiecewiseFunction, a=None, b=None) -> CheckResult:
    """``|int d alpha f| <= int |f| dV_alpha``."""
    a = alpha.a if a is None else a
    b = alpha.b if b is None else b
    lhs = norm(rs_integral(alpha, f, a, b))
    V = variation_function(alpha)
    breaks = np.concatenate([f.breaks, _scalar_roots(f)])
    rhs = rs_integral(V, lambda ts: norms(f(ts)), a, b, breaks=breaks)
    return CheckResult(lhs, float(rhs), _roundoff_tol(lhs, rhs) * (1e3 if V.approximate else 1.0), "le")


def _require_scalar(*alphas):
    for al in alphas:
        if al.vshape != ():
            raise ValueError("scalar-valued integrators required")


def check_fubini(f: BivariatePolynomial, alpha: BVFunction, beta: BVFunction) -> CheckResult:
    """Both orders of the iterated integral of ``f`` against ``d alpha d beta``."""
    _require_scalar(alpha, beta)
    dx, dy = f.degrees
    rx = stieltjes_rule(alpha, alpha.a, alpha.b, degree=dx)
    ry = stieltjes_rule(beta, beta.a, beta.b, degree=dy)
    grid = f(rx.points[:, None], ry.points[None, :])
    # inner over x, outer over y
    lhs = float(ry.weights @ (rx.weights @ grid))
    # inner over y, outer over x
    rhs = float(rx.weights @ (grid @ ry.weights))
    return CheckResult(lhs, rhs, _roundoff_tol(lhs, rhs), "eq")


def check_fubini_direct(f: BivariatePolynomial, alpha: BVFunction, beta: BVFunction) -> CheckResult:
    """Same identity evaluated through :func:`rs_integral` on one-variable sections."""
    _require_scalar(alpha, beta)
    dx, dy = f.degrees

    def inner_x(ys):
        return np.array([rs_integral(alpha, f.section_x(y)) for y in np.atleast_1d(ys)])

    def inner_y(xs):
        return np.array([rs_integral(beta, f.section_y(x)) for x in np.atleast_1d(xs)])

    lhs = float(rs_integral(beta, inner_x, degree=dy))
    rhs = float(rs_integral(alpha, inner_y, degree=dx))
    return CheckResult(lhs, rhs, _roundoff_tol(lhs, rhs), "eq")


def check_minkowski(f: BivariatePolynomial, alpha: BVFunction, beta: BVFunction, p: float) -> CheckResult:
    """Minkowski-type inequality for monotone integrators.

    ``(int |int f dalpha|^p dbeta)^(1/p) <= int (int |f|^p dbeta)^(1/p) dalpha``.
    """
    _require_scalar(alpha, beta)
    if p < 1:
        raise ValueError("p must be >= 1")
    if not (alpha.is_monotone() and beta.is_monotone()):
        raise ValueError("check_minkowski requires monotonically increasing integrators")
    dx, dy = f.degrees
    even = float(p).is_integer() and int(p) % 2 == 0
    rx = stieltjes_rule(alpha, alpha.a, alpha.b, degree=dx)
    # |F(y)|^p with F polynomial of degree dy
    ry = stieltjes_rule(beta, beta.a, beta.b, degree=int(p) * dy if even else None)
    F = rx.weights @ f(rx.points[:, None], ry.points[None, :])
    lhs = float(ry.weights @ np.abs(F) ** p) ** (1.0 / p)
    rx_outer = stieltjes_rule(alpha, alpha.a, alpha.b)
    inner = np.abs(f(rx_outer.points[:, None], ry.points[None, :])) ** p @ ry.weights
    rhs = float(rx_outer.weights @ np.maximum(inner, 0.0) ** (1.0 / p))
    return CheckResult(lhs, rhs, _roundoff_tol(lhs, rhs), "le")


def integrate_product(f: PiecewiseFunction, g: PiecewiseFunction, a: float, b: float):
    """Exact ``int_a^b f(t) g(t) dt`` for piecewise polynomials."""
    if b <= a:
        return np.zeros(np.broadcast_shapes(f.vshape, g.vshape))
    cuts = merge_breaks([a, b], f.breaks[(f.breaks > a) & (f.breaks < b)], g.breaks[(g.breaks > a) & (g.breaks < b)])
    x, w = gauss_legendre(nodes_for_degree(f.degree + g.degree))
    h = np.diff(cuts)
    nodes = (cuts[:-1, None] + h[:, None] * x[None, :]).ravel()
    qw = (h[:, None] * w[None, :]).ravel()
    fv, gv = f(nodes, side="right"), g(nodes, side="right")
    return np.tensordot(qw, fv * gv, axes=(0, 0))


def check_shifted_fubini(f: PiecewiseFunction, alpha: BVFunction, g: PiecewiseFunction) -> CheckResult:
    """Exchange of order for the shifted iterated integral on ``[-r, 0] x [0, r]``.

    lhs = int_0^r (int_{-r}^{-t} f(t+theta) d alpha(theta)) g(t) dt
    rhs = int_{-r}^0 (int_0^{-theta} f(t+theta) g(t) dt) d alpha(theta)
    """
    _require_scalar(alpha)
    r = -f.domain[0]
    if abs(f.domain[1]) > BREAK_TOL or abs(alpha.a + r) > BREAK_TOL or abs(alpha.b) > BREAK_TOL:
        raise DomainError("f and alpha must live on [-r, 0]")
    if abs(g.domain[0]) > BREAK_TOL or abs(g.domain[1] - r) > BREAK_TOL:
        raise DomainError("g must live on [0, r]")
    fb, gb = f.breaks, g.breaks
    # lhs: inner H(t) is piecewise polynomial in t
    t_breaks = np.concatenate([-alpha.locs, -alpha.density.breaks, gb,
                               (fb[:, None] - alpha.density.breaks[None, :]).ravel(),
                               (fb[:, None] - alpha.locs[None, :]).ravel()])
    t_breaks = t_breaks[(t_breaks > 0) & (t_breaks < r)]
    deg_H = f.degree + alpha.density.degree + 1

    def H(ts):
        out = []
        for t in np.atleast_1d(ts):
            if t >= r:
                out.append(0.0)
                continue
            ft = f.shift(-t).restrict(-r, -t).without_point_values()
            out.append(float(rs_integral(alpha, ft, -r, -t)))
        return np.array(out)

    cuts = merge_breaks([0.0, r], t_breaks)
    x, w = gauss_legendre(nodes_for_degree(deg_H + g.degree))
    h = np.diff(cuts)
    nodes = (cuts[:-1, None] + h[:, None] * x[None, :]).ravel()
    qw = (h[:, None] * w[None, :]).ravel()
    lhs = float(np.dot(qw, H(nodes) * g(nodes, side="right")))

    # rhs: K(theta) = int_0^{-theta} f(t+theta) g(t) dt, piecewise polynomial in theta
    th_breaks = np.concatenate([-gb, (fb[:, None] - gb[None, :]).ravel()])
    th_breaks = th_breaks[(th_breaks > -r) & (th_breaks < 0)]

    def K(thetas):
        out = []
        for th in np.atleast_1d(thetas):
            if th >= 0:
                out.append(0.0)
                continue
            out.append(float(integrate_product(f.shift(-th).without_point_values(), g, 0.0, -th)))
        return np.array(out)

    rhs = float(rs_integral(alpha, K, -r, 0.0, degree=f.degree + g.degree + 1, breaks=th_breaks))
    return CheckResult(lhs, rhs, _roundoff_tol(lhs, rhs), "eq")


def rs_sum(alpha: BVFunction, f: Callable, a: float, b: float, m: int, tags: str = "mid"):
    """Riemann-Stieltjes sum on a uniform partition (reference oracle)."""
    t = np.linspace(a, b, m + 1)
    vals = alpha(t)
    inc = np.diff(vals, axis=0)
    if tags == "mid":
        tau = 0.5 * (t[:-1] + t[1:])
    elif tags == "left":
        tau = t[:-1]
    else:
        tau = t[1:]
    return pair(inc, np.asarray(f(tau))).sum(axis=0)
