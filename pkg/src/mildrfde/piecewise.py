"""Piecewise polynomials in local coordinates.

Piece ``i`` lives on ``[breaks[i], breaks[i+1]]`` and is stored as ascending
coefficients in the local variable ``u = t - breaks[i]``.  Values may be
scalars, vectors or matrices (``vshape``).  Shifting the argument only moves
the breakpoints, which is what makes history segments cheap to build.
"""
from __future__ import annotations

from functools import lru_cache
from math import comb

import numpy as np

from .errors import DomainError

BREAK_TOL = 1e-12


@lru_cache(maxsize=64)
def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return (x + 1.0) / 2.0, w / 2.0


def nodes_for_degree(degree: int) -> int:
    """Number of Gauss nodes integrating polynomials of ``degree`` exactly."""
    return max(1, (int(degree) + 2) // 2)


def taylor_shift(coeffs: np.ndarray, d: float) -> np.ndarray:
    """Coefficients of ``p(u + d)`` given ascending coefficients of ``p``."""
    coeffs = np.asarray(coeffs)
    k = coeffs.shape[0]
    if d == 0.0 or k == 1:
        return coeffs.copy()
    mat = np.zeros((k, k))
    for j in range(k):
        for i in range(j, k):
            mat[j, i] = comb(i, j) * d ** (i - j)
    return np.tensordot(mat, coeffs, axes=(1, 0))


def _horner(coeffs: np.ndarray, u: np.ndarray) -> np.ndarray:
    # coeffs: (npts, deg+1, *vshape), u: (npts,)
    extra = (1,) * (coeffs.ndim - 2)
    uu = u.reshape(u.shape + extra)
    out = coeffs[:, -1].copy()
    for j in range(coeffs.shape[1] - 2, -1, -1):
        out = out * uu + coeffs[:, j]
    return out


def merge_breaks(*arrays, tol: float = BREAK_TOL) -> np.ndarray:
    pts = np.sort(np.concatenate([np.atleast_1d(np.asarray(a, float)) for a in arrays]))
    if pts.size == 0:
        return pts
    keep = [pts[0]]
    for p in pts[1:]:
        if p - keep[-1] > tol * max(1.0, abs(p)):
            keep.append(p)
    return np.array(keep)


class PiecewiseFunction:
    """Piecewise polynomial on a closed interval with optional point values.

    Parameters
    ----------
    breaks : array_like, shape (m + 1,)
        Strictly increasing breakpoints.
    coeffs : sequence of array_like
        ``coeffs[i]`` has shape ``(deg_i + 1, *vshape)``; ascending powers of
        ``t - breaks[i]``.
    point_values : dict, optional
        Values overriding the a.e. class at isolated points.

    Evaluation at an interior breakpoint uses the left piece (left-limit
    convention) unless ``side="right"`` is requested; a point value always
    wins.
    """

    def __init__(self, breaks, coeffs, point_values=None):
        breaks = np.asarray(breaks, dtype=float)
        if breaks.ndim != 1 or breaks.size < 2:
            raise ValueError("need at least two breakpoints")
        if np.any(np.diff(breaks) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if len(coeffs) != breaks.size - 1:
            raise ValueError("one coefficient block per piece required")
        blocks = [np.atleast_1d(np.asarray(c)) for c in coeffs]
        vshape = blocks[0].shape[1:]
        if any(b.shape[1:] != vshape for b in blocks):
            raise ValueError("inconsistent value shapes across pieces")
        deg = max(b.shape[0] for b in blocks) - 1
        dtype = np.result_type(*blocks, float)
        packed = np.zeros((len(blocks), deg + 1) + vshape, dtype=dtype)
        for i, b in enumerate(blocks):
            packed[i, : b.shape[0]] = b
        self.breaks = breaks
        self.coeffs = packed
        self.vshape = vshape
        pv = {}
        for loc, val in (point_values or {}).items():
            loc = float(loc)
            if loc < breaks[0] - BREAK_TOL or loc > breaks[-1] + BREAK_TOL:
                raise ValueError(f"point value at {loc} outside domain")
            val = np.asarray(val, dtype=dtype)
            if val.shape != vshape:
                raise ValueError("point value has wrong shape")
            pv[loc] = val
        self.point_values = pv
        self.breaks.setflags(write=False)
        self.coeffs.setflags(write=False)

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, a, b, value):
        value = np.asarray(value, dtype=float)
        return cls([a, b], [value[None]])

    @classmethod
    def from_global(cls, breaks, polys, point_values=None):
        """Build from ascending coefficients in the absolute variable ``t``."""
        breaks = np.asarray(breaks, dtype=float)
        local = [taylor_shift(np.atleast_1d(np.asarray(p, float)), breaks[i])
                 for i, p in enumerate(polys)]
        return cls(breaks, local, point_values)

    # -- basic properties -------------------------------------------------
    @property
    def domain(self):
        return float(self.breaks[0]), float(self.breaks[-1])

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def npieces(self) -> int:
        return self.breaks.size - 1

    def _locate(self, t, side):
        a, b = self.domain
        tol = BREAK_TOL * max(1.0, abs(a), abs(b))
        if np.any(t < a - tol) or np.any(t > b + tol):
            raise DomainError(f"evaluation outside [{a}, {b}]")
        idx = np.searchsorted(self.breaks, t, side="left" if side == "left" else "right") - 1
        return np.clip(idx, 0, self.npieces - 1)

    def __call__(self, t, side: str = "left"):
        t_arr = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t_arr).ravel()
        idx = self._locate(flat, side)
        out = _horner(self.coeffs[idx], flat - self.breaks[idx])
        if self.point_values:
            for loc, val in self.point_values.items():
                hit = np.abs(flat - loc) <= BREAK_TOL * max(1.0, abs(loc))
                out[hit] = val
        out = out.reshape(t_arr.shape + self.vshape)
        return out

    def limits(self, t):
        """Left and right limits at ``t`` (ignoring point values)."""
        a, b = self.domain
        i_left = self._locate(np.array([t]), "left")[0]
        i_right = self._locate(np.array([t]), "right")[0]
        left = _horner(self.coeffs[[i_left]], np.array([t - self.breaks[i_left]]))[0]
        right = _horner(self.coeffs[[i_right]], np.array([t - self.breaks[i_right]]))[0]
        return left, right

    def jump_points(self, tol: float = 1e-12):
        """Interior breakpoints where the left and right limits differ."""
        out = []
        for i in range(1, self.npieces):
            t = self.breaks[i]
            left = _horner(self.coeffs[[i - 1]], np.array([t - self.breaks[i - 1]]))[0]
            right = self.coeffs[i, 0]
            if np.max(np.abs(left - right), initial=0.0) > tol * max(1.0, np.max(np.abs(right), initial=0.0)):
                out.append(float(t))
        return out

    def has_jump_at(self, t: float, tol: float = 1e-12) -> bool:
        a, b = self.domain
        if t <= a or t >= b:
            return False
        left, right = self.limits(t)
        return bool(np.max(np.abs(left - right), initial=0.0)
                    > tol * max(1.0, np.max(np.abs(right), initial=0.0)))

    def is_continuous(self, tol: float = 1e-12) -> bool:
        if self.jump_points(tol):
            return False
        for loc, val in self.point_values.items():
            idx = self._locate(np.array([loc]), "left")[0]
            ref = _horner(self.coeffs[[idx]], np.array([loc - self.breaks[idx]]))[0]
            if np.max(np.abs(ref - val), initial=0.0) > tol * max(1.0, np.max(np.abs(val), initial=0.0)):
                return False
        return True

    # -- structural operations --------------------------------------------
    def refine(self, points) -> "PiecewiseFunction":
        """Same function on a partition refined by ``points``."""
        a, b = self.domain
        pts = np.asarray(points, dtype=float)
        pts = pts[(pts > a) & (pts < b)]
        new_breaks = merge_breaks(self.breaks, pts)
        new_breaks[0], new_breaks[-1] = a, b
        coeffs = []
        for j in range(new_breaks.size - 1):
            mid = 0.5 * (new_breaks[j] + new_breaks[j + 1])
            i = int(np.clip(np.searchsorted(self.breaks, mid) - 1, 0, self.npieces - 1))
            coeffs.append(taylor_shift(self.coeffs[i], new_breaks[j] - self.breaks[i]))
        return PiecewiseFunction(new_breaks, coeffs, self.point_values)

    def restrict(self, a: float, b: float) -> "PiecewiseFunction":
        lo, hi = self.domain
        tol = BREAK_TOL * max(1.0, abs(lo), abs(hi))
        a_c, b_c = max(a, lo), min(b, hi)
        if a < lo - tol or b > hi + tol or b_c - a_c <= tol:
            raise DomainError(f"cannot restrict [{lo}, {hi}] to [{a}, {b}]")
        a, b = a_c, b_c
        ref = self.refine([a, b])
        keep = (ref.breaks[:-1] >= a - tol) & (ref.breaks[1:] <= b + tol)
        idx = np.nonzero(keep)[0]
        br = np.concatenate([ref.breaks[idx], [ref.breaks[idx[-1] + 1]]])
        br[0], br[-1] = a, b
        pv = {k: v for k, v in self.point_values.items() if a - tol <= k <= b + tol}
        return PiecewiseFunction(br, [ref.coeffs[i] for i in idx], pv)

    def shift(self, d: float) -> "PiecewiseFunction":
        """The function ``t -> self(t - d)``."""
        pv = {k + d: v for k, v in self.point_values.items()}
        return PiecewiseFunction(self.breaks + d, list(self.coeffs), pv)

    def reflect(self) -> "PiecewiseFunction":
        """The function ``t -> self(-t)``."""
        widths = np.diff(self.breaks)
        coeffs = []
        signs = (-1.0) ** np.arange(self.degree + 1)
        signs = signs.reshape((-1,) + (1,) * len(self.vshape))
        for i in range(self.npieces - 1, -1, -1):
            shifted = taylor_shift(self.coeffs[i], widths[i])
            coeffs.append(shifted * signs)
        pv = {-k: v for k, v in self.point_values.items()}
        return PiecewiseFunction(-self.breaks[::-1], coeffs, pv)

    def without_point_values(self) -> "PiecewiseFunction":
        return PiecewiseFunction(self.breaks, list(self.coeffs))

    def with_point_values(self, extra) -> "PiecewiseFunction":
        pv = dict(self.point_values)
        pv.update({float(k): v for k, v in extra.items()})
        return PiecewiseFunction(self.breaks, list(self.coeffs), pv)

    def map_coeffs(self, fn) -> "PiecewiseFunction":
        """Apply a linear map to coefficients and point values alike."""
        pv = {k: fn(v) for k, v in self.point_values.items()}
        return PiecewiseFunction(self.breaks, [fn(c) for c in self.coeffs], pv)

    def __mul__(self, scalar):
        return self.map_coeffs(lambda c: c * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __add__(self, other: "PiecewiseFunction") -> "PiecewiseFunction":
        if not isinstance(other, PiecewiseFunction):
            return NotImplemented
        if not np.allclose(self.domain, other.domain, atol=BREAK_TOL):
            raise DomainError("domains differ")
        pts = merge_breaks(self.breaks, other.breaks)
        lhs, rhs = self.refine(pts), other.refine(pts)
        deg = max(lhs.degree, rhs.degree)
        out = np.zeros((lhs.npieces, deg + 1) + np.broadcast_shapes(lhs.vshape, rhs.vshape),
                       dtype=np.result_type(lhs.coeffs, rhs.coeffs))
        out[:, : lhs.degree + 1] += lhs.coeffs
        out[:, : rhs.degree + 1] += rhs.coeffs
        pv = {}
        for loc in set(self.point_values) | set(other.point_values):
            pv[loc] = self(np.array(loc)) + other(np.array(loc))
        return PiecewiseFunction(lhs.breaks, list(out), pv)

    def __sub__(self, other):
        return self + (-other)

    def antiderivative(self) -> "PiecewiseFunction":
        """Continuous antiderivative vanishing at the left end of the domain."""
        k = self.degree + 1
        div = np.arange(1, k + 1, dtype=float).reshape((-1,) + (1,) * len(self.vshape))
        coeffs = []
        acc = np.zeros(self.vshape, dtype=self.coeffs.dtype)
        for i in range(self.npieces):
            c = np.zeros((k + 1,) + self.vshape, dtype=self.coeffs.dtype)
            c[1:] = self.coeffs[i] / div
            c[0] = acc
            coeffs.append(c)
            h = self.breaks[i + 1] - self.breaks[i]
            acc = _horner(c[None], np.array([h]))[0]
        return PiecewiseFunction(self.breaks, coeffs)

    def integrate(self, a=None, b=None):
        lo, hi = self.domain
        a = lo if a is None else a
        b = hi if b is None else b
        F = self.antiderivative()
        return F(np.array(b)) - F(np.array(a))

    def concat(self, other: "PiecewiseFunction") -> "PiecewiseFunction":
        """Join with a function whose domain starts where this one ends."""
        if abs(self.domain[1] - other.domain[0]) > BREAK_TOL * max(1.0, abs(other.domain[0])):
            raise DomainError("domains are not adjacent")
        breaks = np.concatenate([self.breaks, other.breaks[1:]])
        pv = dict(self.point_values)
        pv.update(other.point_values)
        return PiecewiseFunction(breaks, list(self.coeffs) + list(other.coeffs), pv)

    def tabulate(self, n_per_piece: int = 8):
        """Sample points and values (including breakpoints) for plotting/CSV."""
        ts = np.concatenate([np.linspace(self.breaks[i], self.breaks[i + 1], n_per_piece, endpoint=False)
                             for i in range(self.npieces)] + [self.breaks[-1:]])
        return ts, self(ts, side="right")

    def __repr__(self):
        a, b = self.domain
        return f"PiecewiseFunction([{a:g}, {b:g}], pieces={self.npieces}, degree={self.degree}, vshape={self.vshape})"


def piecewise_from_function(func, breaks, degree: int) -> PiecewiseFunction:
    """Interpolate ``func`` by a polynomial of ``degree`` on each piece.

    Interpolation uses interior Chebyshev points, so ``func`` is never called
    at a breakpoint.  When ``func`` is a polynomial of at most ``degree`` on
    every piece the result reproduces it up to rounding.
    """
    breaks = np.asarray(breaks, dtype=float)
    m = degree + 1
    k = np.arange(m)
    cheb = np.cos((2 * k + 1) * np.pi / (2 * m))[::-1]
    coeffs = []
    for i in range(breaks.size - 1):
        a, b = breaks[i], breaks[i + 1]
        ts = a + (cheb + 1.0) * (b - a) / 2.0
        vals = np.asarray(func(ts))
        vshape = vals.shape[1:]
        flat = vals.reshape(m, -1)
        # fit in the scaled variable w = (t - a)/(b - a) for conditioning
        w = (ts - a) / (b - a)
        V = np.vander(w, m, increasing=True)
        c = np.linalg.solve(V, flat)
        scale = (1.0 / (b - a)) ** np.arange(m)
        c = c * scale[:, None]
        coeffs.append(c.reshape((m,) + vshape))
    return PiecewiseFunction(breaks, coeffs)


class BivariatePolynomial:
    """Polynomial ``f(x, y) = sum c[i, j] x**i y**j`` on a rectangle."""

    def __init__(self, coeffs, xdomain, ydomain):
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.xdomain = tuple(float(v) for v in xdomain)
        self.ydomain = tuple(float(v) for v in ydomain)

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.polynomial.polynomial.polyval2d(x, y, self.coeffs)

    @property
    def degrees(self):
        return self.coeffs.shape[0] - 1, self.coeffs.shape[1] - 1

    def section_x(self, y: float) -> PiecewiseFunction:
        """``x -> f(x, y)`` as a one-piece PiecewiseFunction."""
        cx = np.polynomial.polynomial.polyval(y, self.coeffs.T)
        return PiecewiseFunction.from_global(list(self.xdomain), [cx])

    def section_y(self, x: float) -> PiecewiseFunction:
        cy = np.polynomial.polynomial.polyval(x, self.coeffs)
        return PiecewiseFunction.from_global(list(self.ydomain), [cy])
