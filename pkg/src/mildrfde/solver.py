"""Time stepping for linear RFDEs with BV kernels.

Three routes compute the same solution ``x`` of ``x(t) = phi(0) + L int_0^t x_s ds``:

* :func:`solve_mild` discretizes the Volterra form
  ``x = phi(0) + d eta_check * Vx + G`` (works for discontinuous histories),
* :func:`solve_forced_dde` integrates the truncated-memory equation
  ``x'(t) = int_{-t}^0 d eta(theta) x(t + theta) + f(t)``,
* :func:`solve_classical` integrates ``x'(t) = L x_t`` with the history
  inside the segment (continuous histories only).

All routes run on a uniform grid.  With ``align_breakpoints`` every
structural point (atom delays, density edges, history breakpoints, ``r``
and ``T``) must be a grid node, which keeps each step free of kinks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PicardError, SolverConfigError, StepRejection
from .forcing import forcing_breakpoints, forcing_function
from .model import History, Kernel, instantaneous_input
from .piecewise import PiecewiseFunction, gauss_legendre, merge_breaks, nodes_for_degree
from .trajectory import Trajectory

ALIGN_TOL = 1e-9
MAX_BREAKPOINTS = 10_000


@dataclass(frozen=True)
class SolverConfig:
    """Step size and iteration controls.

    Parameters
    ----------
    h : float
        Uniform step.
    quad_order : int
        Gauss nodes per cell for non-polynomial integrands.
    picard_tol, picard_max : float, int
        Stopping rule of the per-step fixed-point iteration.
    align_breakpoints : bool
        Require structural points to be grid nodes.
    """

    h: float = 1e-3
    quad_order: int = 5
    picard_tol: float = 1e-13
    picard_max: int = 50
    align_breakpoints: bool = True

    def __post_init__(self):
        if not self.h > 0:
            raise SolverConfigError("h must be positive")
        if not self.picard_tol > 0:
            raise SolverConfigError("picard_tol must be positive")
        if self.picard_max < 1:
            raise SolverConfigError("picard_max must be at least 1")
        if self.quad_order < 1:
            raise SolverConfigError("quad_order must be at least 1")

    def with_h(self, h: float) -> "SolverConfig":
        return SolverConfig(h, self.quad_order, self.picard_tol, self.picard_max, self.align_breakpoints)


def _is_multiple(x: float, h: float) -> bool:
    k = round(x / h)
    return abs(x - k * h) <= ALIGN_TOL * max(1.0, abs(x))


def structural_points(K: Kernel, phi: History | None = None) -> np.ndarray:
    """Nonnegative lengths that must be grid multiples for aligned stepping."""
    pts = [K.r, *(-K.eta.locs), *(-K.eta.density.breaks)]
    if phi is not None:
        pts += list(-phi.breakpoints())
    return merge_breaks(np.abs(pts))


def make_grid(T: float, cfg: SolverConfig, required=()) -> np.ndarray:
    """Uniform grid ``0, h, ..., N h`` covering ``[0, T]``.

    Raises
    ------
    SolverConfigError
        ``T`` or a required point is not a multiple of ``h`` while
        alignment is requested.
    """
    if not T > 0:
        raise SolverConfigError("horizon T must be positive")
    h = cfg.h
    if cfg.align_breakpoints:
        bad = [float(p) for p in [T, *required] if not _is_multiple(float(p), h)]
        if bad:
            raise SolverConfigError(f"points {bad} are not multiples of h={h:g}; "
                                    "choose a compatible step or disable alignBreakpoints")
        N = int(round(T / h))
    else:
        N = int(math.ceil(T / h - ALIGN_TOL))
    return h * np.arange(N + 1)


def propagate_breakpoints(K: Kernel, phi: History | None, T: float) -> np.ndarray:
    """Times in ``[0, T]`` where the solution may lose smoothness.

    The forcing breakpoints on ``[0, r]`` are pushed forward by every
    positive atom delay and density edge until they pass ``T``.
    """
    phi = phi if phi is not None else instantaneous_input(np.zeros(K.n), K.r)
    seeds = forcing_breakpoints(K, phi)
    delays = merge_breaks(np.concatenate([-K.eta.locs, -K.eta.density.breaks]))
    delays = delays[delays > ALIGN_TOL]
    found = set(np.round(seeds[seeds <= T], 12).tolist())
    frontier = sorted(found)
    while frontier and len(found) < MAX_BREAKPOINTS:
        nxt = []
        for b in frontier:
            for d in delays:
                c = round(b + d, 12)
                if c <= T + ALIGN_TOL and c not in found:
                    found.add(c)
                    nxt.append(c)
        frontier = nxt
    return merge_breaks(sorted(found), tol=1e-10)


def _snap(points, grid) -> np.ndarray:
    idx = np.clip(np.searchsorted(grid, points), 0, grid.size - 1)
    lower = np.clip(idx - 1, 0, grid.size - 1)
    pick = np.where(np.abs(grid[lower] - points) < np.abs(grid[idx] - points), lower, idx)
    return np.unique(grid[pick])


# ---------------------------------------------------------------------------
# convolution weights


def _density_cells(K: Kernel, h: float, M: int):
    """Gauss nodes of the density on ``[-M h, 0]`` grouped by grid cell.

    Returns cell index ``q`` (cell ``q`` is ``[-q h, -(q-1) h]``), local
    position ``sigma`` in ``[0, 1]`` from the left cell edge, and the weight
    ``rho(theta) dtheta`` for every node.
    """
    dens = K.eta.density
    lo = max(-M * h, -K.r)
    cell_edges = -h * np.arange(M, -1, -1)
    cuts = merge_breaks(cell_edges[cell_edges >= lo], dens.breaks[(dens.breaks > lo) & (dens.breaks < 0)], [lo, 0.0])
    x, w = gauss_legendre(nodes_for_degree(dens.degree + 2))
    width = np.diff(cuts)
    nodes = (cuts[:-1, None] + width[:, None] * x[None, :]).ravel()
    qw = (width[:, None] * w[None, :]).ravel()
    q = np.ceil(-nodes / h - 1e-12).astype(int)
    q = np.maximum(q, 1)
    sigma = (nodes + q * h) / h
    wts = dens(nodes, side="right") * qw[:, None, None]
    return q, sigma, wts


def _atom_cells(K: Kernel, h: float):
    """Cell index and local position of every atom (``q = 0`` for an atom at 0)."""
    tau = -K.eta.locs
    q = np.ceil(tau / h - ALIGN_TOL).astype(int)
    sigma = np.where(q > 0, (q * h - tau) / h, 0.0)
    return q, np.clip(sigma, 0.0, 1.0), tau


def _mild_weights(K: Kernel, h: float, M: int):
    """Weights ``A[q], B[q], D[q]`` with ``(d eta_check * Vx)(t_k) ~ sum A X_{k-q} + B x_{k-q} + D x_{k-q+1}``.

    Between nodes ``Vx`` is the exact integral of the linear interpolant of
    ``x``: ``X(t_i + sigma h) = X_i + h (sigma - sigma^2/2) x_i + h sigma^2/2 x_{i+1}``.
    """
    n = K.n
    A = np.zeros((M + 2, n, n))
    B = np.zeros_like(A)
    D = np.zeros_like(A)
    q, s, wts = _density_cells(K, h, M)
    np.add.at(A, q, wts)
    np.add.at(B, q, wts * (h * (s - s * s / 2))[:, None, None])
    np.add.at(D, q, wts * (h * s * s / 2)[:, None, None])
    qa, sa, _ = _atom_cells(K, h)
    for qi, si, J in zip(qa, sa, K.eta.jumps):
        if qi == 0:  # atom at theta = 0 sees X(t_k)
            qi, si = 1, 1.0
        A[qi] += J
        B[qi] += J * h * (si - si * si / 2)
        D[qi] += J * h * si * si / 2
    return A, B, D


def _picard(update, x0, step, t, cfg: SolverConfig):
    x = x0
    for _ in range(cfg.picard_max):
        x_new = update(x)
        res = float(np.max(np.abs(x_new - x), initial=0.0))
        x = x_new
        if res <= cfg.picard_tol * max(1.0, float(np.max(np.abs(x), initial=0.0))):
            return x
    raise PicardError(step, t, res)


def _conv(W, vals, k, offset=0):
    """``sum_{q=1}^{min(k, Q)} W[q] vals[k - q + offset]``."""
    Q = min(k, W.shape[0] - 1)
    if Q < 1:
        return np.zeros(vals.shape[1])
    idx = k - np.arange(1, Q + 1) + offset
    return np.einsum("qij,qj->i", W[1:Q + 1], vals[idx])


def solve_mild(K: Kernel, phi: History, T: float, cfg: SolverConfig = SolverConfig()) -> Trajectory:
    """Mild solution on ``[0, T]`` through the Volterra form.

    ``x_k = phi(0) + C_k + G(t_k)`` where ``C_k`` discretizes
    ``(d eta_check * Vx)(t_k)`` with exact cell weights and ``G`` is
    tabulated exactly.  The implicit dependence of ``C_k`` on ``x_k`` is
    resolved by Picard iteration.
    """
    grid = make_grid(T, cfg, structural_points(K, phi))
    h, N = cfg.h, grid.size - 1
    M = int(math.ceil(K.r / h - ALIGN_TOL))
    A, B, D = _mild_weights(K, h, M)
    G = forcing_function(K, phi, "G", max(grid[-1], K.r))(grid)
    x = np.zeros((N + 1, K.n))
    X = np.zeros((N + 1, K.n))
    x[0] = phi.value_at_zero
    for k in range(1, N + 1):
        base = phi.value_at_zero + G[k] + _conv(A, X, k) + _conv(B, x, k)
        # D couples x_{k-q+1}; the q = 1 term is the unknown x_k
        Q = min(k, M + 1)
        if Q > 1:
            idx = k - np.arange(2, Q + 1) + 1
            base = base + np.einsum("qij,qj->i", D[2:Q + 1], x[idx])
        D1 = D[1]
        x[k] = _picard(lambda v: base + D1 @ v, x[k - 1], k, grid[k], cfg)
        X[k] = X[k - 1] + 0.5 * h * (x[k - 1] + x[k])
    bps = _snap(propagate_breakpoints(K, phi, grid[-1]), grid)
    return Trajectory(grid, x, bps)


def _dde_weights(K: Kernel, h: float, M: int):
    """Density weights ``P[q], Q[q]`` of cell ``q`` for ``x_{k-q}`` and ``x_{k-q+1}``.

    ``int_{-t_k}^0 rho(theta) x(t_k + theta) dtheta ~ sum_{q <= k} P[q] x_{k-q} + Q[q] x_{k-q+1}``
    with ``x`` linear between nodes.  Atoms are returned separately as
    ``(q, sigma, tau, J)`` so the caller can decide on the truncation boundary.
    """
    n = K.n
    P = np.zeros((M + 2, n, n))
    Q = np.zeros_like(P)
    q, s, wts = _density_cells(K, h, M)
    np.add.at(P, q, wts * (1 - s)[:, None, None])
    np.add.at(Q, q, wts * s[:, None, None])
    qa, sa, tau = _atom_cells(K, h)
    atoms = list(zip(qa, sa, tau, K.eta.jumps))
    return P, Q, atoms


def solve_forced_dde(K: Kernel, f, x0, T: float, cfg: SolverConfig = SolverConfig()) -> Trajectory:
    """Trapezoidal integration of ``x' = int_{-t}^0 d eta(theta) x(t + theta) + f(t)``.

    ``f`` is a PiecewiseFunction on ``[0, T']`` with ``T' >= T`` (integrated
    exactly) or a vectorized callable (Gauss rule per step).  The right-hand
    side jumps when an atom enters the memory window; the step ending at that
    time uses the left limit and the next step the right limit.

    Raises
    ------
    StepRejection
        An atom enters the window strictly inside a step while
        ``align_breakpoints`` is set.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    required = [K.r, *(-K.eta.density.breaks)]
    grid = make_grid(T, cfg, merge_breaks(np.abs(required)))
    h, N, n = cfg.h, grid.size - 1, K.n
    M = int(math.ceil(K.r / h - ALIGN_TOL))
    P, Q, atoms = _dde_weights(K, h, M)
    if cfg.align_breakpoints:
        for _, _, tau, _ in atoms:
            if tau < grid[-1] and not _is_multiple(tau, h):
                k = int(math.ceil(tau / h))
                raise StepRejection(f"atom at theta={-tau:g} enters the memory window inside step {k} "
                                    f"(t in [{(k - 1) * h:g}, {k * h:g}])")
    if isinstance(f, PiecewiseFunction):
        F = f.antiderivative()
        Fg = F(grid)
        f_int = np.diff(Fg, axis=0)
    else:
        xq, wq = gauss_legendre(cfg.quad_order)
        nodes = grid[:-1, None] + h * xq[None, :]
        vals = np.asarray(f(nodes.ravel())).reshape(nodes.shape + (n,))
        f_int = h * np.einsum("q,kqi->ki", wq, vals)

    def rhs(x, k, include_boundary):
        """Truncated-memory right-hand side at ``t_k`` (uses ``x[:k+1]``)."""
        out = _conv(P, x, k) + _conv(Q, x, k, offset=1)
        for q, s, tau, Jm in atoms:
            t = grid[k]
            edge = abs(tau - t) <= ALIGN_TOL * max(1.0, t)
            if tau > t + ALIGN_TOL * max(1.0, t) or (edge and not include_boundary):
                continue
            if q > k:
                continue
            val = x[k - q] if q == 0 or s == 0.0 else (1 - s) * x[k - q] + s * x[k - q + 1]
            out = out + Jm @ val
        return out

    x = np.zeros((N + 1, n))
    x[0] = x0
    for k in range(1, N + 1):
        r_prev = rhs(x, k - 1, include_boundary=True)

        def update(v, k=k, r_prev=r_prev):
            x[k] = v
            return x[k - 1] + 0.5 * h * (r_prev + rhs(x, k, include_boundary=False)) + f_int[k - 1]

        x[k] = _picard(update, x[k - 1], k, grid[k], cfg)
    return Trajectory(grid, x, _snap(_dde_breakpoints(K, f, grid[-1]), grid))


def _dde_breakpoints(K: Kernel, f, T: float) -> np.ndarray:
    seeds = [0.0, K.r, *(-K.eta.locs)]
    if isinstance(f, PiecewiseFunction):
        seeds += list(f.breaks)
    delays = merge_breaks(np.concatenate([-K.eta.locs, -K.eta.density.breaks]))
    delays = delays[delays > ALIGN_TOL]
    found = set(round(s, 12) for s in seeds if 0 <= s <= T)
    frontier = sorted(found)
    while frontier and len(found) < MAX_BREAKPOINTS:
        nxt = []
        for b in frontier:
            for d in delays:
                c = round(b + d, 12)
                if c <= T and c not in found:
                    found.add(c)
                    nxt.append(c)
        frontier = nxt
    return merge_breaks(sorted(found), tol=1e-10)


def solve_classical(K: Kernel, phi: History, T: float, cfg: SolverConfig = SolverConfig()) -> Trajectory:
    """Method of steps for ``x'(t) = L x_t``, ``x_0 = phi`` with continuous ``phi``.

    ``L x_t`` is evaluated with the full segment (history and computed
    trajectory): atoms by direct lookup, the density by a composite Gauss
    rule in ``theta``.  Trajectory values between nodes come from linear
    interpolation.  Steps are trapezoidal with Picard iteration.
    """
    if not phi.is_continuous():
        raise ValueError("solve_classical requires a continuous history (pieces matching phi(0))")
    grid = make_grid(T, cfg, structural_points(K, phi))
    h, N, n, r = cfg.h, grid.size - 1, K.n, K.r
    dens = K.eta.density
    # theta rule: cells of width <= h, cut at density edges and history breakpoints
    M = int(math.ceil(r / h - ALIGN_TOL))
    cuts = merge_breaks(np.linspace(-r, 0.0, M + 1), dens.breaks)
    xq, wq = gauss_legendre(cfg.quad_order)
    width = np.diff(cuts)
    th = (cuts[:-1, None] + width[:, None] * xq[None, :]).ravel()
    th_w = (width[:, None] * wq[None, :]).ravel()
    rho = dens(th, side="right") * th_w[:, None, None]
    locs, jumps = K.eta.locs, K.eta.jumps
    phi_pf = phi.pieces

    def segment_values(x, k, thetas):
        s = grid[k] + thetas
        out = np.empty((s.size, n))
        past = s < 0
        if np.any(past):
            out[past] = phi_pf(s[past])
        if np.any(~past):
            sk = s[~past]
            for j in range(n):
                out[~past, j] = np.interp(sk, grid[: k + 1], x[: k + 1, j])
        return out

    def L_of_segment(x, k):
        val = np.einsum("qab,qb->a", rho, segment_values(x, k, th))
        if locs.size:
            val = val + np.einsum("qab,qb->a", jumps, segment_values(x, k, locs))
        return val

    x = np.zeros((N + 1, n))
    x[0] = phi.value_at_zero
    R_prev = L_of_segment(x, 0)
    for k in range(1, N + 1):
        def update(v, k=k):
            x[k] = v
            return x[k - 1] + 0.5 * h * (R_prev + L_of_segment(x, k))

        x[k] = _picard(update, x[k - 1], k, grid[k], cfg)
        R_prev = L_of_segment(x, k)
    bps = _snap(propagate_breakpoints(K, phi, grid[-1]), grid)
    return Trajectory(grid, x, bps)


def fundamental_matrix(K: Kernel, T: float, cfg: SolverConfig = SolverConfig()) -> Trajectory:
    """``X(t)`` whose ``i``-th column is the mild solution for the instantaneous input ``e_i``."""
    cols = []
    for i in range(K.n):
        e = np.zeros(K.n)
        e[i] = 1.0
        cols.append(solve_mild(K, instantaneous_input(e, K.r), T, cfg))
    values = np.stack([c.values for c in cols], axis=-1)
    return Trajectory(cols[0].grid, values, cols[0].breakpoints)
