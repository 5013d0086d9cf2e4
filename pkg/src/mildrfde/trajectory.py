"""Grid-sampled solutions with breakpoint metadata."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from .piecewise import PiecewiseFunction, merge_breaks


@dataclass(frozen=True)
class Trajectory:
    """Values of a solution on a grid starting at 0.

    ``values[k]`` is the state at ``grid[k]``; states may be vectors or
    matrices (fundamental matrix).  ``breakpoints`` are the grid nodes where
    lower regularity is expected.  ``interp_order`` selects piecewise linear
    (1) or piecewise cubic (3) interpolation; cubic pieces never straddle a
    breakpoint.
    """

    grid: np.ndarray
    values: np.ndarray
    breakpoints: np.ndarray = field(default_factory=lambda: np.zeros(0))
    interp_order: int = 1

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid needs at least two nodes")
        if grid[0] != 0.0:
            raise ValueError("grid must start at 0")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if values.shape[0] != grid.size:
            raise ValueError("one value per grid node required")
        if self.interp_order not in (1, 3):
            raise ValueError("interp_order must be 1 or 3")
        bps = np.asarray(self.breakpoints, dtype=float).ravel()
        if bps.size:
            idx = np.searchsorted(grid, bps)
            idx = np.clip(idx, 0, grid.size - 1)
            near = np.minimum(np.abs(grid[idx] - bps), np.abs(grid[np.maximum(idx - 1, 0)] - bps))
            if np.any(near > 1e-9 * max(1.0, grid[-1])):
                raise ValueError("breakpoints must be grid nodes")
        for arr in (grid, values, bps):
            arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "breakpoints", bps)

    @property
    def T(self) -> float:
        return float(self.grid[-1])

    @property
    def vshape(self):
        return self.values.shape[1:]

    def with_values(self, values) -> "Trajectory":
        return Trajectory(self.grid, values, self.breakpoints, self.interp_order)

    def as_piecewise(self) -> PiecewiseFunction:
        """The interpolant as a PiecewiseFunction on ``[0, T]``."""
        g, v = self.grid, self.values
        if self.interp_order == 1:
            slope = np.diff(v, axis=0) / np.diff(g).reshape((-1,) + (1,) * (v.ndim - 1))
            coeffs = np.stack([v[:-1], slope], axis=1)
            return PiecewiseFunction(g, list(coeffs))
        # cubic splines on each smooth segment between breakpoints
        cuts = merge_breaks([g[0], g[-1]], self.breakpoints)
        cut_idx = np.unique(np.clip(np.searchsorted(g, cuts - 1e-12 * max(1.0, g[-1])), 0, g.size - 1))
        pieces = []
        for lo, hi in zip(cut_idx[:-1], cut_idx[1:]):
            seg_t, seg_v = g[lo:hi + 1], v[lo:hi + 1]
            if seg_t.size >= 4:
                cs = CubicSpline(seg_t, seg_v, axis=0, bc_type="not-a-knot")
                c = cs.c[::-1]  # ascending local powers, shape (4, m, *vshape)
                pieces.extend(np.moveaxis(c, 1, 0))
            else:
                slope = np.diff(seg_v, axis=0) / np.diff(seg_t).reshape((-1,) + (1,) * (v.ndim - 1))
                pieces.extend(np.stack([seg_v[:-1], slope], axis=1))
        return PiecewiseFunction(g, pieces)

    @cached_property
    def _interpolant(self) -> PiecewiseFunction:
        return self.as_piecewise()

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.interp_order == 1:
            flat = self.values.reshape(self.grid.size, -1)
            cols = [np.interp(t, self.grid, flat[:, j]) for j in range(flat.shape[1])]
            return np.stack(cols, axis=-1).reshape(t.shape + self.vshape)
        return self._interpolant(t)
