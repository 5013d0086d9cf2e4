"""Random instance generators and seeded property suites.

Every suite draws its instances from ``numpy.random.default_rng(seed)`` and
reports the worst observed violation, so a fixed seed gives identical
results.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .forcing import check_lp_bound
from .model import History, Kernel
from .piecewise import BivariatePolynomial, PiecewiseFunction
from .rs_calculus import (
    BVFunction,
    check_fubini,
    check_minkowski,
    check_sharp_estimate,
    check_shifted_fubini,
)


# ---------------------------------------------------------------------------
# generators


def random_breaks(rng, a: float, b: float, pieces: int) -> np.ndarray:
    """``pieces`` subintervals of ``[a, b]`` none shorter than a tenth of the average."""
    w = rng.uniform(0.3, 1.0, size=pieces)
    w = w / w.sum() * (b - a)
    return np.concatenate([[a], a + np.cumsum(w)[:-1], [b]])


def random_piecewise(rng, a, b, vshape=(), pieces=2, degree=2, continuous=True, scale=1.0) -> PiecewiseFunction:
    """Random piecewise polynomial; ``continuous`` glues the pieces together."""
    breaks = random_breaks(rng, a, b, pieces)
    coeffs = []
    for i in range(pieces):
        c = rng.normal(scale=scale, size=(degree + 1,) + tuple(vshape))
        c = c / (breaks[i + 1] - breaks[i]) ** np.arange(degree + 1).reshape((-1,) + (1,) * len(vshape))
        if continuous and coeffs:
            prev, h = coeffs[-1], breaks[i] - breaks[i - 1]
            c[0] = sum(prev[j] * h ** j for j in range(prev.shape[0]))
        coeffs.append(c)
    return PiecewiseFunction(breaks, coeffs)


def random_bv(rng, a, b, vshape=(), atoms=2, density_pieces=2, density_degree=1, monotone=False,
              scale=1.0) -> BVFunction:
    """Random BV function with atoms at distinct random locations.

    With ``monotone`` the jumps are positive and the density is a positive
    constant per piece plus a square, hence nonnegative.
    """
    locs = np.sort(rng.uniform(a, b, size=atoms))
    while atoms > 1 and np.min(np.diff(locs)) < 1e-3 * (b - a):
        locs = np.sort(rng.uniform(a, b, size=atoms))
    breaks = random_breaks(rng, a, b, density_pieces)
    if monotone:
        jumps = [abs(rng.normal(scale=scale)) for _ in locs]
        coeffs = []
        for i in range(density_pieces):
            c = np.zeros(max(density_degree, 0) + 1)
            c[0] = abs(rng.normal(scale=scale))
            if density_degree >= 2:
                # s * u^2 with s >= 0
                c[2] = abs(rng.normal(scale=scale)) / (breaks[i + 1] - breaks[i]) ** 2
            coeffs.append(c)
        density = PiecewiseFunction(breaks, coeffs)
    else:
        jumps = [rng.normal(scale=scale, size=vshape) for _ in locs]
        density = random_piecewise(rng, a, b, vshape, density_pieces, density_degree, continuous=False,
                                   scale=scale)
        density = PiecewiseFunction(density.breaks, list(density.coeffs))
    return BVFunction(a, b, rng.normal(size=vshape), list(zip(locs, jumps)), density)


def random_bivariate(rng, degree=3, xdomain=(0.0, 1.0), ydomain=(0.0, 1.0), nonnegative=False) -> BivariatePolynomial:
    """Random polynomial of total degree ``degree``; nonnegative variants are squares plus a constant."""
    if nonnegative:
        half = max(degree // 2, 1)
        u = random_bivariate(rng, half, xdomain, ydomain).coeffs
        sq = _polymul2d(u, u)
        sq[0, 0] += abs(rng.normal())
        return BivariatePolynomial(sq, xdomain, ydomain)
    c = rng.normal(size=(degree + 1, degree + 1))
    i, j = np.indices(c.shape)
    c[i + j > degree] = 0.0
    return BivariatePolynomial(c, xdomain, ydomain)


def _polymul2d(a, b):
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            out[i:i + b.shape[0], j:j + b.shape[1]] += a[i, j] * b
    return out


def random_kernel(rng, n: int = 1, r: float = 1.0, atoms: int = 2, density_pieces: int = 2,
                  density_degree: int = 1) -> Kernel:
    """Random kernel on ``[-r, 0]``; jumps and density of order one."""
    locs = np.sort(rng.uniform(-r, 0.0, size=atoms))
    mats = [rng.normal(scale=0.5, size=(n, n)) for _ in locs]
    dens = random_piecewise(rng, -r, 0.0, (n, n), density_pieces, density_degree, continuous=False, scale=0.5)
    return Kernel.from_parts(r, list(zip(locs, mats)), dens, n=n)


def random_continuous_history(rng, n: int = 1, r: float = 1.0, pieces: int = 3, degree: int = 2,
                              p: float = 1.0) -> History:
    pf = random_piecewise(rng, -r, 0.0, (n,), pieces, degree, continuous=True)
    return History(r, pf, pf.limits(0.0)[0], p)


# ---------------------------------------------------------------------------
# suites


@dataclass(frozen=True)
class SuiteResult:
    """Outcome of a seeded randomized check."""

    name: str
    anchor: str
    seed: int
    trials: int
    tol: float
    worst: float
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_record(self) -> dict:
        return {"check": self.name, "anchor": self.anchor, "lhs": self.worst, "rhs": 0.0, "tol": self.tol,
                "pass": self.passed, "seed": self.seed, "trials": self.trials,
                "failedTrials": list(self.failures)}


def _excess(res) -> float:
    """Signed amount by which a check result violates its relation (<= 0 passes)."""
    if res.relation == "eq":
        return abs(res.lhs - res.rhs)
    return res.lhs - res.rhs


def _run(name, anchor, seed, trials, tol, make_check) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst, failures = -np.inf, []
    for k in range(trials):
        res = make_check(rng)
        ex = _excess(res)
        worst = max(worst, ex)
        if ex > tol:
            failures.append(k)
    return SuiteResult(name, anchor, int(seed), int(trials), float(tol), float(worst), failures)


def sharp_estimate_suite(seed: int, trials: int = 500, tol: float = 1e-9) -> SuiteResult:
    """2x2 integrators (3 atoms, linear density) against random polynomial vectors."""
    def make(rng):
        alpha = random_bv(rng, 0.0, 1.0, (2, 2), atoms=3, density_pieces=1, density_degree=1)
        f = random_piecewise(rng, 0.0, 1.0, (2,), pieces=1, degree=3)
        return check_sharp_estimate(alpha, f)
    return _run("sharp_estimate", "RS integral bounded by integral against the variation function",
                seed, trials, tol, make)


def fubini_suite(seed: int, trials: int = 500, tol: float = 1e-9) -> SuiteResult:
    """Scalar BV pairs on random rectangles, degree-3 bivariate integrands."""
    def make(rng):
        a, c = rng.uniform(-1, 0, size=2)
        b, d = a + rng.uniform(0.5, 2), c + rng.uniform(0.5, 2)
        alpha = random_bv(rng, a, b, atoms=int(rng.integers(0, 4)), density_degree=int(rng.integers(0, 3)))
        beta = random_bv(rng, c, d, atoms=int(rng.integers(0, 4)), density_degree=int(rng.integers(0, 3)))
        return check_fubini(random_bivariate(rng, 3, (a, b), (c, d)), alpha, beta)
    return _run("fubini", "iterated RS integrals commute", seed, trials, tol, make)


def minkowski_suite(seed: int, trials: int = 500, tol: float = 1e-9, p: float = 2.0) -> SuiteResult:
    """Monotone integrators and nonnegative polynomial integrands."""
    def make(rng):
        alpha = random_bv(rng, 0.0, 1.0, atoms=int(rng.integers(0, 3)), density_degree=2, monotone=True)
        beta = random_bv(rng, 0.0, 1.0, atoms=int(rng.integers(0, 3)), density_degree=2, monotone=True)
        return check_minkowski(random_bivariate(rng, 2, nonnegative=True), alpha, beta, p)
    return _run("minkowski", "Minkowski inequality for RS integrals", seed, trials, tol, make)


def shifted_fubini_suite(seed: int, trials: int = 500, tol: float = 1e-9) -> SuiteResult:
    """Continuous ``f`` on ``[-r, 0]``, scalar BV ``alpha``, piecewise ``g`` on ``[0, r]``."""
    def make(rng):
        r = float(rng.uniform(0.5, 2.0))
        f = random_piecewise(rng, -r, 0.0, (), pieces=2, degree=2, continuous=True)
        alpha = random_bv(rng, -r, 0.0, atoms=2, density_pieces=2, density_degree=1)
        g = random_piecewise(rng, 0.0, r, (), pieces=2, degree=1, continuous=False)
        return check_shifted_fubini(f, alpha, g)
    return _run("shifted_fubini", "order exchange for shifted iterated integrals", seed, trials, tol, make)


def lp_bound_suite(seed: int, trials: int = 100, tol: float = 1e-9) -> SuiteResult:
    """``||g||_p <= Var(eta) ||phi||_p`` for random kernels, continuous histories, ``p in {1, 2, 3}``."""
    def make(rng):
        n = int(rng.integers(1, 3))
        r = float(rng.uniform(0.5, 2.0))
        K = random_kernel(rng, n, r, atoms=int(rng.integers(0, 3)), density_degree=int(rng.integers(0, 2)))
        p = float(rng.choice([1, 2, 3]))
        phi = random_continuous_history(rng, n, r, pieces=2, degree=2, p=p)
        return check_lp_bound(K, phi, p)
    return _run("lp_bound", "L^p bound of the forcing g", seed, trials, tol, make)


SUITES = {
    "sharp_estimate": sharp_estimate_suite,
    "fubini": fubini_suite,
    "minkowski": minkowski_suite,
    "shifted_fubini": shifted_fubini_suite,
    "lp_bound": lp_bound_suite,
}


def derive_seed(seed: int, name: str) -> int:
    """Per-suite 64-bit seed derived deterministically from the master seed."""
    ss = np.random.SeedSequence([int(seed) & (2 ** 64 - 1), zlib.crc32(name.encode())])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_all(seed: int, trials: int, tol: float = 1e-9) -> list:
    return [fn(derive_seed(seed, name), trials, tol) for name, fn in SUITES.items()]
