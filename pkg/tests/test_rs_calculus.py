import numpy as np
import pytest
from oracles import BVSpec, rs_sum

from mildrfde import (
    BVFunction,
    PiecewiseFunction,
    check_fubini,
    check_minkowski,
    check_sharp_estimate,
    check_shifted_fubini,
    rs_convolution,
    rs_integral,
    variation_function,
    volterra,
)
from mildrfde.errors import SharedDiscontinuityError
from mildrfde.piecewise import BivariatePolynomial
from mildrfde.randomized import random_bv, random_piecewise
from mildrfde.rs_calculus import check_fubini_direct, stieltjes_rule


def identity(a, b):
    """alpha(t) = t."""
    return BVFunction(a, b, a, density=PiecewiseFunction.constant(a, b, 1.0))


def poly(a, b, coeffs):
    return PiecewiseFunction.from_global([a, b], [coeffs])


# -- BV functions and variation ---------------------------------------------


def test_atom_convention_right_continuous():
    alpha = BVFunction(0.0, 1.0, 0.0, [(0.5, 2.0)])
    assert alpha(np.array([0.49, 0.5, 0.51])).tolist() == [0.0, 2.0, 2.0]
    assert alpha.increment(0.0, 0.5) == 2.0
    assert alpha.increment(0.5, 1.0) == 0.0


def test_left_end_atom_counted_from_the_left_end():
    alpha = BVFunction(-1.0, 0.0, 0.0, [(-1.0, 3.0)])
    assert alpha(np.array(-1.0)) == 0.0
    assert alpha.increment(-1.0, 0.0) == 3.0
    assert alpha.increment(-0.5, 0.0) == 0.0


def test_variation_function_monotone():
    V = variation_function(identity(0.0, 1.0))
    ts = np.linspace(0, 1, 5)
    assert np.allclose(V(ts), ts)


def test_variation_function_pure_jump():
    V = variation_function(BVFunction(0.0, 1.0, 0.0, [(0.5, -1.5)]))
    assert V(np.array([0.25, 0.5, 0.75])).tolist() == [0.0, 1.5, 1.5]


def test_variation_of_up_down_triangle():
    dens = PiecewiseFunction([0.0, 0.5, 1.0], [[2.0], [-2.0]])
    alpha = BVFunction(0.0, 1.0, 0.0, density=dens)
    assert alpha.variation() == pytest.approx(2.0, abs=1e-14)
    assert variation_function(alpha)(np.array(1.0)) == pytest.approx(2.0, abs=1e-14)


def test_variation_of_variation_is_itself():
    rng = np.random.default_rng(3)
    for _ in range(20):
        alpha = random_bv(rng, 0.0, 1.0, atoms=2, density_degree=2)
        V = variation_function(alpha)
        VV = variation_function(V)
        ts = np.linspace(0, 1, 13)
        assert np.allclose(VV(ts), V(ts), atol=1e-12)


def test_increment_bounded_by_variation_increment():
    rng = np.random.default_rng(4)
    for _ in range(20):
        alpha = random_bv(rng, 0.0, 1.0, atoms=3, density_degree=2)
        V = variation_function(alpha)
        c, d = np.sort(rng.uniform(0, 1, 2))
        assert abs(alpha.increment(c, d)) <= V.increment(c, d) + 1e-12


def test_variation_of_matrix_atoms_uses_operator_norm():
    J = np.array([[3.0, 0.0], [0.0, 4.0]])
    alpha = BVFunction(0.0, 1.0, np.zeros((2, 2)), [(0.5, J)])
    assert alpha.variation() == pytest.approx(4.0)


def test_atoms_outside_domain_rejected():
    with pytest.raises(ValueError):
        BVFunction(0.0, 1.0, 0.0, [(1.5, 1.0)])
    with pytest.raises(ValueError):
        BVFunction(0.0, 1.0, 0.0, [(0.5, 1.0), (0.5, 2.0)])


# -- RS integral -------------------------------------------------------------


def test_rs_integral_reduces_to_riemann():
    assert rs_integral(identity(0.0, 1.0), poly(0, 1, [0.0, 1.0])) == pytest.approx(0.5, abs=1e-15)


def test_rs_integral_atom_evaluation():
    alpha = BVFunction(0.0, 1.0, 0.0, [(0.5, 1.0)])
    assert rs_integral(alpha, poly(0, 1, [0, 0, 1.0])) == pytest.approx(0.25, abs=1e-15)


def test_rs_integral_of_one_is_increment():
    alpha = BVFunction(0.0, 1.0, 0.0, density=poly(0, 1, [0.0, 2.0]))
    assert rs_integral(alpha, PiecewiseFunction.constant(0, 1, 1.0)) == pytest.approx(1.0, abs=1e-15)


def test_rs_integral_linear_and_additive():
    rng = np.random.default_rng(5)
    alpha = random_bv(rng, 0.0, 2.0, atoms=3, density_degree=2)
    f = random_piecewise(rng, 0.0, 2.0, (), pieces=3, degree=3)
    g = random_piecewise(rng, 0.0, 2.0, (), pieces=2, degree=2)
    lhs = rs_integral(alpha, f * 2.0 + g * -3.0)
    assert lhs == pytest.approx(2 * rs_integral(alpha, f) - 3 * rs_integral(alpha, g), abs=1e-12)
    for m in (0.3, 0.7, 1.4):
        split = rs_integral(alpha, f, 0.0, m) + rs_integral(alpha, f, m, 2.0)
        assert split == pytest.approx(rs_integral(alpha, f), abs=1e-12)


def test_rs_integral_shared_discontinuity_raises():
    alpha = BVFunction(0.0, 1.0, 0.0, [(0.5, 1.0)])
    f = PiecewiseFunction([0.0, 0.5, 1.0], [[0.0], [1.0]])
    with pytest.raises(SharedDiscontinuityError):
        rs_integral(alpha, f)


def test_rs_integral_matches_brute_force_sums():
    """Exact value vs. midpoint RS sums on refined uniform partitions."""
    atoms = [(0.3, 0.7), (0.8, -1.2)]
    dens = [(0.0, 0.6, [0.5, -1.0]), (0.6, 1.0, [0.2, 0.0, 1.5])]
    spec = BVSpec(0.0, 1.0, 0.0, atoms, dens)
    alpha = BVFunction(0.0, 1.0, 0.0, atoms, PiecewiseFunction.from_global(
        [0.0, 0.6, 1.0], [np.array(c) for _, _, c in dens]))

    def f(t):
        return np.sin(3 * t) + t ** 2

    exact = rs_integral(alpha, f, order=10, subdivisions=64)
    # atoms sit on partition nodes, so midpoint tags converge at first order
    errs = [abs(rs_sum(spec, f, 0.0, 1.0, 100 * 2 ** k) - exact) for k in range(4)]
    assert errs[-1] < 2e-3
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(1.8 < q < 2.2 for q in ratios)


def test_rs_integral_matrix_against_brute_force():
    rng = np.random.default_rng(6)
    A1, A2 = rng.normal(size=(2, 2, 2))
    D = rng.normal(size=(2, 2, 2))  # linear density coefficients
    spec = BVSpec(0.0, 1.0, np.zeros((2, 2)), [(0.25, A1), (0.6, A2)], [(0.0, 1.0, D)])
    alpha = BVFunction(0.0, 1.0, np.zeros((2, 2)), [(0.25, A1), (0.6, A2)],
                       PiecewiseFunction.from_global([0.0, 1.0], [D]))
    fcoef = rng.normal(size=(3, 2))
    f = PiecewiseFunction.from_global([0.0, 1.0], [fcoef])
    exact = rs_integral(alpha, f)
    approx = rs_sum(spec, lambda t: np.polynomial.polynomial.polyval(t, fcoef).T, 0.0, 1.0, 4000)
    assert np.allclose(exact, approx, atol=2e-3)


def test_stieltjes_rule_exact_for_declared_degree():
    alpha = BVFunction(0.0, 1.0, 0.0, density=poly(0, 1, [1.0, 1.0, 1.0]))
    rule = stieltjes_rule(alpha, 0.0, 1.0, degree=4)
    val = rule.apply(rule.points ** 4)
    exact = 1 / 5 + 1 / 6 + 1 / 7
    assert val == pytest.approx(exact, abs=1e-15)


# -- convolution and Volterra -------------------------------------------------


def test_convolution_with_identity_atom():
    delta = BVFunction(0.0, 1.0, 0.0, [(0.0, 1.0)])
    f = poly(0.0, 3.0, [0, 0, 1.0])
    assert rs_convolution(delta, f, 2.0) == pytest.approx(4.0, abs=1e-14)
    x = Trajectory_from(np.linspace(0, 3, 31), lambda t: np.cos(t))
    for t in x.grid[1:]:
        assert rs_convolution(delta, x, t)[0] == pytest.approx(x(np.array(t))[0], abs=1e-14)


def Trajectory_from(grid, fn):
    from mildrfde import Trajectory
    return Trajectory(grid, fn(grid)[:, None])


def test_convolution_with_lebesgue_density():
    alpha = identity(0.0, 5.0)
    f = PiecewiseFunction.constant(0.0, 3.0, 1.0)
    for t in (0.5, 1.0, 2.5):
        assert rs_convolution(alpha, f, t) == pytest.approx(t, abs=1e-14)


def test_convolution_with_shifted_atom():
    A = 1.7
    alpha = BVFunction(0.0, 1.0, 0.0, [(0.5, A)])
    f = poly(0.0, 3.0, [1.0, 2.0])
    assert rs_convolution(alpha, f, 0.4) == 0.0
    assert rs_convolution(alpha, f, 2.0) == pytest.approx(A * (1 + 2 * 1.5), abs=1e-14)


def test_volterra_of_polynomials():
    grid = np.linspace(0, 2, 9)
    assert np.allclose(volterra(PiecewiseFunction.constant(0, 2, 1.0), grid).values, grid)
    assert np.allclose(volterra(poly(0, 2, [0.0, 2.0]), grid).values, grid ** 2)
    x = volterra(lambda t: 2 * t, grid)
    assert np.allclose(x.values, grid ** 2, atol=1e-14)


def test_volterra_commutes_with_convolution():
    rng = np.random.default_rng(7)
    alpha = random_bv(rng, 0.0, 1.0, atoms=2, density_degree=1)
    h = random_piecewise(rng, 0.0, 2.0, (), pieces=3, degree=2, continuous=False)
    grid = np.linspace(0, 2, 9)
    Vh = volterra(h, np.linspace(0, 2, 2001))
    for t in grid[1:]:
        # V(d alpha * h)(t) by quadrature in s vs. (d alpha * Vh)(t)
        inner = volterra(lambda ss: np.array([rs_convolution(alpha, h, s) for s in ss]), [0.0, t],
                         breaks=(h.breaks[:, None] + alpha.breakpoints()[None, :]).ravel(),
                         order=8)
        rhs = rs_convolution(alpha, Vh.as_piecewise(), t)
        assert inner.values[-1] == pytest.approx(rhs, abs=1e-6)


# -- identity checks ----------------------------------------------------------


def test_sharp_estimate_equality_for_monotone_nonnegative():
    alpha = BVFunction(0.0, 1.0, 0.0, [(0.3, 0.5)], poly(0, 1, [1.0, 2.0]))
    res = check_sharp_estimate(alpha, poly(0, 1, [1.0, 0.0, 1.0]))
    assert res.lhs == pytest.approx(res.rhs, rel=1e-13)
    assert res.passed


def test_sharp_estimate_single_atom():
    J = np.array([[1.0, 2.0], [0.0, -1.0]])
    alpha = BVFunction(0.0, 1.0, np.zeros((2, 2)), [(0.5, J)])
    f = PiecewiseFunction.from_global([0.0, 1.0], [np.array([[1.0, -1.0], [0.5, 2.0]])])
    res = check_sharp_estimate(alpha, f)
    fc = f(np.array(0.5))
    assert res.lhs == pytest.approx(np.linalg.norm(J @ fc))
    assert res.rhs == pytest.approx(np.linalg.norm(J, 2) * np.linalg.norm(fc))
    assert res.passed


def test_sharp_estimate_random_matrix_vs_brute_force():
    rng = np.random.default_rng(8)
    for _ in range(5):
        alpha = random_bv(rng, 0.0, 1.0, (2, 2), atoms=3, density_pieces=1, density_degree=1)
        fpf = random_piecewise(rng, 0.0, 1.0, (2,), pieces=1, degree=3)
        res = check_sharp_estimate(alpha, fpf)
        assert res.passed
        c = alpha.density.coeffs[0]
        dens = [(0.0, 1.0, np.stack([c[0], c[1]]))]
        spec = BVSpec(0.0, 1.0, alpha.base, alpha.atoms, dens)
        brute = rs_sum(spec, lambda t: fpf(np.array(t)), 0.0, 1.0, 20000)
        assert np.linalg.norm(brute) == pytest.approx(res.lhs, abs=1e-3)


def test_fubini_product_measure():
    f = BivariatePolynomial([[0.0, 0.0], [0.0, 1.0]], (0, 1), (0, 1))
    res = check_fubini(f, identity(0.0, 1.0), identity(0.0, 1.0))
    assert res.lhs == pytest.approx(0.25, abs=1e-15) and res.rhs == pytest.approx(0.25, abs=1e-15)


def test_fubini_unit_atoms():
    f = BivariatePolynomial([[1.0, 2.0], [3.0, 4.0]], (0, 1), (0, 1))
    a = BVFunction(0.0, 1.0, 0.0, [(0.3, 1.0)])
    b = BVFunction(0.0, 1.0, 0.0, [(0.6, 1.0)])
    res = check_fubini(f, a, b)
    assert res.lhs == pytest.approx(f(0.3, 0.6)) and res.rhs == pytest.approx(f(0.3, 0.6))


def test_fubini_direct_route_agrees():
    rng = np.random.default_rng(9)
    from mildrfde.randomized import random_bivariate
    for _ in range(5):
        alpha = random_bv(rng, 0.0, 1.0, atoms=2, density_degree=2)
        beta = random_bv(rng, -1.0, 0.5, atoms=1, density_degree=1)
        f = random_bivariate(rng, 3, (0.0, 1.0), (-1.0, 0.5))
        assert check_fubini(f, alpha, beta).lhs == pytest.approx(check_fubini_direct(f, alpha, beta).rhs,
                                                                 abs=1e-11)


def test_minkowski_single_atom_equality():
    f = BivariatePolynomial([[1.0, 0.5], [0.2, 1.0]], (0, 1), (0, 1))
    alpha = BVFunction(0.0, 1.0, 0.0, [(0.4, 1.0)])
    res = check_minkowski(f, alpha, identity(0.0, 1.0), 2.0)
    assert res.lhs == pytest.approx(res.rhs, rel=1e-12)


def test_minkowski_separable_equality():
    u = np.array([1.0, 0.0, 1.0])   # 1 + x^2
    v = np.array([2.0, 1.0])        # 2 + y
    f = BivariatePolynomial(np.outer(u, v), (0, 1), (0, 1))
    alpha = BVFunction(0.0, 1.0, 0.0, [(0.5, 0.3)], poly(0, 1, [1.0]))
    beta = BVFunction(0.0, 1.0, 0.0, [(0.2, 0.4)], poly(0, 1, [0.5, 1.0]))
    res = check_minkowski(f, alpha, beta, 3.0)
    assert res.lhs == pytest.approx(res.rhs, rel=1e-10)


def test_minkowski_rejects_non_monotone():
    f = BivariatePolynomial([[1.0]], (0, 1), (0, 1))
    with pytest.raises(ValueError):
        check_minkowski(f, BVFunction(0.0, 1.0, 0.0, [(0.5, -1.0)]), identity(0.0, 1.0), 2.0)


def test_shifted_fubini_zero_g():
    f = poly(-1.0, 0.0, [1.0, 1.0])
    res = check_shifted_fubini(f, identity(-1.0, 0.0), PiecewiseFunction.constant(0.0, 1.0, 0.0))
    assert res.lhs == 0.0 and res.rhs == 0.0


def test_shifted_fubini_single_atom():
    th0 = -0.4
    f = poly(-1.0, 0.0, [1.0, 2.0, 0.5])
    g = poly(0.0, 1.0, [0.3, -1.0])
    res = check_shifted_fubini(f, BVFunction(-1.0, 0.0, 0.0, [(th0, 1.0)]), g)
    # direct quadrature of int_0^{-th0} f(t + th0) g(t) dt
    x, w = np.polynomial.legendre.leggauss(10)
    t = (x + 1) * (-th0) / 2
    direct = float(np.sum(w * (-th0) / 2 * f(t + th0) * g(t)))
    assert res.rhs == pytest.approx(direct, abs=1e-14)
    assert res.lhs == pytest.approx(direct, abs=1e-14)


def test_shifted_fubini_lebesgue_case():
    one = PiecewiseFunction.constant(-1.0, 0.0, 1.0)
    res = check_shifted_fubini(one, identity(-1.0, 0.0), PiecewiseFunction.constant(0.0, 1.0, 1.0))
    assert res.lhs == pytest.approx(0.5, abs=1e-14) and res.rhs == pytest.approx(0.5, abs=1e-14)
