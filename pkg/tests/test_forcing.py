import numpy as np
import pytest

from mildrfde import (
    G_forcing,
    History,
    Kernel,
    check_lp_bound,
    f_forcing,
    forcing_function,
    forcing_report,
    g_forcing,
    instantaneous_input,
    lp_norm,
    mollify_history,
)
from mildrfde.errors import UndefinedPointError
from mildrfde.forcing import (
    check_G_bound,
    check_G_is_volterra_of_g,
    density_argument_errors,
    endpoint_atoms,
    undefined_points,
)
from mildrfde.randomized import random_continuous_history, random_kernel


def atom_kernel(A, tau, r=1.0):
    return Kernel.from_parts(r, [(-tau, A)])


def quadratic_history(r=1.0):
    # phi(s) = 1 + s + s^2, continuous with phi(0) = 1
    return History.from_global(r, [-r, 0.0], [[1.0, 1.0, 1.0]], [1.0])


def mixed_fixture():
    K = Kernel.from_parts(1.0, [(-1.0, -0.5)], [((-1.0, 0.0), [0.4])], n=1)
    return K, History.indicator(1.0, -1.0, -0.5)


def f_mixed_closed_form(t):
    """-0.5 phi(t - 1) + 0.4 int_{t-1}^0 phi for the indicator fixture, t in (0, 1)."""
    return -0.5 * (t < 0.5) + 0.4 * max(0.0, 0.5 - t)


# -- g -------------------------------------------------------------------------


def test_g_single_atom_continuous_history():
    A, tau = 1.3, 0.4
    K, phi = atom_kernel(A, tau), quadratic_history()
    for t in np.linspace(0.0, 1.2, 25):
        if abs(t - tau) < 1e-9:
            continue
        s = t - tau
        expected = A * (1 + s + s * s) if t < tau else 0.0
        assert g_forcing(K, phi, t)[0] == pytest.approx(expected, abs=1e-14)


def test_g_constant_history_atom_at_minus_r():
    K, phi = atom_kernel(-0.7, 1.0), History.constant(1.0, 2.0)
    assert g_forcing(K, phi, 0.3)[0] == pytest.approx(-1.4)
    assert g_forcing(K, phi, 1.3)[0] == 0.0


def test_g_of_instantaneous_input_vanishes():
    K = Kernel.from_parts(1.0, [(-1.0, -0.5), (-0.3, 2.0)], [((-1.0, 0.0), [0.4])], n=1)
    xi = instantaneous_input([3.0], 1.0)
    for t in (0.1, 0.5, 0.9, 1.5):
        assert g_forcing(K, xi, t)[0] == 0.0


def test_endpoint_coincidence_reported():
    K = atom_kernel(1.0, 0.5)
    assert endpoint_atoms(K, 0.5) == [-0.5]
    assert endpoint_atoms(K, 0.4) == []
    rep = forcing_report(K, History.constant(1.0, 1.0), 2.0, num=20)
    assert 0.5 in rep.coincidences


# -- G -------------------------------------------------------------------------


def test_G_of_instantaneous_input_is_zero():
    K = Kernel.from_parts(1.0, [(-1.0, -0.5), (-0.3, 2.0)], [((-1.0, 0.0), [0.4])], n=1)
    xi = instantaneous_input([3.0], 1.0)
    for t in np.linspace(0, 2, 11):
        assert np.all(G_forcing(K, xi, t) == 0.0)


def test_G_single_atom_constant_history():
    A, tau, c = 2.0, 0.5, 3.0
    K, phi = atom_kernel(A, tau), History.constant(1.0, c)
    for t in np.linspace(0, 2, 17):
        assert G_forcing(K, phi, t)[0] == pytest.approx(A * c * min(t, tau), abs=1e-14)


def test_G_constant_after_r(any_fixture):
    K, phi = any_fixture.K, any_fixture.phi
    assert np.allclose(G_forcing(K, phi, 2 * K.r), G_forcing(K, phi, K.r), atol=1e-15)


def test_G_is_integral_of_f_closed_form():
    K, phi = mixed_fixture()
    # int_0^t f for the indicator fixture
    for t in (0.2, 0.5, 0.8, 1.0, 1.7):
        s = np.linspace(0, min(t, 1.0), 400001)
        mid = 0.5 * (s[1:] + s[:-1])
        ref = np.sum(np.diff(s) * np.array([f_mixed_closed_form(u) for u in mid]))
        assert G_forcing(K, phi, t)[0] == pytest.approx(ref, abs=1e-6)


def test_G_equals_volterra_of_g_on_continuous_fixtures():
    for K, phi in [(atom_kernel(1.3, 0.4), quadratic_history()),
                   (Kernel.from_parts(1.0, [(-1.0, -0.5), (-0.5, 0.3)]),
                    History.from_global(1.0, [-1.0, 0.0], [[1.0, 1.0]], [1.0])),
                   (Kernel.from_parts(1.0, [], [((-1.0, 0.0), [-0.8])], n=1), History.constant(1.0, 1.0))]:
        assert check_G_is_volterra_of_g(K, phi, 2.0).lhs <= 1e-12


def test_G_bound():
    K, phi = mixed_fixture()
    res = check_G_bound(K, phi, np.linspace(0, 2, 41))
    assert res.passed and res.lhs > 0


# -- f -------------------------------------------------------------------------


def test_f_equals_g_for_continuous_history():
    rng = np.random.default_rng(21)
    K = random_kernel(rng, 2, 1.0)
    phi = random_continuous_history(rng, 2, 1.0)
    bad = undefined_points(K, phi)
    ts = np.linspace(0, 1.2, 1000)
    ts = ts[np.min(np.abs(ts[:, None] - bad[None, :]), axis=1) > 1e-9]
    for t in ts:
        assert np.allclose(f_forcing(K, phi, t), g_forcing(K, phi, t), atol=1e-13)


def test_f_of_instantaneous_input_is_zero():
    K = Kernel.from_parts(1.0, [(-1.0, -0.5), (-0.3, 2.0)], [((-1.0, 0.0), [0.4])], n=1)
    xi = instantaneous_input([3.0], 1.0)
    pf = forcing_function(K, xi, "f", 2.0)
    assert np.all(pf.coeffs == 0.0)


def test_f_matches_difference_quotients_of_G():
    A, tau = 1.5, 0.6
    K = atom_kernel(A, tau)
    phi = History.indicator(1.0, -1.0, -0.5)
    h = 1e-6
    for t in (0.05, 0.3, 0.55, 0.9):
        dq = (G_forcing(K, phi, t + h) - G_forcing(K, phi, t - h)) / (2 * h)
        s = t - tau
        expected = A * (1.0 if (s < 0 and -1.0 <= s <= -0.5) else 0.0)
        assert f_forcing(K, phi, t)[0] == pytest.approx(expected)
        assert dq[0] == pytest.approx(expected, abs=1e-8)


def test_f_mixed_closed_form():
    K, phi = mixed_fixture()
    for t in np.linspace(0.013, 0.987, 40):
        assert f_forcing(K, phi, t)[0] == pytest.approx(f_mixed_closed_form(t), abs=1e-14)


def test_f_undefined_points_raise():
    K, phi = mixed_fixture()
    assert np.allclose(undefined_points(K, phi), [0.5, 1.0])
    with pytest.raises(UndefinedPointError):
        f_forcing(K, phi, 0.5)


def test_forcing_function_tabulation_exact():
    K, phi = mixed_fixture()
    pf = forcing_function(K, phi, "f", 3.0)
    ts = np.array([0.1, 0.3, 0.49, 0.51, 0.75, 1.5, 2.9])
    assert np.allclose(pf(ts)[:, 0], [f_mixed_closed_form(t) if t < 1 else 0.0 for t in ts], atol=1e-13)
    G = forcing_function(K, phi, "G", 3.0)
    assert np.allclose(G(np.array([1.0, 2.0, 3.0])), G_forcing(K, phi, 1.0), atol=1e-14)


def test_forcing_report_tail_and_constancy(any_fixture):
    rep = forcing_report(any_fixture.K, any_fixture.phi, 2.0)
    assert rep.tail_max <= 1e-14
    assert rep.constancy_defect <= 1e-14
    d = rep.as_dict()
    assert set(d) == {"tailMax", "constancyDefect", "endpointAtomTimes"}


# -- L^p bound and density argument ---------------------------------------------------


def test_lp_bound_single_atom_closed_form():
    A, tau, c, p = 0.8, 0.4, 2.0, 2.0
    res = check_lp_bound(atom_kernel(A, tau), History.constant(1.0, c), p)
    assert res.lhs == pytest.approx(abs(A * c) * tau ** (1 / p), rel=1e-12)
    assert res.rhs == pytest.approx(abs(A) * abs(c) * 1.0 ** (1 / p), rel=1e-12)
    assert res.passed


def test_lp_bound_zero_kernel():
    res = check_lp_bound(Kernel.zero(1, 1.0), quadratic_history(), 1.0)
    assert res.lhs == 0.0 and res.rhs == 0.0


def test_lp_bound_requires_continuous_history():
    K, phi = mixed_fixture()
    with pytest.raises(ValueError):
        check_lp_bound(K, phi, 1.0)
    with pytest.raises(ValueError):
        check_lp_bound(K, quadratic_history(), np.inf)


def test_mollify_continuous_history_is_identity():
    phi = quadratic_history()
    out = mollify_history(phi, 0.1)
    assert lp_norm(out.pieces - phi.pieces, 1) == 0.0


def test_mollify_indicator_l1_distance():
    phi = History.indicator(1.0, -0.75, -0.25)
    for eps in (0.1, 0.05):
        moll = mollify_history(phi, eps)
        assert moll.is_continuous()
        dist = lp_norm(moll.pieces - phi.pieces, 1)
        # each unit jump contributes eps / 2
        assert dist == pytest.approx(eps, abs=1e-14)
        assert dist <= 2 * eps


def test_mollify_instantaneous_input_ramp():
    xi = instantaneous_input([2.0], 1.0)
    for eps, p in [(0.1, 1.0), (0.05, 2.0), (0.2, 3.0)]:
        moll = mollify_history(xi, eps)
        assert moll.value_at_zero[0] == 2.0
        assert moll.pieces(np.array(-eps - 1e-3))[0] == 0.0
        assert lp_norm(moll, p) == pytest.approx(2.0 * (eps / (p + 1)) ** (1 / p), rel=1e-12)


def test_mollify_rejects_large_eps():
    phi = History.indicator(1.0, -1.0, -0.5)
    with pytest.raises(ValueError):
        mollify_history(phi, 0.6)
    with pytest.raises(ValueError):
        mollify_history(phi, 0.0)
    with pytest.raises(ValueError):
        mollify_history(History.indicator(1.0, -0.6, -0.5), 0.08)


def test_density_argument_errors_decrease():
    K, phi = mixed_fixture()
    errs = density_argument_errors(K, phi, [0.1, 0.05, 0.025, 0.0125], p=1.0)
    assert all(b <= a + 1e-10 for a, b in zip(errs, errs[1:]))
    assert errs[-1] <= 1e-2
