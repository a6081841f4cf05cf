import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minkowski_sphere import (CurveOracle, PointClass, SampledOracle, build_profile,
                              classify_point, estimate_psi_prime, estimate_rho, estimate_tau,
                              helper_integrals, invert_II, make_lp_norm, recover_curvatures)
from minkowski_sphere.errors import (DegenerateRho, InvalidParameter, LevelOutOfRange,
                                     ScheduleTooCoarse)
from minkowski_sphere.estimator import RhoTable, ShiftedOracle, tabulate_helpers
from minkowski_sphere.io import format_csv

from conftest import L4_ORACLE


@pytest.fixture(scope="module")
def l4_oracle(l4_curve):
    return CurveOracle(l4_curve)


@pytest.fixture(scope="module")
def euclid_oracle(euclid_curve):
    return CurveOracle(euclid_curve)


@pytest.fixture(scope="module")
def l4_estimate(l4_oracle):
    return recover_curvatures(l4_oracle, n=64)


@pytest.fixture(scope="module")
def l4_profile(l4):
    return build_profile(l4, 2048)


# ---------------------------------------------------------------- helper integrals

@pytest.mark.parametrize("eps", [0.1, -0.1, 0.37])
def test_helpers_closed_form_constant(eps):
    I, II, J, JJ = helper_integrals(lambda x: np.ones_like(x), 0.0, eps)
    # Nested trapezoid rules on 2001 nodes: JJ carries an O(h^2) error.
    exact = (eps, eps**2 / 2, eps**2 / 2, eps**3 / 6)
    assert (I, II, J, JJ) == pytest.approx(exact, rel=1e-6, abs=1e-12)


def test_helpers_closed_form_linear():
    eps = 0.2
    I, II, J, JJ = helper_integrals(lambda x: x, 0.0, eps)
    exact = (eps**2 / 2, eps**3 / 6, eps**3 / 3, eps**4 / 12)
    assert (I, II, J, JJ) == pytest.approx(exact, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(s=st.floats(0, 3), eps=st.floats(-0.5, 0.5).filter(lambda e: abs(e) > 1e-3))
def test_helper_identity(s, eps):
    """eps I = II + J and |I| is monotone in |eps| for rho >= 0."""
    def rho(x):
        return 1.5 + np.sin(3 * x)

    I, II, J, JJ = helper_integrals(rho, s, eps)
    assert eps * I == pytest.approx(II + J, rel=1e-6, abs=1e-9)
    I2 = helper_integrals(rho, s, 1.1 * eps)[0]
    assert abs(I2) >= abs(I)


def test_tabulated_helpers_match_direct():
    def rho(x):
        return 2 + np.cos(x)

    tab = tabulate_helpers(rho, 0.4, 0.3)
    for eps in (-0.25, 0.1, 0.3):
        assert tab.at(eps) == pytest.approx(helper_integrals(rho, 0.4, eps), rel=1e-6)
    with pytest.raises(LevelOutOfRange):
        tab.at(0.5)


def test_invert_II_examples():
    eps = 0.1
    tab = tabulate_helpers(lambda x: np.ones_like(x), 0.0, 0.5)
    em, ep = invert_II(tab, eps**2 / 2)
    assert (em, ep) == pytest.approx((-eps, eps), abs=1e-9)
    # rho(u) = u^2 gives II(eps) = eps^4 / 12 on both sides.
    tab = tabulate_helpers(lambda x: x**2, 0.0, 0.5)
    level = 1e-4
    em, ep = invert_II(tab, level)
    assert ep == pytest.approx((12 * level) ** 0.25, rel=1e-5)
    assert em == pytest.approx(-((12 * level) ** 0.25), rel=1e-5)
    with pytest.raises(LevelOutOfRange):
        invert_II(tab, 1.0)
    with pytest.raises(LevelOutOfRange):
        invert_II(tab, 0.0)


# ---------------------------------------------------------------- classification

def test_classification_examples():
    assert classify_point(lambda x: np.ones_like(x), 0.0).kind is PointClass.RHO_POSITIVE
    assert classify_point(lambda x: 0 * x, 0.0).kind is PointClass.I_NULL
    assert classify_point(lambda x: x**2, 0.0).kind is PointClass.I_POSITIVE
    one_sided = classify_point(lambda x: np.maximum(x, 0), 0.0)
    assert one_sided.kind is PointClass.I_POSITIVE
    assert one_sided.I_minus == 0 and one_sided.I_plus > 0


def test_i_null_gives_unit_psi_prime(l4_oracle):
    zero = RhoTable.from_function(lambda x: 0 * x, l4_oracle.L, 64)
    assert estimate_psi_prime(l4_oracle, zero, 1.0) == 1.0


# ---------------------------------------------------------------- rho

def test_rho_euclidean(euclid_oracle):
    s = np.linspace(0, np.pi, 17)
    assert np.allclose(estimate_rho(euclid_oracle, s), 1.0, atol=1e-4)


def test_rho_l4_examples(l4_oracle):
    rho = estimate_rho(l4_oracle, np.array([0.0, L4_ORACLE / 4]))
    assert abs(rho[0]) <= 1e-2
    assert rho[1] == pytest.approx(3.0, rel=1e-2)


def test_rho_matches_cramer(l4_oracle, l4_profile):
    prof, _ = l4_profile
    s = prof.s_grid[::37]
    assert np.allclose(estimate_rho(l4_oracle, s), prof.rho[::37], atol=1e-5)


@settings(max_examples=10, deadline=None)
@given(delta=st.floats(0, 3.3))
def test_rho_translation_covariance(l4_oracle, delta):
    s = np.linspace(0.1, 3.0, 7)
    shifted = estimate_rho(ShiftedOracle(l4_oracle, delta), s)
    assert np.allclose(shifted, estimate_rho(l4_oracle, s + delta), atol=1e-6)


def test_rho_antipodal_invariance(l4_oracle):
    s = np.linspace(0.1, 3.0, 7)
    assert np.allclose(estimate_rho(l4_oracle, s + l4_oracle.L), estimate_rho(l4_oracle, s),
                       atol=1e-6)


def test_schedule_validation(l4_oracle):
    for bad in ([1e-2, 5e-3], [1e-2, 2e-2, 4e-2], [1.0, 0.5, 0.25], [1e-2, 5e-3, 1e-3]):
        with pytest.raises(InvalidParameter):
            estimate_rho(l4_oracle, 0.3, bad)


def test_schedule_too_coarse(l4_oracle):
    # Steps of order L/8 are far outside the asymptotic regime near the flat axis.
    with pytest.raises(ScheduleTooCoarse):
        estimate_rho(l4_oracle, 0.3, [0.8, 0.4, 0.2], rtol=1e-3, atol=1e-6)


def test_taylor_sanity(euclid_oracle):
    """The rho quotient on the circle is (2 - 2 cos eps) / eps^2 exactly."""
    for eps in (1e-1, 5e-2):
        q = (2 - euclid_oracle.dist(eps, np.pi - eps)) / eps**2
        assert q == pytest.approx((2 - 2 * np.cos(eps)) / eps**2, abs=1e-10)


# ---------------------------------------------------------------- psi', tau

def test_euclidean_psi_prime_factor(euclid_oracle):
    rho = RhoTable.from_function(lambda x: np.ones_like(x), np.pi, 64)
    fixed = [estimate_psi_prime(euclid_oracle, rho, s) for s in (0.2, 1.0, 2.5)]
    raw = [estimate_psi_prime(euclid_oracle, rho, s, corrected=False) for s in (0.2, 1.0, 2.5)]
    assert np.max(np.abs(fixed)) < 1e-3
    assert np.allclose(raw, 2 / 3, atol=1e-3)


def test_l4_psi_prime_against_profile(l4_estimate, l4_profile):
    """Compare with a central difference of psi = Tau/Rho from the Cramer route."""
    _, sup = l4_profile
    s = l4_estimate.s_grid
    h = 1e-3
    psi = lambda x: np.interp(np.mod(x, sup.period), sup.s_grid, sup.psi, period=sup.period)
    ref = (psi(s + h) - psi(s - h)) / (2 * h)
    assert np.max(np.abs(l4_estimate.psi_prime_hat - ref)) < 5e-2 * np.max(np.abs(ref))


def test_l4_tau_recovery(l4_estimate, l4_profile):
    prof, _ = l4_profile
    half = prof.s_grid < prof.L
    tau_ref = np.interp(l4_estimate.s_grid, prof.s_grid[half], prof.tau[half], period=prof.L)
    assert np.max(np.abs(l4_estimate.tau_hat - tau_ref)) <= 5e-2 * np.max(np.abs(prof.tau))
    L = l4_estimate.L
    assert abs(l4_estimate.tau_hat.sum() * L / l4_estimate.s_grid.size) <= 1e-4 * L
    assert l4_estimate.rho_hat.sum() > 0
    assert abs(l4_estimate.psi_closure) < 1e-2


def test_l4_axis_is_i_positive(l4_oracle, l4_estimate):
    # rho vanishes at the axis but not on any interval around it.
    table = l4_estimate.rho_table
    cls = classify_point(table, 0.0)
    assert cls.kind is PointClass.I_POSITIVE
    assert cls.I_plus > 0 and cls.I_minus > 0
    # psi = Tau/Rho has derivative 1 there (frozen from the Cramer profile).
    assert estimate_psi_prime(l4_oracle, table, 0.0, classification=cls) == pytest.approx(1.0, abs=1e-3)
    assert set(l4_estimate.classes) == {PointClass.RHO_POSITIVE}


def test_estimate_tau_normalization():
    n, L = 200, 2.0
    s = L * np.arange(n) / n
    rho = 1 + 0.5 * np.cos(2 * np.pi * s / L)
    psi_true = np.sin(2 * np.pi * s / L) + 0.3
    pp = 2 * np.pi / L * np.cos(2 * np.pi * s / L)
    psi, tau = estimate_tau(rho, pp, s, L)
    assert abs(np.sum(tau)) < 1e-10
    # psi is fixed up to the constant that zeroes the rho-weighted mean.
    shift = -np.sum(rho * psi_true) / np.sum(rho)
    assert np.allclose(psi, psi_true + shift, atol=1e-3)


def test_degenerate_rho():
    with pytest.raises(DegenerateRho):
        estimate_tau(np.zeros(16), np.ones(16), np.arange(16) / 16, 1.0)


# ---------------------------------------------------------------- sampled oracle

def test_sampled_oracle_from_csv(tmp_path, l4_curve, l4_oracle):
    n = 4096
    s = 2 * l4_curve.L * np.arange(n) / n
    pts = l4_curve.r(s)
    path = tmp_path / "samples.csv"
    path.write_text(format_csv(["s", "x", "y"], np.column_stack([s, pts])))
    oracle = SampledOracle.from_csv(path, l4_curve.norm)
    assert oracle.L == pytest.approx(l4_curve.L, abs=1e-9)
    q = np.linspace(0.1, 3.0, 9)
    assert np.allclose(estimate_rho(oracle, q), estimate_rho(l4_oracle, q), atol=1e-5)


def test_second_order_taylor_remainder(l4_curve):
    """||r(s+eps) - r(s) - r'(s) eps - r''(s) eps^2 / 2|| / eps^2 -> 0 as eps halves."""
    from minkowski_sphere.curvature import second_derivative_chain

    s = 0.7
    r, rp = l4_curve.frame(s)
    r2 = second_derivative_chain(l4_curve, s)
    ratios = []
    for eps in (4e-2, 2e-2, 1e-2, 5e-3):
        rem = l4_curve.r(s + eps) - r - rp * eps - 0.5 * r2 * eps**2
        ratios.append(float(l4_curve.norm(rem)) / eps**2)
    assert all(b < 0.6 * a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < 1e-2
