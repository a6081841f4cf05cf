import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from minkowski_sphere import build_isometry, build_profile, integrate_sphere, tingley_check
from minkowski_sphere.errors import (BlowUp, CurvatureMismatch, InvalidParameter,
                                     SingularFrame)
from minkowski_sphere.reconstruct import (GridFunction, profile_coefficients,
                                          random_well_conditioned, round_trip_error)


@pytest.fixture(scope="module")
def l4_coeffs(l4):
    prof, _ = build_profile(l4, 4096)
    return profile_coefficients(prof)


def test_euclidean_closed_form():
    rec = integrate_sphere(1.0, 0.0, [1, 0], [0, 1], 2 * np.pi, step=np.pi / 2000, L=np.pi)
    s = rec.s_grid
    assert np.allclose(rec.r, np.column_stack([np.cos(s), np.sin(s)]), atol=1e-11)
    assert rec.antipodal_residual < 1e-9
    assert rec.periodic_residual < 1e-9


def test_euclidean_fourth_order():
    errs = []
    for n in (32, 64, 128):
        rec = integrate_sphere(1.0, 0.0, [1, 0], [0, 1], 2 * np.pi, step=np.pi / n, L=np.pi)
        errs.append(np.max(np.hypot(*(rec.r - np.column_stack([np.cos(rec.s_grid),
                                                               np.sin(rec.s_grid)])).T)))
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(16, rel=0.1)


def test_zero_curvature_is_a_line_and_blows_up():
    with pytest.raises(BlowUp):
        integrate_sphere(0.0, 0.0, [1, 0], [0, 1], 20.0, step=0.01)


def test_degenerate_initial_frame():
    with pytest.raises(SingularFrame):
        integrate_sphere(1.0, 0.0, [1, 0], [2, 0], 1.0, step=0.01)
    with pytest.raises(InvalidParameter):
        integrate_sphere(1.0, 0.0, [1, 0], [0, 1], 1.0)


@settings(max_examples=10, deadline=None)
@given(a=st.floats(-2, 2), b=st.floats(-2, 2), c=st.floats(-2, 2), d=st.floats(-2, 2))
def test_linear_in_initial_frame(l4_coeffs, a, b, c, d):
    """The ODE is linear: solutions from (M r0, M r0') are M applied to the original."""
    M = np.array([[a, b], [c, d]])
    assume(abs(np.linalg.det(M)) > 0.1)
    rho, tau = l4_coeffs
    base = integrate_sphere(rho, tau, [1, 0], [0, 1], 1.0, step=1e-2 * rho.period)
    moved = integrate_sphere(rho, tau, M @ [1, 0], M @ [0, 1], 1.0, step=1e-2 * rho.period)
    assert np.allclose(moved.r, base.r @ M.T, atol=1e-8 * max(1.0, np.abs(M).max()))


def test_round_trip_l4(l4_curve, l4_coeffs):
    rho, tau = l4_coeffs
    r0, r0p = l4_curve.frame(0.0)
    rec = integrate_sphere(rho, tau, r0, r0p, 2 * rho.period, step=1e-3 * rho.period,
                           norm=l4_curve.norm)
    assert round_trip_error(l4_curve, rec) < 1e-5
    assert rec.antipodal_residual < 1e-6
    assert rec.periodic_residual < 1e-6


def test_l4_truncation_regime_is_fourth_order(l4_curve, l4_coeffs):
    rho, tau = l4_coeffs
    r0, r0p = l4_curve.frame(0.0)
    errs = [round_trip_error(l4_curve, integrate_sphere(rho, tau, r0, r0p, 2 * rho.period,
                                                        step=f * rho.period))
            for f in (1e-2, 5e-3)]
    assert errs[0] / errs[1] >= 12


def test_perturbed_tau_does_not_close(l4_curve, l4_coeffs):
    rho, tau = l4_coeffs
    r0, r0p = l4_curve.frame(0.0)
    shifted = GridFunction.build(tau.s_grid, tau.values + 0.1, tau.period)
    rec = integrate_sphere(rho, shifted, r0, r0p, 2 * rho.period, step=1e-3 * rho.period)
    assert rec.periodic_residual > 1e-2


def test_pchip_is_available_but_coarser(l4_curve, l4):
    prof, _ = build_profile(l4, 4096)
    errs = {}
    for kind in ("spline", "pchip"):
        rho, tau = profile_coefficients(prof, kind)
        r0, r0p = l4_curve.frame(0.0)
        rec = integrate_sphere(rho, tau, r0, r0p, 2 * rho.period, step=1e-3 * rho.period)
        errs[kind] = round_trip_error(l4_curve, rec)
    assert errs["spline"] < errs["pchip"] < 1e-5
    with pytest.raises(InvalidParameter):
        GridFunction.build(prof.s_grid[:10], prof.rho[:10], prof.L, "linear")


def test_build_isometry_examples():
    assert np.allclose(build_isometry([[1, 0], [0, 1]], [[0, 1], [-1, 0]]), [[0, -1], [1, 0]])
    A = np.array([[2.0, 1.0], [0.5, 3.0]])
    X = [np.array([1.0, 1.0]), np.array([-1.0, 2.0])]
    assert np.allclose(build_isometry(X, [A @ x for x in X]), A)
    with pytest.raises(SingularFrame):
        build_isometry([[1, 0], [2, 0]], [[1, 0], [0, 1]])


def test_tingley_rotation_of_euclidean(euclid):
    a = 0.7
    e1 = np.array([np.cos(a), np.sin(a)])
    e2 = np.array([-np.sin(a), np.cos(a)])
    rep = tingley_check(euclid, euclid, e1, e2, grid_size=512)
    assert np.allclose(rep.F, np.column_stack([e1, e2]), atol=1e-12)
    assert rep.max_sphere_residual < 1e-12


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_tingley_random_map(l4, seed):
    A = random_well_conditioned(np.random.default_rng(seed))
    assert np.linalg.cond(A) <= 3 + 1e-12
    Y = l4.linear_image(A)
    rep = tingley_check(l4, Y, A @ [1, 0], A @ [0, 1], reference_map=A)
    assert rep.reference_deviation < 1e-3
    assert rep.max_sphere_residual < 1e-4
    assert rep.frame_residual < 1e-6


def test_tingley_negative_control(l4, euclid):
    with pytest.raises(CurvatureMismatch) as info:
        tingley_check(l4, euclid, [1, 0], [0, 1])
    assert info.value.rho_gap > 1e-2 or np.isnan(info.value.rho_gap)


def test_tingley_rejects_off_sphere_frame(l4):
    with pytest.raises(InvalidParameter):
        tingley_check(l4, l4, [2, 0], [0, 1])
