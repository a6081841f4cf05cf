import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minkowski_sphere import (PhaseShift, build_natural_curve, build_profile, curvatures_at,
                              make_euclidean_norm, make_lp_norm, make_radial_example,
                              quotient_curvature, supercurvatures_at)
from minkowski_sphere.errors import InvalidParameter, SingularFrame
from minkowski_sphere.invariants import check_invariants

from conftest import lp_curvature_oracle


@pytest.fixture(scope="module")
def l4_profile(l4):
    return build_profile(l4, 1024)


def test_euclidean_profile(euclid):
    prof, sup = build_profile(euclid, 512)
    assert np.max(np.abs(prof.rho - 1)) < 1e-8
    assert np.max(np.abs(prof.tau)) < 1e-8
    assert prof.L == pytest.approx(np.pi, abs=1e-12)
    assert np.allclose(sup.Rho, 1, atol=1e-12)
    assert np.allclose(sup.psi, 0, atol=1e-12)
    assert not prof.violations and not sup.violations


@settings(max_examples=10, deadline=None)
@given(angle=st.floats(0, 2 * np.pi))
def test_euclidean_rotated_basis(angle):
    e1 = np.array([np.cos(angle), np.sin(angle)])
    e2 = np.array([-np.sin(angle), np.cos(angle)])
    prof, _ = build_profile(make_euclidean_norm().with_basis(e1, e2), 256)
    assert np.max(np.abs(prof.rho - 1)) < 1e-8
    assert np.max(np.abs(prof.tau)) < 1e-8


def test_l4_axis_and_diagonal_values(l4_curve):
    # Frozen oracle values: the l4 sphere is flat at the axes and has rho = p - 1 on the diagonal.
    rho, tau = curvatures_at(l4_curve, np.array([0.0, l4_curve.L / 4]))
    assert rho == pytest.approx([0.0, 3.0], abs=1e-8)
    assert tau == pytest.approx([0.0, 0.0], abs=1e-8)
    sup_rho, sup_tau = supercurvatures_at(l4_curve, PhaseShift(l4_curve), np.array([0.0]))
    assert sup_tau[0] == pytest.approx(0.0, abs=1e-10)
    assert sup_rho[0] > 0


@pytest.mark.parametrize("p", [3.0, 4.0, 6.0])
def test_against_t_space_oracle(p):
    curve = build_natural_curve(make_lp_norm(p))
    t = np.linspace(0.05, np.pi / 2 - 0.05, 41)
    s = curve.table.arc_length(t)
    rho, tau = curvatures_at(curve, s)
    rho_o, tau_o = lp_curvature_oracle(t, p)
    scale = np.max(np.abs(rho_o))
    assert np.max(np.abs(rho - rho_o)) < 1e-5 * scale
    assert np.max(np.abs(tau - tau_o)) < 1e-5 * scale


def test_chain_rule_matches_fd(l4_curve):
    s = np.linspace(0, 2 * l4_curve.L, 64, endpoint=False)
    fd = np.array(curvatures_at(l4_curve, s))
    chain = np.array(curvatures_at(l4_curve, s, method="chain"))
    assert np.max(np.abs(fd - chain)) < 1e-6


def test_rejects_bad_method_and_step(l4_curve):
    with pytest.raises(InvalidParameter):
        curvatures_at(l4_curve, 0.0, method="spline")
    with pytest.raises(InvalidParameter):
        curvatures_at(l4_curve, 0.0, h=0.5)


def test_supercurvature_relations(l4_curve):
    """rho = Rho phi' and tau = Tau phi', with phi' from a central difference."""
    phase = PhaseShift(l4_curve)
    s = np.linspace(0.1, l4_curve.L - 0.1, 25)
    h = 1e-5
    dphi = (phase(s + h) - phase(s - h)) / (2 * h)
    rho, tau = curvatures_at(l4_curve, s)
    Rho, Tau = supercurvatures_at(l4_curve, phase, s)
    assert np.allclose(rho, Rho * dphi, rtol=1e-3, atol=1e-6)
    assert np.allclose(tau, Tau * dphi, rtol=1e-3, atol=1e-6)


def test_psi_is_tau_over_rho(l4_profile):
    prof, sup = l4_profile
    psi = quotient_curvature(sup)
    mask = prof.rho > 1e-2
    assert np.allclose(psi[mask], prof.tau[mask] / prof.rho[mask], rtol=1e-4, atol=1e-6)


def test_psi_periodic_and_continuous(l4, l4_profile):
    _, sup = l4_profile
    L = sup.period / 2
    s = np.linspace(0, L, 50)
    assert np.allclose(quotient_curvature(sup, s), quotient_curvature(sup, s + L), atol=1e-8)
    # On a 4x finer grid the largest step in psi shrinks about 4x: no hidden jumps.
    _, fine = build_profile(l4, 4096)
    assert np.max(np.abs(np.diff(fine.psi))) < 0.35 * np.max(np.abs(np.diff(sup.psi)))


def test_profile_invariants_l4(l4_profile):
    prof, sup = l4_profile
    assert not prof.violations and not sup.violations
    assert prof.rho.min() > -1e-9
    half = prof.s_grid < prof.L
    assert abs(prof.tau[half].sum() * prof.L / half.sum()) < 1e-6 * prof.L


def test_p_to_2_trend():
    """Away from the low-regularity axes rho -> 1 and tau -> 0 as p -> 2."""
    worst = []
    for p in (2.5, 2.1, 2.01):
        prof, _ = build_profile(make_lp_norm(p), 512)
        worst.append(np.max(np.abs(prof.rho - 1)))
    assert worst[0] > worst[1] > worst[2]
    assert worst[2] < 0.1


def test_frame_covariance(l4):
    """A linear image of the space has the same curvature profile."""
    A = np.array([[1.3, 0.2], [-0.5, 0.8]])
    a, _ = build_profile(l4, 512)
    b, _ = build_profile(l4.linear_image(A), 512)
    assert b.L == pytest.approx(a.L, abs=1e-9)
    assert np.allclose(a.rho, b.rho, atol=1e-6)
    assert np.allclose(a.tau, b.tau, atol=1e-6)


def test_singular_bands_are_excluded():
    prof, _ = build_profile(make_lp_norm(3), 1024)
    assert prof.s_grid.size < 1024
    assert len(prof.excluded) == 4
    for lo, hi in prof.excluded:
        assert not np.any((prof.s_grid > lo) & (prof.s_grid < hi))


def test_quotient_refuses_degenerate_rho(l4_profile):
    _, sup = l4_profile
    bad = type(sup)(sup.s_grid, sup.Rho * 0, sup.Tau, sup.psi, sup.phi, sup.constants, sup.period)
    with pytest.raises(SingularFrame):
        quotient_curvature(bad)


@pytest.mark.parametrize("norm", [make_euclidean_norm(), make_lp_norm(3), make_lp_norm(4),
                                  make_lp_norm(6), make_radial_example(), make_lp_norm(1.5)],
                         ids=["l2", "l3", "l4", "l6", "radial", "l1.5"])
def test_invariant_suite_zero_violations(norm):
    checks = check_invariants(norm, 1024)
    assert len(checks) == 21
    assert [c.name for c in checks if not c.ok] == []
