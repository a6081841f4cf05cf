"""Shared fixtures and closed-form oracles for the lp family.

The oracles here never touch the package: they work directly with the
closed-form polar curve of the lp ball and plain numpy.
"""
import numpy as np
import pytest

from minkowski_sphere import build_natural_curve, make_euclidean_norm, make_lp_norm


def lp_value(v, p):
    v = np.asarray(v, dtype=float)
    return (np.abs(v[..., 0]) ** p + np.abs(v[..., 1]) ** p) ** (1 / p)


def lp_polar(t, p):
    """(x, y) = (cos t, sin t) / ||(cos t, sin t)||_p."""
    t = np.asarray(t, dtype=float)
    e = np.stack([np.cos(t), np.sin(t)], axis=-1)
    return e / lp_value(e, p)[..., None]


def lp_polar_prime(t, p):
    """Closed-form derivative of lp_polar in t."""
    c, s = np.cos(t), np.sin(t)
    n = (np.abs(c) ** p + np.abs(s) ** p) ** (1 / p)
    dn = n ** (1 - p) * (np.abs(c) ** (p - 1) * np.sign(c) * (-s)
                         + np.abs(s) ** (p - 1) * np.sign(s) * c)
    return np.stack([-s / n - c * dn / n**2, c / n - s * dn / n**2], axis=-1)


def lp_half_length(p, panels=10**6):
    """Half-length of the lp sphere by the composite trapezoid rule on [0, pi]."""
    t = np.linspace(0.0, np.pi, panels + 1)
    return float(np.trapezoid(lp_value(lp_polar_prime(t, p), p), t))


def lp_curvature_oracle(t, p, h=1e-4):
    """(rho, tau) at polar angle t from central differences of the unit tangent in t.

    r' = p'/|p'|, r'' = (d r'/dt) / |p'|; then solve r'' = -rho r + tau r'.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))

    def tangent(x):
        d = lp_polar_prime(x, p)
        return d / lp_value(d, p)[..., None]

    speed = lp_value(lp_polar_prime(t, p), p)[..., None]
    dT = (-tangent(t + 2 * h) + 8 * tangent(t + h) - 8 * tangent(t - h) + tangent(t - 2 * h)) / (12 * h)
    r2 = dT / speed
    r, rp = lp_polar(t, p), tangent(t)
    M = np.stack([-r, rp], axis=-1)
    sol = np.linalg.solve(M, r2[..., None])[..., 0]
    return sol[..., 0], sol[..., 1]


# Frozen output of lp_half_length(4.0) (10**6 trapezoid panels).
L4_ORACLE = 3.396934823628458


@pytest.fixture(scope="session")
def euclid():
    return make_euclidean_norm()


@pytest.fixture(scope="session")
def l4():
    return make_lp_norm(4)


@pytest.fixture(scope="session")
def euclid_curve(euclid):
    return build_natural_curve(euclid)


@pytest.fixture(scope="session")
def l4_curve(l4):
    return build_natural_curve(l4)


# Acceptance lines, filled by test_acceptance.py and echoed at the end of the run.
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
