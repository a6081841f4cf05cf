"""Polar and natural (arc-length) parameterizations of a unit sphere.

The polar parameterization is the radial projection ``p(t) = e^{it}/||e^{it}||``
of the basis circle. Its arc length ``s(t)`` is tabulated once on [0, pi] and
extended by ``s(t + pi) = s(t) + L``, which holds exactly for symmetric norms;
so ``r(s + L) = -r(s)`` is exact by construction rather than up to
quadrature error.

Between table nodes ``s(t)`` is evaluated with a fixed Gauss-Legendre rule plus
a linear correction that pins it to the nodes. The result is smooth in ``t``,
which matters downstream: finite differences of ``r`` and the
distance-only curvature estimators divide by up to eps**3.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InvalidParameter, PhaseNotFound
from .norm import Norm2D, Smoothness
from .numerics import adaptive_simpson, gauss_legendre

TWO_PI = 2 * np.pi


def polar_point(norm: Norm2D, t) -> np.ndarray:
    e = norm.basis.circle(t)
    return e / norm(e)[..., None]


def polar_derivative(norm: Norm2D, t) -> np.ndarray:
    """p'(t) by the quotient rule; 4th-order central differences if the norm has no gradient."""
    t = np.asarray(t, dtype=float)
    if norm.grad_fn is None:
        h = 1e-5
        return (8 * (polar_point(norm, t + h) - polar_point(norm, t - h))
                - (polar_point(norm, t + 2 * h) - polar_point(norm, t - 2 * h))) / (12 * h)
    e = norm.basis.circle(t)
    de = norm.basis.circle_prime(t)
    n = norm(e)[..., None]
    dn = np.sum(norm.grad(e) * de, axis=-1)[..., None]
    return de / n - e * dn / n**2


def polar_second_derivative(norm: Norm2D, t) -> np.ndarray:
    """p''(t) from the norm's gradient and Hessian."""
    t = np.asarray(t, dtype=float)
    e = norm.basis.circle(t)
    de = norm.basis.circle_prime(t)
    g = norm.grad(e)
    H = norm.hess(e)
    n = norm(e)[..., None]
    dn = np.sum(g * de, axis=-1)[..., None]
    d2n = (np.einsum("...i,...ij,...j->...", de, H, de) - np.sum(g * e, axis=-1))[..., None]
    return -e / n - 2 * de * dn / n**2 - e * d2n / n**2 + 2 * e * dn**2 / n**3


@dataclass(frozen=True)
class PolarCurve:
    norm: Norm2D

    def p(self, t) -> np.ndarray:
        return polar_point(self.norm, t)

    def p_prime(self, t) -> np.ndarray:
        return polar_derivative(self.norm, t)

    def speed(self, t) -> np.ndarray:
        return self.norm(self.p_prime(t))


@dataclass(frozen=True)
class ArcLengthTable:
    """s(t) = integral of ||p'|| from 0 to t, tabulated on a uniform grid over [0, 2pi].

    ``interpolation`` is the monotone cubic used to seed inversions; exact
    evaluation goes through :meth:`arc_length`.
    """

    norm: Norm2D
    t_grid: np.ndarray
    s_values: np.ndarray
    L: float
    interpolation: PchipInterpolator = field(repr=False)
    _inverse: PchipInterpolator = field(repr=False)
    _corr: np.ndarray = field(repr=False)

    @property
    def n_half(self) -> int:
        return (len(self.t_grid) - 1) // 2

    @property
    def step(self) -> float:
        return np.pi / self.n_half

    def speed(self, t) -> np.ndarray:
        return self.norm(polar_derivative(self.norm, t))

    def arc_length(self, t) -> np.ndarray:
        """s(t) for arbitrary real t, including winding."""
        t = np.asarray(t, dtype=float)
        k = np.floor(t / np.pi)
        t0 = t - k * np.pi
        return k * self.L + self._half_arc(t0)

    def _half_arc(self, t0: np.ndarray) -> np.ndarray:
        n, h = self.n_half, self.step
        i = np.clip(np.floor(t0 / h).astype(int), 0, n - 1)
        ti = self.t_grid[i]
        partial = gauss_legendre(self.speed, ti, t0)
        return self.s_values[i] + partial + (t0 - ti) / h * self._corr[i]

    def invert(self, s) -> np.ndarray:
        """t(s): binary search in the table, then safeguarded Newton polishing."""
        s = np.asarray(s, dtype=float)
        shape = s.shape
        s = s.ravel()
        k = np.floor(s / self.L)
        s0 = s - k * self.L
        n, h = self.n_half, self.step
        half_s = self.s_values[: n + 1]
        i = np.clip(np.searchsorted(half_s, s0, side="right") - 1, 0, n - 1)
        lo = self.t_grid[i].copy()
        hi = self.t_grid[i + 1].copy()
        t = np.clip(self._inverse(s0), lo, hi)
        active = np.ones(s0.size, dtype=bool)
        atol = 2e-16 * max(self.L, 1.0)
        for _ in range(60):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            tt = t[idx]
            fval = self._half_arc(tt) - s0[idx]
            hit = np.abs(fval) <= atol
            pos = fval > 0
            hi[idx[pos]] = tt[pos]
            lo[idx[~pos]] = tt[~pos]
            step = fval / self.speed(tt)
            tn = tt - step
            out = (tn <= lo[idx]) | (tn >= hi[idx])
            tn[out] = 0.5 * (lo[idx][out] + hi[idx][out])
            small = np.abs(tn - tt) <= 4e-16 * np.maximum(np.abs(tt), 1.0)
            t[idx] = np.where(hit, tt, tn)
            active[idx[hit | small]] = False
        return (k * np.pi + t).reshape(shape)


def build_arc_length(norm: Norm2D, grid_size: int = 4096, tol: float = 1e-10) -> ArcLengthTable:
    """Tabulate s(t) on ``grid_size`` cells over [0, 2pi] by adaptive Simpson.

    Per-cell local error tolerance ``tol``; the half-length is L = s(pi).
    """
    if grid_size < 256:
        raise InvalidParameter("grid_size must be >= 256")
    if norm.smoothness is Smoothness.PL:
        raise InvalidParameter("polyhedral norms have no smooth sphere parameterization")
    n = (grid_size + 1) // 2
    t_half = np.linspace(0.0, np.pi, n + 1)

    def speed(t):
        return norm(polar_derivative(norm, t))

    cells = adaptive_simpson(speed, t_half[:-1], t_half[1:], tol=tol)
    s_half = np.concatenate([[0.0], np.cumsum(cells)])
    L = float(s_half[-1])
    corr = cells - gauss_legendre(speed, t_half[:-1], t_half[1:])
    t_grid = np.concatenate([t_half, t_half[1:] + np.pi])
    s_values = np.concatenate([s_half, s_half[1:] + L])
    return ArcLengthTable(
        norm=norm, t_grid=t_grid, s_values=s_values, L=L,
        interpolation=PchipInterpolator(t_grid, s_values),
        _inverse=PchipInterpolator(s_half, t_half),
        _corr=corr,
    )


def invert_arc_length(table: ArcLengthTable, s) -> np.ndarray:
    return table.invert(s)


@dataclass(frozen=True)
class NaturalCurve:
    """Unit-speed parameterization r(s) = p(t(s)) of the sphere, period 2L."""

    norm: Norm2D
    table: ArcLengthTable

    @property
    def L(self) -> float:
        return self.table.L

    def t_of_s(self, s) -> np.ndarray:
        return self.table.invert(s)

    def r(self, s) -> np.ndarray:
        return polar_point(self.norm, self.t_of_s(s))

    def r_prime(self, s) -> np.ndarray:
        return _unit_tangent(self.norm, self.t_of_s(s))

    def frame(self, s) -> tuple[np.ndarray, np.ndarray]:
        """(r(s), r'(s)) with a single inversion."""
        t = self.t_of_s(s)
        return polar_point(self.norm, t), _unit_tangent(self.norm, t)


def _unit_tangent(norm: Norm2D, t) -> np.ndarray:
    dp = polar_derivative(norm, t)
    return dp / norm(dp)[..., None]


def build_natural_curve(norm: Norm2D, grid_size: int = 4096, tol: float = 1e-10) -> NaturalCurve:
    return NaturalCurve(norm, build_arc_length(norm, grid_size, tol))


def natural_point(curve: NaturalCurve, s) -> np.ndarray:
    return curve.r(s)


def natural_derivative(curve: NaturalCurve, s) -> np.ndarray:
    return curve.r_prime(s)


@dataclass(frozen=True)
class PhaseShift:
    """phi(s) in (s, s + 2L) with r(phi(s)) = r'(s), plus the basis angle theta of r'(s)."""

    curve: NaturalCurve

    def __call__(self, s) -> np.ndarray:
        return phase_shift(self.curve, s)

    def with_angle(self, s) -> tuple[np.ndarray, np.ndarray]:
        return _phase_and_angle(self.curve, s)


def _phase_and_angle(curve: NaturalCurve, s) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(s, dtype=float)
    tangent = curve.r_prime(s)
    theta = curve.norm.basis.angle(tangent)
    phi0 = curve.table.arc_length(theta)
    two_l = 2 * curve.L
    phi = phi0 + two_l * (np.floor((s - phi0) / two_l) + 1)
    return phi, theta


def phase_shift(curve: NaturalCurve, s, check: bool = True) -> np.ndarray:
    """The phase shift, solved in angle space: theta = angle of r'(s), phi = s(theta) mod 2L.

    Raises PhaseNotFound when ||r(phi) - r'(s)|| exceeds 1e-8.
    """
    phi, _ = _phase_and_angle(curve, s)
    if check:
        resid = curve.norm(curve.r(phi) - curve.r_prime(s))
        bad = np.flatnonzero(np.atleast_1d(resid) > 1e-8)
        if bad.size:
            s_bad = np.atleast_1d(np.asarray(s, dtype=float))[bad[0]] if np.ndim(s) else float(s)
            raise PhaseNotFound(f"phase shift residual {np.max(resid):.3e} at s={s_bad:.6g}")
    return phi
