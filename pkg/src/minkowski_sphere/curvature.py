"""Radial/tangential curvatures and supercurvatures of a natural parameterization.

Curvatures solve  r'' = -rho * r + tau * r'  and supercurvatures solve
r'(phi(s)) = -Rho * r + Tau * r'  in the moving frame (r, r'). Both 2x2
systems are solved by Cramer's rule in biorthogonal coordinates.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter, SingularFrame
from .norm import Norm2D, NormConstants, norm_constants
from .sphere_param import (NaturalCurve, PhaseShift, _unit_tangent, build_natural_curve,
                           polar_derivative, polar_second_derivative)

log = logging.getLogger(__name__)

DEFAULT_FD_STEP = 2.5e-3
SINGULAR_BAND = 1e-3


@dataclass
class CurvatureProfile:
    s_grid: np.ndarray
    rho: np.ndarray
    tau: np.ndarray
    L: float
    excluded: list = field(default_factory=list)
    violations: list = field(default_factory=list)


@dataclass
class SuperCurvature:
    s_grid: np.ndarray
    Rho: np.ndarray
    Tau: np.ndarray
    psi: np.ndarray
    phi: np.ndarray
    constants: NormConstants
    period: float
    violations: list = field(default_factory=list)


def singular_arcs(curve: NaturalCurve) -> np.ndarray:
    """Arc-length positions in [0, L) of the norm's singular directions."""
    ang = curve.norm.singular_angles()
    if ang.size == 0:
        return ang
    return np.mod(curve.table.arc_length(ang), curve.L)


def _distance_to(points: np.ndarray, s: np.ndarray, period: float) -> np.ndarray:
    if points.size == 0:
        return np.full(np.shape(s), np.inf)
    d = np.abs(np.mod(np.asarray(s)[..., None] - points + period / 2, period) - period / 2)
    return d.min(axis=-1)


def second_derivative(curve: NaturalCurve, s, h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """r''(s) by central second differences at h and h/2, Richardson-combined.

    Near singular directions the step shrinks so the stencil never straddles one.
    """
    if not (1e-7 <= h <= 1e-2):
        raise InvalidParameter("finite-difference step must lie in [1e-7, 1e-2]")
    s = np.asarray(s, dtype=float)
    dist = _distance_to(singular_arcs(curve), s, curve.L)
    hh = np.maximum(np.minimum(h, dist / 2.5), 1e-7)[..., None]
    r0 = curve.r(s)

    def d2(step):
        return (curve.r(s + step[..., 0]) - 2 * r0 + curve.r(s - step[..., 0])) / step**2

    return (4 * d2(hh / 2) - d2(hh)) / 3


def second_derivative_chain(curve: NaturalCurve, s) -> np.ndarray:
    """r''(s) by the chain rule through t(s), from p', p'' and the norm's gradient.

    Independent of the finite-difference route; used as a cross-check on C2 norms.
    """
    norm = curve.norm
    t = curve.t_of_s(s)
    dp = polar_derivative(norm, t)
    d2p = polar_second_derivative(norm, t)
    n = norm(dp)[..., None]
    g = norm.grad(dp)
    return d2p / n**2 - dp * np.sum(g * d2p, axis=-1)[..., None] / n**3


def _frame_solve(basis, r, rp, w):
    """Coefficients (a, b) with w = -a r + b r', in biorthogonal coordinates."""
    x, xp, xw = basis.coords(r), basis.coords(rp), basis.coords(w)
    den = x[..., 0] * xp[..., 1] - x[..., 1] * xp[..., 0]
    if np.any(np.abs(den) < 1e-12):
        raise SingularFrame(f"|det(r, r')| = {np.min(np.abs(den)):.3e} < 1e-12")
    a = (xw[..., 1] * xp[..., 0] - xw[..., 0] * xp[..., 1]) / den
    b = (xw[..., 1] * x[..., 0] - xw[..., 0] * x[..., 1]) / den
    return a, b


def curvatures_at(curve: NaturalCurve, s, h: float = DEFAULT_FD_STEP,
                  method: str = "fd") -> tuple[np.ndarray, np.ndarray]:
    """(rho, tau) at ``s``; ``method`` is ``"fd"`` (default) or ``"chain"``."""
    r, rp = curve.frame(s)
    if method == "fd":
        r2 = second_derivative(curve, s, h)
    elif method == "chain":
        r2 = second_derivative_chain(curve, s)
    else:
        raise InvalidParameter(f"unknown method {method!r}")
    return _frame_solve(curve.norm.basis, r, rp, r2)


def supercurvatures_at(curve: NaturalCurve, phase: PhaseShift, s) -> tuple[np.ndarray, np.ndarray]:
    """(Rho, Tau) at ``s``. r'(phi(s)) is read off at the basis angle of r'(s)."""
    r, rp = curve.frame(s)
    _, theta = phase.with_angle(s)
    w = _unit_tangent(curve.norm, theta)
    return _frame_solve(curve.norm.basis, r, rp, w)


def quotient_curvature(sup: SuperCurvature, s=None) -> np.ndarray:
    """psi = Tau / Rho on the profile grid, or interpolated (periodically) at ``s``."""
    floor = sup.constants.rho_floor - 1e-9
    if np.any(np.abs(sup.Rho) < floor):
        raise SingularFrame("|Rho| fell below its lower bound c^2/(C^2+Cc+c^2)")
    psi = sup.Tau / sup.Rho
    if s is None:
        return psi
    return np.interp(np.mod(s, sup.period), sup.s_grid, psi, period=sup.period)


def build_profile(norm: Norm2D, grid_size: int = 4096, table_size: int = 4096,
                  h: float = DEFAULT_FD_STEP,
                  curve: NaturalCurve | None = None) -> tuple[CurvatureProfile, SuperCurvature]:
    """Tabulate rho, tau, Rho, Tau, psi, phi on a uniform grid over [0, 2L).

    Grid points within SINGULAR_BAND of a singular direction are dropped.
    Invariant violations are logged and listed on the returned objects.
    """
    if grid_size < 256:
        raise InvalidParameter("grid_size must be >= 256")
    if curve is None:
        curve = build_natural_curve(norm, max(table_size, 256))
    L = curve.L
    n = grid_size + (grid_size % 2)
    s_full = 2 * L * np.arange(n) / n
    keep = _distance_to(singular_arcs(curve), s_full, L) > SINGULAR_BAND
    s = s_full[keep]
    rho, tau = curvatures_at(curve, s, h)
    phase = PhaseShift(curve)
    phi = phase(s)
    Rho, Tau = supercurvatures_at(curve, phase, s)
    const = norm_constants(norm)

    excluded = [(float(p - SINGULAR_BAND), float(p + SINGULAR_BAND))
                for p in np.concatenate([singular_arcs(curve), singular_arcs(curve) + L])]
    prof = CurvatureProfile(s, rho, tau, L, excluded)
    sup = SuperCurvature(s, Rho, Tau, Tau / Rho, phi, const, 2 * L)
    _check(prof, sup, keep)
    for msg in prof.violations + sup.violations:
        log.warning("%s: %s", norm.name, msg)
    return prof, sup


def _check(prof: CurvatureProfile, sup: SuperCurvature, keep: np.ndarray) -> None:
    L = prof.L
    if prof.rho.min() < -1e-9:
        prof.violations.append(f"rho negative: min {prof.rho.min():.3e}")
    n = keep.size
    half = n // 2
    pair = keep[:half] & keep[half:]
    idx = np.cumsum(keep) - 1
    a, b = idx[:half][pair], idx[half:][pair]
    for name, arr in (("rho", prof.rho), ("tau", prof.tau)):
        gap = np.max(np.abs(arr[a] - arr[b])) if a.size else 0.0
        if gap > 1e-8:
            prof.violations.append(f"{name}(s+L) != {name}(s): max gap {gap:.3e}")
    # Excluded bands are symmetric about the singular points and contribute zero weight.
    first = idx[:half][keep[:half]]
    int_rho = float(prof.rho[first].sum() * L / half)
    int_tau = float(prof.tau[first].sum() * L / half)
    if not int_rho > 0:
        prof.violations.append(f"integral of rho over [0, L] is {int_rho:.3e}")
    if abs(int_tau) > 1e-6 * L:
        prof.violations.append(f"integral of tau over [0, L] is {int_tau:.3e}")
    c = sup.constants
    if np.any(np.abs(sup.Tau) > c.rt_ratio * np.abs(sup.Rho) + 1e-9):
        sup.violations.append("|Tau| exceeds (C+c)C/c^2 |Rho|")
    if np.any(np.abs(sup.Rho) < c.rho_floor - 1e-9):
        sup.violations.append("|Rho| below c^2/(C^2+Cc+c^2)")
