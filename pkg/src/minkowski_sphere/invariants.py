"""One-call audit of the sphere inequalities and identities for a given norm.

Each check reports the worst slack on a sample grid; ``ok`` means the
inequality held everywhere within its tolerance.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .curvature import SINGULAR_BAND, _distance_to, build_profile, singular_arcs
from .norm import Norm2D, norm_constants
from .sphere_param import PhaseShift, build_natural_curve, polar_derivative, polar_point


@dataclass(frozen=True)
class InvariantCheck:
    name: str
    worst: float
    tol: float
    ok: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _check(name, excess, tol) -> InvariantCheck:
    """``excess`` > 0 means violated; reported as the max over the grid."""
    worst = float(np.max(excess)) if np.size(excess) else 0.0
    return InvariantCheck(name, worst, tol, bool(worst <= tol))


def check_invariants(norm: Norm2D, grid_size: int = 1024, seed: int = 0) -> list[InvariantCheck]:
    const = norm_constants(norm)
    c, C = const.c, const.C
    rng = np.random.default_rng(seed)
    out = []

    t = 2 * np.pi * np.arange(grid_size) / grid_size
    circle = norm.basis.circle(t)
    vals = norm(circle)
    out.append(_check("c <= ||e(t)|| <= C", np.maximum(c - vals, vals - C), 1e-10))

    p = polar_point(norm, t)
    out.append(_check("||p(t)|| = 1", np.abs(norm(p) - 1), 1e-12))
    out.append(_check("p(t+pi) = -p(t)", norm(polar_point(norm, t + np.pi) + p), 1e-12))
    speed = norm(polar_derivative(norm, t))
    out.append(_check("c/C <= ||p'(t)|| <= 2C^2/c^2",
                      np.maximum(c / C - speed, speed - 2 * C**2 / c**2), 1e-12))

    eps = rng.uniform(0, 1, grid_size)
    eps[:8] = [1.0, 0.5, 0.25, 1e-1, 1e-2, 1e-3, 1e-4, 1e-6]
    chord = norm(polar_point(norm, t + eps) - p)
    out.append(_check("(c/C)|sin eps| <= ||p(t+eps)-p(t)||",
                      (c / C) * np.abs(np.sin(eps)) - chord, 1e-9))
    out.append(_check("||p(t+eps)-p(t)|| <= (4C^2/c^2)|sin(eps/2)|",
                      chord - (4 * C**2 / c**2) * np.abs(np.sin(eps / 2)), 1e-9))

    curve = build_natural_curve(norm)
    L = curve.L
    s = 2 * L * np.arange(grid_size) / grid_size
    r, rp = curve.frame(s)
    out.append(_check("||r'(s)|| = 1", np.abs(norm(rp) - 1), 1e-9))
    out.append(_check("r(s+L) = -r(s)", norm(curve.r(s + L) + r), 1e-9))
    s2 = rng.uniform(0, 2 * L, grid_size)
    out.append(_check("||r(s1)-r(s2)|| <= |s1-s2|", norm(r - curve.r(s2)) - np.abs(s - s2), 1e-9))

    # phi' = ||r''|| is unbounded where rho blows up, so phi is only checked
    # outside the singular bands.
    phase = PhaseShift(curve)
    regular = _distance_to(singular_arcs(curve), s, L) > SINGULAR_BAND
    sr = s[regular]
    phi = phase(sr)
    out.append(_check("r(phi(s)) = r'(s)", norm(curve.r(phi) - rp[regular]), 1e-9))
    out.append(_check("s < phi(s) < s+2L", np.maximum(sr - phi, phi - sr - 2 * L), 0.0))
    out.append(_check("phi non-decreasing", -np.diff(phi), 1e-12))
    out.append(_check("phi(s+L) = phi(s)+L", np.abs(phase(sr + L) - phi - L), 1e-9))

    prof, sup = build_profile(norm, grid_size, curve=curve)
    out.append(_check("rho >= 0", -prof.rho, 1e-9))
    half = grid_size // 2
    full = 2 * L * np.arange(grid_size) / grid_size
    if prof.s_grid.size == grid_size:
        out.append(_check("rho(s+L) = rho(s)", np.abs(prof.rho[half:] - prof.rho[:half]), 1e-8))
        out.append(_check("tau(s+L) = tau(s)", np.abs(prof.tau[half:] - prof.tau[:half]), 1e-8))
    else:
        # Banded grids: compare the points whose antipodal partner survived.
        idx = {round(x / (full[1] - full[0])): k for k, x in enumerate(prof.s_grid)}
        pairs = [(idx[i], idx[i + half]) for i in range(half) if i in idx and i + half in idx]
        a, b = np.array(pairs).T
        out.append(_check("rho(s+L) = rho(s)", np.abs(prof.rho[a] - prof.rho[b]), 1e-8))
        out.append(_check("tau(s+L) = tau(s)", np.abs(prof.tau[a] - prof.tau[b]), 1e-8))
    step = L / half
    first = prof.s_grid < L
    out.append(_check("integral of rho over [0,L] > 0", [-prof.rho[first].sum() * step], 0.0))
    out.append(_check("|integral of tau over [0,L]| <= 1e-6 L",
                      [abs(prof.tau[first].sum() * step) - 1e-6 * L], 0.0))
    out.append(_check("|Tau| <= (C+c)C/c^2 |Rho|",
                      np.abs(sup.Tau) - const.rt_ratio * np.abs(sup.Rho), 1e-9))
    out.append(_check("|Rho| >= c^2/(C^2+Cc+c^2)", const.rho_floor - np.abs(sup.Rho), 1e-9))
    out.append(_check("|tau| <= (C+c)C/c^2 rho",
                      np.abs(prof.tau) - const.rt_ratio * prof.rho, 1e-8))
    return out
