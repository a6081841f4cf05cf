"""Rebuilding a sphere from its curvatures, and the sphere-to-linear isometry test.

The sphere satisfies the linear system  r'' = -rho r + tau r'. Given (rho, tau)
and an initial frame (r(0), r'(0)), fixed-step RK4 recovers r. Two spheres with
the same curvature profile are images of each other under the linear map that
matches their frames at s = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .curvature import CurvatureProfile, build_profile
from .errors import BlowUp, CurvatureMismatch, InvalidParameter, SingularFrame
from .norm import Norm2D
from .sphere_param import NaturalCurve, build_natural_curve

BLOWUP_RADIUS = 10.0


@dataclass(frozen=True)
class GridFunction:
    """A periodic coefficient tabulated on a grid.

    ``kind`` is ``"spline"`` (periodic cubic, default) or ``"pchip"`` (monotone
    cubic, only C1 and one order less accurate on smooth data).
    """

    s_grid: np.ndarray
    values: np.ndarray
    period: float
    kind: str = "spline"
    _interp: Callable = field(repr=False, compare=False, default=None)

    @classmethod
    def build(cls, s_grid, values, period: float, kind: str = "spline") -> "GridFunction":
        s_grid = np.asarray(s_grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if s_grid.ndim != 1 or s_grid.shape != values.shape or s_grid.size < 4:
            raise InvalidParameter("grid function needs matching 1-D s and value arrays")
        x0 = s_grid[0]
        x = np.mod(s_grid - x0, period) + x0
        order = np.argsort(x)
        x, v = x[order], values[order]
        knots = np.append(x, x0 + period)
        vals = np.append(v, v[0])
        if kind == "spline":
            f = CubicSpline(knots, vals, bc_type="periodic")
        elif kind == "pchip":
            # Three periods so the end slopes see their periodic neighbours.
            k3 = np.concatenate([x - period, x, x + period])
            f = PchipInterpolator(k3, np.tile(v, 3))
        else:
            raise InvalidParameter(f"unknown interpolation {kind!r}")
        return cls(x, v, float(period), kind, f)

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        x0 = self.s_grid[0]
        return self._interp(np.mod(s - x0, self.period) + x0)


def profile_coefficients(profile: CurvatureProfile, kind: str = "spline") -> tuple[GridFunction, GridFunction]:
    """(rho, tau) of a profile as L-periodic grid functions, using the first half-period."""
    half = profile.s_grid < profile.L
    s = profile.s_grid[half]
    return (GridFunction.build(s, profile.rho[half], profile.L, kind),
            GridFunction.build(s, profile.tau[half], profile.L, kind))


@dataclass(frozen=True)
class OdeState:
    s: float
    r: np.ndarray
    r_prime: np.ndarray


@dataclass
class ReconstructedCurve:
    s_grid: np.ndarray
    r: np.ndarray
    r_prime: np.ndarray
    antipodal_residual: float
    periodic_residual: float
    step: float
    L: float | None = None

    def state(self, k: int) -> OdeState:
        return OdeState(float(self.s_grid[k]), self.r[k], self.r_prime[k])


def _as_callable(f) -> Callable:
    if callable(f):
        return f
    val = float(f)
    return lambda s: np.full(np.shape(s), val)


def integrate_sphere(rho, tau, r0, r0p, s_max: float, step: float | None = None,
                     L: float | None = None, norm: Norm2D | None = None) -> ReconstructedCurve:
    """Classical RK4 for (r, r')' = (r', -rho r + tau r') on [0, s_max].

    ``rho`` and ``tau`` are callables (e.g. :class:`GridFunction`) or constants.
    The step is adjusted down so that L is a whole number of steps, which puts
    s and s + L on the same grid for the closure residuals; the default step is
    1e-4 L. Residuals are measured in ``norm`` (Euclidean if omitted) and are
    NaN when [0, s_max] is too short to contain the compared pairs.
    """
    r0 = np.asarray(r0, dtype=float)
    r0p = np.asarray(r0p, dtype=float)
    if abs(r0[0] * r0p[1] - r0[1] * r0p[0]) < 1e-12:
        raise SingularFrame("initial frame (r0, r0') is degenerate")
    if L is None:
        L = getattr(rho, "period", None)
    if not s_max > 0:
        raise InvalidParameter("s_max must be positive")
    if step is None:
        if L is None:
            raise InvalidParameter("step is required when L is unknown")
        step = 1e-4 * L
    if not step > 0:
        raise InvalidParameter("step must be positive")
    if L is not None:
        step = L / max(1, round(L / step))
    n = int(np.ceil(s_max / step - 1e-9))
    rho_f, tau_f = _as_callable(rho), _as_callable(tau)

    s = step * np.arange(n + 1)
    mid = s[:-1] + step / 2
    a_node, b_node = rho_f(s), tau_f(s)
    a_mid, b_mid = rho_f(mid), tau_f(mid)

    R = np.empty((n + 1, 2))
    P = np.empty((n + 1, 2))
    r, p = r0.copy(), r0p.copy()
    R[0], P[0] = r, p
    h = step
    for k in range(n):
        a0, b0, am, bm, a1, b1 = a_node[k], b_node[k], a_mid[k], b_mid[k], a_node[k + 1], b_node[k + 1]
        k1r, k1p = p, -a0 * r + b0 * p
        r2, p2 = r + 0.5 * h * k1r, p + 0.5 * h * k1p
        k2r, k2p = p2, -am * r2 + bm * p2
        r3, p3 = r + 0.5 * h * k2r, p + 0.5 * h * k2p
        k3r, k3p = p3, -am * r3 + bm * p3
        r4, p4 = r + h * k3r, p + h * k3p
        k4r, k4p = p4, -a1 * r4 + b1 * p4
        r = r + h / 6 * (k1r + 2 * k2r + 2 * k3r + k4r)
        p = p + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        if not (abs(r[0]) + abs(r[1]) <= 2 * BLOWUP_RADIUS and np.hypot(*r) <= BLOWUP_RADIUS):
            raise BlowUp(f"|r| exceeded {BLOWUP_RADIUS} at s={s[k + 1]:.6g}")
        R[k + 1], P[k + 1] = r, p

    measure = norm if norm is not None else (lambda v: np.hypot(v[..., 0], v[..., 1]))
    anti = per = float("nan")
    if L is not None:
        m = int(round(L / step))
        if n >= m:
            anti = float(np.max(measure(R[m:] + R[: n + 1 - m])))
        if n >= 2 * m:
            per = float(np.max(measure(R[2 * m:] - R[: n + 1 - 2 * m])))
    return ReconstructedCurve(s, R, P, anti, per, step, L)


def round_trip_error(curve: NaturalCurve, rec: ReconstructedCurve) -> float:
    """Max over the reconstruction grid of ||r_rec(s) - r(s)|| in the curve's norm."""
    return float(np.max(curve.norm(rec.r - curve.r(rec.s_grid))))


# ---------------------------------------------------------------- isometries

def build_isometry(frame_X, frame_Y) -> np.ndarray:
    """The linear F with F x_i = y_i for the two frame vectors."""
    X = np.column_stack([np.asarray(v, dtype=float) for v in frame_X])
    Y = np.column_stack([np.asarray(v, dtype=float) for v in frame_Y])
    for name, M in (("frame_X", X), ("frame_Y", Y)):
        if abs(np.linalg.det(M)) < 1e-12:
            raise SingularFrame(f"{name} is not linearly independent")
    return np.linalg.solve(X.T, Y.T).T


@dataclass
class IsometryReport:
    F: np.ndarray
    det: float
    max_sphere_residual: float
    frame_residual: float
    rho_gap: float
    tau_gap: float
    L_X: float
    L_Y: float
    reference_map: np.ndarray | None = None
    reference_deviation: float | None = None

    def to_dict(self) -> dict:
        out = {
            "F": self.F.tolist(),
            "det": self.det,
            "max_sphere_residual": self.max_sphere_residual,
            "frame_residual": self.frame_residual,
            "curvature_mismatch": {"rho": self.rho_gap, "tau": self.tau_gap},
            "L_X": self.L_X,
            "L_Y": self.L_Y,
        }
        if self.reference_map is not None:
            out["reference_map"] = self.reference_map.tolist()
            out["reference_deviation"] = self.reference_deviation
        return out


def _profile_gap(prof_X: CurvatureProfile, prof_Y: CurvatureProfile) -> tuple[float, float]:
    """Max |rho_X - rho_Y| and |tau_X - tau_Y| on X's grid, Y interpolated periodically."""
    period = 2 * prof_Y.L
    rho_Y = np.interp(prof_X.s_grid, prof_Y.s_grid, prof_Y.rho, period=period)
    tau_Y = np.interp(prof_X.s_grid, prof_Y.s_grid, prof_Y.tau, period=period)
    return float(np.max(np.abs(prof_X.rho - rho_Y))), float(np.max(np.abs(prof_X.tau - tau_Y)))


def tingley_check(norm_X: Norm2D, norm_Y: Norm2D, e1_Y, e2_Y, grid_size: int = 1024,
                  residual_grid: int = 2048, rho_tol: float = 1e-2, tau_tol: float = 5e-2,
                  reference_map=None, table_size: int = 4096) -> IsometryReport:
    """Extend the sphere isometry e_i -> e_i_Y to a linear map and measure it.

    X is parameterized from its own basis, Y from (e1_Y, e2_Y); both polar
    parameterizations run from the first basis vector towards the second, so
    the orientation of the correspondence is fixed by the frames themselves.
    Raises CurvatureMismatch when half-lengths or curvature profiles disagree.
    """
    e1_Y = np.asarray(e1_Y, dtype=float)
    e2_Y = np.asarray(e2_Y, dtype=float)
    for name, v in (("e1_Y", e1_Y), ("e2_Y", e2_Y)):
        if abs(float(norm_Y(v)) - 1) > 1e-9:
            raise InvalidParameter(f"{name} is not on the unit sphere of Y (norm {float(norm_Y(v)):.12g})")
    if abs(e1_Y[0] * e2_Y[1] - e1_Y[1] * e2_Y[0]) < 1e-12:
        raise SingularFrame("e1_Y and e2_Y are parallel")
    Y = norm_Y.with_basis(e1_Y, e2_Y)
    curve_X = build_natural_curve(norm_X, table_size)
    curve_Y = build_natural_curve(Y, table_size)
    L_X, L_Y = curve_X.L, curve_Y.L
    prof_X, _ = build_profile(norm_X, grid_size, curve=curve_X)
    prof_Y, _ = build_profile(Y, grid_size, curve=curve_Y)
    rho_gap, tau_gap = _profile_gap(prof_X, prof_Y)
    if abs(L_X - L_Y) > 1e-6 * max(L_X, 1.0):
        raise CurvatureMismatch(
            f"half-lengths differ: L_X={L_X:.10g}, L_Y={L_Y:.10g}", rho_gap, tau_gap)
    if rho_gap > rho_tol or tau_gap > tau_tol:
        raise CurvatureMismatch(
            f"curvature profiles differ: max|drho|={rho_gap:.3e}, max|dtau|={tau_gap:.3e}",
            rho_gap, tau_gap)

    F = build_isometry(curve_X.frame(0.0), curve_Y.frame(0.0))
    s = 2 * L_X * np.arange(residual_grid) / residual_grid
    img = curve_X.r(s) @ F.T
    sphere_res = float(np.max(np.abs(Y(img) - 1)))
    frame_res = float(np.max(Y(img - curve_Y.r(s))))
    ref = dev = None
    if reference_map is not None:
        ref = np.asarray(reference_map, dtype=float).reshape(2, 2)
        dev = float(np.max(np.abs(F - ref)))
    return IsometryReport(F, float(np.linalg.det(F)), sphere_res, frame_res,
                          rho_gap, tau_gap, L_X, L_Y, ref, dev)


def random_well_conditioned(rng: np.random.Generator, max_cond: float = 3.0) -> np.ndarray:
    """A random 2x2 matrix with condition number at most ``max_cond``."""
    def rotation(a):
        return np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])

    U = rotation(rng.uniform(0, 2 * np.pi))
    V = rotation(rng.uniform(0, 2 * np.pi))
    if rng.random() < 0.5:
        V = V @ np.diag([1.0, -1.0])
    top = rng.uniform(0.5, 2.0)
    sigma = np.array([top, top / rng.uniform(1.0, max_cond)])
    return U @ np.diag(sigma) @ V
