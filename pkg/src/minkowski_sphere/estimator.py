"""Metric-only recovery of rho, psi' and tau from distances on the sphere.

Everything here consumes a :class:`DistanceOracle`, i.e. the function
``(s1, s2) -> ||r(s1) - r(s2)||`` together with the half-length L. The norm
itself is never consulted except by the oracle backends.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicHermiteSpline, CubicSpline, make_interp_spline

from .errors import (ConfigError, DegenerateRho, InvalidParameter, LevelOutOfRange,
                     ScheduleTooCoarse)
from .norm import Norm2D
from .numerics import richardson
from .sphere_param import NaturalCurve

DEFAULT_SCHEDULE = (1e-2, 5e-3, 2.5e-3)
RHO_THRESHOLD = 1e-4
NULL_TOL = 1e-8
# Smallest usable denominator in the I-positive quotient (oracle roundoff is ~1e-15).
NOISE_FLOOR = 1e-11
# Offset of the default sample grid, in cells; irrational so no sample lands on an axis.
GENERIC_OFFSET = (np.sqrt(5) - 1) / 2


# ---------------------------------------------------------------- oracles

class DistanceOracle:
    """Sphere distances by natural parameter; subclasses implement ``points``."""

    L: float

    def points(self, s) -> np.ndarray:
        raise NotImplementedError

    def dist_norm(self, v) -> np.ndarray:
        raise NotImplementedError

    def dist(self, s1, s2) -> np.ndarray:
        return self.dist_norm(self.points(s1) - self.points(s2))

    def __call__(self, s1, s2) -> np.ndarray:
        return self.dist(s1, s2)


class CurveOracle(DistanceOracle):
    """Backed by an in-process natural parameterization."""

    def __init__(self, curve: NaturalCurve):
        self.curve = curve
        self.L = curve.L

    def points(self, s):
        return self.curve.r(s)

    def dist_norm(self, v):
        return self.curve.norm(v)


class SampledOracle(DistanceOracle):
    """Backed by samples (s_i, r(s_i)) covering one period [0, 2L).

    The samples are interpolated by a periodic quintic spline, so distances
    are smooth enough for the eps**3 quotients as long as the sampling is
    dense (a few thousand points per period).
    """

    def __init__(self, s, points, norm: Norm2D, L: float | None = None):
        s = np.asarray(s, dtype=float)
        pts = np.asarray(points, dtype=float)
        if s.ndim != 1 or pts.shape != (s.size, 2):
            raise ConfigError("samples must be n rows of (s, r1, r2)")
        if s.size < 16 or np.any(np.diff(s) <= 0):
            raise ConfigError("sample parameters must be strictly increasing (>= 16 rows)")
        if L is None:
            # Antipodal sample: the first s with r(s) = -r(s[0]) up to interpolation.
            L = _estimate_half_length(s, pts, norm)
        period = 2 * L
        if s[-1] - s[0] >= period:
            raise ConfigError("samples must cover less than one period")
        knots = np.append(s, s[0] + period)
        vals = np.vstack([pts, pts[:1]])
        self._spline = make_interp_spline(knots, vals, k=5, bc_type="periodic")
        self._s0 = s[0]
        self.period = period
        self.L = float(L)
        self.norm = norm

    @classmethod
    def from_csv(cls, path, norm: Norm2D, L: float | None = None) -> "SampledOracle":
        rows = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append([float(x) for x in row[:3]])
                except ValueError:
                    continue  # header line
        arr = np.array(rows)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ConfigError(f"{path}: expected columns s, r1, r2")
        return cls(arr[:, 0], arr[:, 1:], norm, L)

    def points(self, s):
        s = np.asarray(s, dtype=float)
        return self._spline(self._s0 + np.mod(s - self._s0, self.period))

    def dist_norm(self, v):
        return self.norm(v)


def _estimate_half_length(s, pts, norm) -> float:
    resid = norm(pts + pts[0])
    i = int(np.argmin(resid))
    if i == 0 or i == len(s) - 1:
        raise ConfigError("cannot locate the antipode of the first sample; pass L")
    return float(s[i] - s[0])


class ShiftedOracle(DistanceOracle):
    """The oracle reparameterized by s -> s + delta."""

    def __init__(self, base: DistanceOracle, delta: float):
        self.base = base
        self.delta = float(delta)
        self.L = base.L

    def points(self, s):
        return self.base.points(np.asarray(s, dtype=float) + self.delta)

    def dist_norm(self, v):
        return self.base.dist_norm(v)


# ---------------------------------------------------------------- rho

def _check_schedule(schedule: Sequence[float], L: float) -> np.ndarray:
    eps = np.asarray(schedule, dtype=float)
    if eps.ndim != 1 or eps.size < 3:
        raise InvalidParameter("eps schedule needs at least 3 values")
    if np.any(eps <= 0) or np.any(eps > L / 4) or np.any(np.diff(eps) >= 0):
        raise InvalidParameter("eps schedule must be strictly decreasing within (0, L/4]")
    return eps


def _extrapolate(values, ratios, order, rtol, atol, what, s):
    """Richardson over a geometric schedule and an asymptotic-regime check."""
    if not np.allclose(ratios, ratios[0]):
        raise InvalidParameter("eps schedule must be geometric")
    ext = richardson(values, ratio=ratios[0], order=order)
    last = ext[-1]
    spread = np.max(np.abs(ext - last), axis=0)
    bad = spread > rtol * np.abs(last) + atol
    if np.any(bad):
        i = int(np.flatnonzero(np.atleast_1d(bad))[0])
        where = np.atleast_1d(s)[i] if np.ndim(s) else s
        raise ScheduleTooCoarse(
            f"{what}: extrapolants differ by {np.atleast_1d(spread)[i]:.3e} at s={float(where):.6g}")
    return last


def estimate_rho(oracle: DistanceOracle, s, eps_schedule: Sequence[float] = DEFAULT_SCHEDULE,
                 rtol: float = 0.1, atol: float = 1e-2) -> np.ndarray:
    """rho(s) as the limit of (2 - dist(s+eps, s+L-eps)) / eps**2.

    The quotient is even in eps, so the Richardson step assumes an eps**2
    leading error. Tiny negatives in [-1e-8, 0) are clamped to 0.
    """
    eps = _check_schedule(eps_schedule, oracle.L)
    s = np.asarray(s, dtype=float)
    q = [(2 - oracle.dist(s + e, s + oracle.L - e)) / e**2 for e in eps]
    rho = _extrapolate(q, eps[:-1] / eps[1:], 2, rtol, atol, "rho", s)
    return np.where((rho < 0) & (rho >= -1e-8), 0.0, rho)


@dataclass(frozen=True)
class RhoTable:
    """Tabulated rho-hat on a uniform grid over one period, periodic cubic in between."""

    s_grid: np.ndarray
    values: np.ndarray
    period: float
    _spline: CubicSpline = field(repr=False, compare=False)

    @classmethod
    def from_values(cls, s_grid, values, period: float) -> "RhoTable":
        s_grid = np.asarray(s_grid, dtype=float)
        values = np.asarray(values, dtype=float)
        knots = np.append(s_grid, s_grid[0] + period)
        spl = CubicSpline(knots, np.append(values, values[0]), bc_type="periodic")
        return cls(s_grid, values, float(period), spl)

    @classmethod
    def from_function(cls, f: Callable, period: float, n: int = 1024,
                      offset: float = 0.0) -> "RhoTable":
        s = period * (np.arange(n) + offset) / n
        return cls.from_values(s, f(s), period)

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        x = self.s_grid[0] + np.mod(s - self.s_grid[0], self.period)
        return np.maximum(self._spline(x), 0.0)


def build_rho_table(oracle: DistanceOracle, n: int = 1024,
                    eps_schedule: Sequence[float] = DEFAULT_SCHEDULE,
                    offset: float = GENERIC_OFFSET) -> RhoTable:
    """rho-hat from distances on a uniform grid over [0, L) (rho has period L)."""
    s = oracle.L * (np.arange(n) + offset) / n
    return RhoTable.from_values(s, estimate_rho(oracle, s, eps_schedule), oracle.L)


# ---------------------------------------------------------------- helper integrals

@dataclass(frozen=True)
class HelperIntegrals:
    """I, J, II, JJ at base point s, tabulated on [-window, window].

    With rho >= 0, II is increasing for eps > 0 and decreasing for eps < 0
    (it is positive on both sides), and I, J, II, JJ satisfy eps I = II + J.
    """

    s: float
    u: np.ndarray
    I: np.ndarray
    J: np.ndarray
    II: np.ndarray
    JJ: np.ndarray

    def at(self, eps) -> tuple:
        """(I, II, J, JJ) at eps, by cubic Hermite interpolation of the tables."""
        eps = np.asarray(eps, dtype=float)
        if np.any(np.abs(eps) > self.u[-1] * (1 + 1e-12)):
            raise LevelOutOfRange("eps outside the tabulated window")
        rho_u = np.gradient(self.I, self.u)
        I = CubicHermiteSpline(self.u, self.I, rho_u)(eps)
        II = CubicHermiteSpline(self.u, self.II, self.I)(eps)
        J = CubicHermiteSpline(self.u, self.J, rho_u * self.u)(eps)
        JJ = CubicHermiteSpline(self.u, self.JJ, self.J)(eps)
        return I, II, J, JJ


def tabulate_helpers(rho: Callable, s: float, window: float, m: int = 2001) -> HelperIntegrals:
    """Nested trapezoid integrals of rho(s + u) on a symmetric window."""
    if window <= 0:
        raise InvalidParameter("window must be positive")
    half = np.linspace(0.0, window, m)
    out = []
    for u in (-half, half):
        f = rho(s + u)
        I = cumulative_trapezoid(f, u, initial=0.0)
        J = cumulative_trapezoid(f * u, u, initial=0.0)
        out.append((u, I, J, cumulative_trapezoid(I, u, initial=0.0),
                    cumulative_trapezoid(J, u, initial=0.0)))
    (un, In, Jn, IIn, JJn), (up, Ip, Jp, IIp, JJp) = out

    def join(neg, pos):
        return np.concatenate([neg[:0:-1], pos])

    return HelperIntegrals(float(s), join(un, up), join(In, Ip), join(Jn, Jp),
                           join(IIn, IIp), join(JJn, JJp))


def helper_integrals(rho: Callable, s: float, eps: float, m: int = 2001) -> tuple:
    """(I, II, J, JJ) at (s, eps); eps may be negative."""
    if eps == 0:
        return 0.0, 0.0, 0.0, 0.0
    u = np.linspace(0.0, eps, m)
    f = rho(s + u)
    I = cumulative_trapezoid(f, u, initial=0.0)
    J = cumulative_trapezoid(f * u, u, initial=0.0)
    II = np.trapezoid(I, u)
    JJ = np.trapezoid(J, u)
    return float(I[-1]), float(II), float(J[-1]), float(JJ)


# ---------------------------------------------------------------- classification

class PointClass(enum.Enum):
    RHO_POSITIVE = "rho_positive"
    I_NULL = "i_null"
    I_POSITIVE = "i_positive"


@dataclass(frozen=True)
class Classification:
    kind: PointClass
    rho: float
    I_plus: float
    I_minus: float


def classify_point(rho: Callable, s: float, probe_eps: float = 1e-2,
                   null_tol: float = NULL_TOL,
                   rho_threshold: float = RHO_THRESHOLD) -> Classification:
    if probe_eps <= 0:
        raise InvalidParameter("probe_eps must be positive")
    r0 = float(rho(np.asarray(s, dtype=float)))
    u = np.linspace(0.0, probe_eps, 513)
    i_plus = float(np.trapezoid(rho(s + u), u))
    i_minus = float(np.trapezoid(rho(s - u), u))
    if r0 > rho_threshold:
        kind = PointClass.RHO_POSITIVE
    elif max(i_plus, i_minus) < null_tol:
        kind = PointClass.I_NULL
    else:
        kind = PointClass.I_POSITIVE
    return Classification(kind, r0, i_plus, i_minus)


def invert_II(helpers: HelperIntegrals, level: float, tol: float = 1e-12) -> tuple[float, float]:
    """(eps_minus < 0 < eps_plus) with II(eps_minus) = II(eps_plus) = level, by bisection."""
    if not level > 0:
        raise LevelOutOfRange("level must be positive")
    mid = helpers.u.size // 2
    if level > min(helpers.II[0], helpers.II[-1]):
        raise LevelOutOfRange(f"level {level:.3e} exceeds II on the tabulated window")
    II = CubicHermiteSpline(helpers.u, helpers.II, helpers.I)

    def solve(lo, hi, sign):
        # II is monotone in |eps|; lo is the inner end, hi the outer end.
        for _ in range(200):
            m = 0.5 * (lo + hi)
            if abs(hi - lo) <= tol:
                break
            if II(m) < level:
                lo = m
            else:
                hi = m
        return 0.5 * (lo + hi)

    return solve(0.0, helpers.u[0], -1), solve(0.0, helpers.u[-1], 1)


# ---------------------------------------------------------------- psi' and tau

def estimate_psi_prime(oracle: DistanceOracle, rho: Callable, s: float,
                       eps_schedule: Sequence[float] = DEFAULT_SCHEDULE,
                       corrected: bool = True, rtol: float = 0.1, atol: float = 1e-2,
                       classification: Classification | None = None,
                       noise_floor: float = NOISE_FLOOR) -> float:
    """psi'(s) from distances, branching on the point class.

    rho > 0:     1 + 3 lim (dist(s+eps, s-eps) - 2 eps) / (rho(s) eps**3).
    I-null:      exactly 1.
    I-positive:  1 + lim (dist(s+e+, s+e-) - (e+ - e-)) / (JJ(e+) - JJ(e-)),
                 where II(e+) = II(e-) shrinks to 0; the schedule is
                 enlarged when the denominators fall below ``noise_floor``.

    ``corrected=False`` drops the factor 3 in the first branch; the circle then
    yields psi' = 2/3 instead of 0, which is how the factor is pinned.
    """
    eps = _check_schedule(eps_schedule, oracle.L)
    cls = classification or classify_point(rho, s, eps[0])
    if cls.kind is PointClass.I_NULL:
        return 1.0
    if cls.kind is PointClass.RHO_POSITIVE:
        r0 = estimate_rho(oracle, s, eps) if cls.rho <= 0 else cls.rho
        q = [(oracle.dist(s + e, s - e) - 2 * e) / (r0 * e**3) for e in eps]
        lim = _extrapolate(q, eps[:-1] / eps[1:], 2, rtol, atol, "psi'", s)
        return float(1 + (3 if corrected else 1) * lim)
    # Levels are II at the schedule on the positive side. Where rho is tiny the
    # denominators JJ(e+) - JJ(e-) sink to the oracle's roundoff, so the whole
    # schedule is scaled up (geometry preserved) until they clear noise_floor.
    scale = 1.0
    while True:
        sched = eps * scale
        window = 2 * sched[0]
        helpers = tabulate_helpers(rho, s, window)
        levels = helpers.at(sched)[1]
        while helpers.II[0] < levels[0] and window < oracle.L / 4:
            window = min(2 * window, oracle.L / 4)
            helpers = tabulate_helpers(rho, s, window)
        pairs = [invert_II(helpers, level) for level in levels]
        em, ep = pairs[-1]
        jj = helpers.at(np.array([ep, em]))[3]
        if jj[0] - jj[1] >= noise_floor or 2 * sched[0] > oracle.L / 8:
            break
        scale *= 2
    q = []
    for em, ep in pairs:
        jj = helpers.at(np.array([ep, em]))[3]
        q.append((oracle.dist(s + ep, s + em) - (ep - em)) / (jj[0] - jj[1]))
    lim = _extrapolate(q, eps[:-1] / eps[1:], 1, rtol, atol, "psi'", s)
    return float(1 + lim)


def estimate_tau(rho_values, psi_prime_values, s_grid, L: float) -> tuple[np.ndarray, np.ndarray]:
    """(psi-hat, tau-hat) on a uniform grid over one period of length L.

    psi is psi' integrated from the first grid point, then shifted by the
    constant that makes the rho-weighted mean of psi vanish; that is the
    same normalization as fixing psi(0) through the double integral of
    rho(u) psi'(v), and it is what makes tau = rho psi integrate to zero.
    """
    rho_values = np.asarray(rho_values, dtype=float)
    pp = np.asarray(psi_prime_values, dtype=float)
    n = rho_values.size
    h = L / n
    total_rho = rho_values.sum() * h
    if not total_rho > 1e-10:
        raise DegenerateRho(f"integral of rho-hat over one period is {total_rho:.3e}")
    psi_tilde = cumulative_trapezoid(pp, dx=h, initial=0.0)
    psi0 = -np.sum(rho_values * psi_tilde) * h / total_rho
    psi = psi0 + psi_tilde
    return psi, rho_values * psi


@dataclass
class EstimateResult:
    s_grid: np.ndarray
    rho_hat: np.ndarray
    classes: list
    psi_prime_hat: np.ndarray
    psi_hat: np.ndarray
    tau_hat: np.ndarray
    L: float
    rho_table: RhoTable = field(repr=False)

    @property
    def psi_closure(self) -> float:
        """Integral of psi' over one period; zero for a genuine sphere."""
        return float(self.psi_prime_hat.sum() * self.L / self.s_grid.size)


def recover_curvatures(oracle: DistanceOracle, n: int = 256,
                       eps_schedule: Sequence[float] = DEFAULT_SCHEDULE,
                       table_size: int = 1024, offset: float = GENERIC_OFFSET,
                       corrected: bool = True) -> EstimateResult:
    """rho-hat, psi'-hat and tau-hat on ``n`` generic points of [0, L)."""
    eps = _check_schedule(eps_schedule, oracle.L)
    table = build_rho_table(oracle, table_size, eps)
    s = oracle.L * (np.arange(n) + offset) / n
    rho_hat = estimate_rho(oracle, s, eps)
    classes, pp = [], np.empty(n)
    for i, si in enumerate(s):
        cls = classify_point(table, si, eps[0])
        if cls.kind is PointClass.RHO_POSITIVE:
            cls = Classification(cls.kind, float(rho_hat[i]), cls.I_plus, cls.I_minus)
        classes.append(cls.kind)
        pp[i] = estimate_psi_prime(oracle, table, si, eps, corrected, classification=cls)
    psi, tau = estimate_tau(rho_hat, pp, s, oracle.L)
    return EstimateResult(s, rho_hat, classes, pp, psi, tau, oracle.L, table)
