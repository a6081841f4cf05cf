"""Planar norms with a fixed basis.

All vectors are numpy arrays whose last axis has length 2, given in canonical
coordinates. Norm evaluation, gradients and Hessians broadcast over the
leading axes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DegenerateNorm, InvalidParameter, NonConvexProfile

ArrayFn = Callable[[np.ndarray], np.ndarray]

_FD_STEP = 1e-6


class Smoothness(str, Enum):
    C2 = "C2"
    AC1 = "AC1"
    C1 = "C1"
    # polyhedral norms, accepted only by bound-checking utilities
    PL = "PL"


@dataclass(frozen=True)
class Basis2D:
    """A basis (e1, e2) together with its biorthogonal functionals.

    ``dual`` holds e1* and e2* as its rows, so ``dual @ v`` gives the
    coordinates of ``v`` in the basis.
    """

    e1: np.ndarray
    e2: np.ndarray
    dual: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        e1 = np.asarray(self.e1, dtype=float).reshape(2)
        e2 = np.asarray(self.e2, dtype=float).reshape(2)
        m = np.column_stack([e1, e2])
        det = np.linalg.det(m)
        if not np.isfinite(det) or abs(det) < 1e-14 * max(1.0, np.abs(m).max() ** 2):
            raise InvalidParameter(f"basis vectors are linearly dependent: {e1}, {e2}")
        object.__setattr__(self, "e1", e1)
        object.__setattr__(self, "e2", e2)
        object.__setattr__(self, "dual", np.linalg.inv(m))

    @classmethod
    def canonical(cls) -> "Basis2D":
        return cls(np.array([1.0, 0.0]), np.array([0.0, 1.0]))

    @property
    def matrix(self) -> np.ndarray:
        return np.column_stack([self.e1, self.e2])

    def coords(self, v) -> np.ndarray:
        return np.asarray(v, dtype=float) @ self.dual.T

    def circle(self, t) -> np.ndarray:
        """e^{it} = cos(t) e1 + sin(t) e2, broadcast over ``t``."""
        t = np.asarray(t, dtype=float)[..., None]
        return np.cos(t) * self.e1 + np.sin(t) * self.e2

    def circle_prime(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)[..., None]
        return -np.sin(t) * self.e1 + np.cos(t) * self.e2

    def angle(self, v) -> np.ndarray:
        """Polar angle of ``v`` measured in basis coordinates, in [0, 2pi)."""
        x = self.coords(v)
        return np.mod(np.arctan2(x[..., 1], x[..., 0]), 2 * np.pi)


def aux_euclidean_norm(basis: Basis2D, v) -> np.ndarray:
    """The auxiliary Euclidean norm sqrt(e1*(v)^2 + e2*(v)^2)."""
    x = basis.coords(v)
    return np.hypot(x[..., 0], x[..., 1])


@dataclass(frozen=True)
class Norm2D:
    """An immutable planar norm.

    ``singular_directions`` lists directions (as vectors) at which the sphere
    loses regularity (curvature blows up, or has a cusp that finite
    differences cannot resolve); curvature grids keep away from them.
    """

    eval_fn: ArrayFn
    grad_fn: Optional[ArrayFn]
    smoothness: Smoothness
    basis: Basis2D = field(default_factory=Basis2D.canonical)
    hess_fn: Optional[ArrayFn] = None
    name: str = "norm"
    spec: dict = field(default_factory=dict, compare=False)
    singular_directions: tuple = ()

    def __call__(self, v) -> np.ndarray:
        return self.eval_fn(np.asarray(v, dtype=float))

    def grad(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.grad_fn is not None:
            return self.grad_fn(v)
        return _fd_gradient(self.eval_fn, v)

    def hess(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.hess_fn is not None:
            return self.hess_fn(v)
        return _fd_jacobian(self.grad, v)

    def with_basis(self, e1, e2) -> "Norm2D":
        return replace(self, basis=Basis2D(e1, e2))

    def linear_image(self, A) -> "Norm2D":
        """The norm ||y||_Y = ||A^{-1} y|| that makes ``A`` a linear isometry.

        The basis is carried along: (A e1, A e2).
        """
        A = np.asarray(A, dtype=float).reshape(2, 2)
        if abs(np.linalg.det(A)) < 1e-12:
            raise InvalidParameter("linear map is singular")
        Ainv = np.linalg.inv(A)
        f, g, h = self.eval_fn, self.grad, self.hess

        def eval_fn(y):
            return f(y @ Ainv.T)

        def grad_fn(y):
            return g(y @ Ainv.T) @ Ainv

        def hess_fn(y):
            return Ainv.T @ h(y @ Ainv.T) @ Ainv

        return Norm2D(
            eval_fn=eval_fn,
            grad_fn=grad_fn,
            smoothness=self.smoothness,
            basis=Basis2D(A @ self.basis.e1, A @ self.basis.e2),
            hess_fn=hess_fn,
            name=f"{self.name}∘A⁻¹",
            spec={"kind": "linear_image", "base": self.spec, "map": A.tolist()},
            singular_directions=tuple(A @ d for d in self.singular_directions),
        )

    def singular_angles(self) -> np.ndarray:
        """Basis-polar angles of the singular directions, reduced to [0, pi)."""
        if not self.singular_directions:
            return np.empty(0)
        ang = self.basis.angle(np.array(self.singular_directions))
        return np.unique(np.mod(ang, np.pi))


@dataclass(frozen=True)
class NormConstants:
    c: float
    C: float

    def __post_init__(self):
        if not (0 < self.c <= self.C):
            raise DegenerateNorm(f"invalid norm constants c={self.c}, C={self.C}")

    @property
    def rt_ratio(self) -> float:
        """(C + c) C / c^2, the bound on |T|/|P| and |tau|/rho."""
        return (self.C + self.c) * self.C / self.c**2

    @property
    def rho_floor(self) -> float:
        """c^2 / (C^2 + Cc + c^2), the lower bound on |P|."""
        return self.c**2 / (self.C**2 + self.C * self.c + self.c**2)


def _fd_gradient(f: ArrayFn, v: np.ndarray) -> np.ndarray:
    scale = np.maximum(np.linalg.norm(v, axis=-1, keepdims=True), 1.0)
    h = _FD_STEP * scale
    out = np.empty(v.shape, dtype=float)
    for k in range(2):
        d = np.zeros(v.shape)
        d[..., k] = h[..., 0]
        out[..., k] = (f(v + d) - f(v - d)) / (2 * h[..., 0])
    return out


def _fd_jacobian(g: ArrayFn, v: np.ndarray) -> np.ndarray:
    scale = np.maximum(np.linalg.norm(v, axis=-1, keepdims=True), 1.0)
    h = 1e-5 * scale
    out = np.empty(v.shape + (2,), dtype=float)
    for k in range(2):
        d = np.zeros(v.shape)
        d[..., k] = h[..., 0]
        out[..., :, k] = (g(v + d) - g(v - d)) / (2 * h)
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def norm_constants(norm: Norm2D, grid_size: int = 4096) -> NormConstants:
    """c = min and C = max of the norm over the auxiliary unit circle.

    Sampled on a uniform angle grid, then every discrete local extremum is
    polished by golden-section search.
    """
    if grid_size < 64:
        raise InvalidParameter("grid_size must be >= 64")
    t = np.linspace(0.0, 2 * np.pi, grid_size, endpoint=False)
    vals = norm(norm.basis.circle(t))
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise DegenerateNorm("norm vanishes or is not finite on the unit circle")

    def f(x):
        return float(norm(norm.basis.circle(x)))

    step = t[1] - t[0]
    prev, nxt = np.roll(vals, 1), np.roll(vals, -1)
    c, C = float(vals.min()), float(vals.max())
    for i in np.flatnonzero((vals < prev) & (vals <= nxt)):
        c = min(c, _polish(f, t[i], step))
    for i in np.flatnonzero((vals > prev) & (vals >= nxt)):
        C = max(C, -_polish(lambda y: -f(y), t[i], step))
    return NormConstants(c, C)


def _polish(f, x0: float, step: float) -> float:
    try:
        x = optimize.golden(f, brack=(x0 - step, x0, x0 + step), tol=1e-12)
    except ValueError:
        # bracket flat to rounding: the sample is already the extremum
        return f(x0)
    return min(f(x), f(x0))


# --- built-in norms ---------------------------------------------------------

def make_euclidean_norm() -> Norm2D:
    def eval_fn(v):
        return np.hypot(v[..., 0], v[..., 1])

    def grad_fn(v):
        return v / eval_fn(v)[..., None]

    def hess_fn(v):
        n = eval_fn(v)[..., None, None]
        u = v[..., :, None] / n
        return (np.eye(2) - u * np.swapaxes(u, -1, -2)) / n

    return Norm2D(eval_fn, grad_fn, Smoothness.C2, Basis2D.canonical(), hess_fn,
                  name="euclidean", spec={"kind": "euclidean"})


def make_lp_norm(p: float) -> Norm2D:
    """(|x|^p + |y|^p)^(1/p) with analytic gradient and Hessian."""
    p = float(p)
    if not (p > 1) or not math.isfinite(p):
        raise InvalidParameter(f"lp norm needs 1 < p < inf, got {p}")

    def eval_fn(v):
        a = np.abs(v)
        m = a.max(axis=-1)
        safe = np.where(m > 0, m, 1.0)
        q = a / safe[..., None]
        return np.where(m > 0, safe * np.sum(q**p, axis=-1) ** (1 / p), 0.0)

    def grad_fn(v):
        n = eval_fn(v)[..., None]
        return np.sign(v) * (np.abs(v) / n) ** (p - 1)

    def hess_fn(v):
        n = eval_fn(v)
        q = np.abs(v) / n[..., None]
        g = np.sign(v) * q ** (p - 1)
        with np.errstate(divide="ignore"):
            diag = q ** (p - 2)
        H = -g[..., :, None] * g[..., None, :]
        H[..., 0, 0] += diag[..., 0]
        H[..., 1, 1] += diag[..., 1]
        return (p - 1) / n[..., None, None] * H

    # Axes are low-regularity points unless p is an even integer (analytic norm).
    singular = ()
    if not (p == round(p) and round(p) % 2 == 0):
        singular = (np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    return Norm2D(eval_fn, grad_fn, Smoothness.C2 if p >= 2 else Smoothness.AC1,
                  Basis2D.canonical(), hess_fn, name=f"l{p:g}",
                  spec={"kind": "lp", "p": p}, singular_directions=singular)


def make_l1_norm() -> Norm2D:
    """The polyhedral l1 norm; only meaningful for bound-checking utilities."""
    def eval_fn(v):
        return np.abs(v).sum(axis=-1)

    return Norm2D(eval_fn, lambda v: np.sign(v), Smoothness.PL, Basis2D.canonical(),
                  name="l1", spec={"kind": "lp", "p": 1.0})


def make_radial_norm(profile: Callable, smoothness: Smoothness | str = Smoothness.C2,
                     profile_derivative: Optional[Callable] = None,
                     grid_size: int = 4096, name: str = "radial",
                     spec: Optional[dict] = None) -> Norm2D:
    """Norm whose unit ball has boundary radius ``profile(theta)``.

    ``||v|| = |v| / profile(atan2(v_y, v_x))`` in canonical coordinates. The
    basis is the pair of axis vectors rescaled onto the unit sphere. Without
    ``profile_derivative`` the derivative is taken by central differences.

    Raises NonConvexProfile when sampled values are not positive, not
    centrally symmetric, or the sampled boundary polygon turns the wrong way.
    """
    smoothness = Smoothness(smoothness)
    if profile_derivative is None:
        h_fd = 1e-5

        def profile_derivative(th):
            return (8 * (profile(th + h_fd) - profile(th - h_fd))
                    - (profile(th + 2 * h_fd) - profile(th - 2 * h_fd))) / (12 * h_fd)

    _check_radial_profile(profile, grid_size)

    def eval_fn(v):
        r = np.hypot(v[..., 0], v[..., 1])
        th = np.arctan2(v[..., 1], v[..., 0])
        return r / profile(th)

    def grad_fn(v):
        r = np.hypot(v[..., 0], v[..., 1])[..., None]
        th = np.arctan2(v[..., 1], v[..., 0])
        h = np.asarray(profile(th))[..., None]
        dh = np.asarray(profile_derivative(th))[..., None]
        u = v / r
        w = np.stack([-u[..., 1], u[..., 0]], axis=-1)
        return u / h - (dh / h**2) * w

    h0 = float(profile(0.0))
    h1 = float(profile(np.pi / 2))
    return Norm2D(eval_fn, grad_fn, smoothness,
                  Basis2D(np.array([h0, 0.0]), np.array([0.0, h1])),
                  name=name, spec=spec or {"kind": "radial"})


def _check_radial_profile(profile: Callable, grid_size: int) -> None:
    th = np.linspace(0.0, 2 * np.pi, grid_size, endpoint=False)
    h = np.asarray(profile(th), dtype=float)
    if h.shape != th.shape or not np.all(np.isfinite(h)) or np.any(h <= 0):
        raise NonConvexProfile("profile must be finite and positive")
    scale = h.max()
    h_opp = np.asarray(profile(th + np.pi), dtype=float)
    if np.max(np.abs(h_opp - h)) > 1e-9 * scale:
        raise NonConvexProfile("profile is not centrally symmetric: h(θ+π) ≠ h(θ)")
    pts = h[:, None] * np.stack([np.cos(th), np.sin(th)], axis=-1)
    edges = np.roll(pts, -1, axis=0) - pts
    nxt = np.roll(edges, -1, axis=0)
    cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
    if cross.min() < -1e-12 * scale**2:
        i = int(np.argmin(cross))
        raise NonConvexProfile(f"unit ball is not convex near θ={th[(i + 1) % grid_size]:.6f}")


def radial_norm_from_samples(samples: Sequence[Sequence[float]], name: str = "radial") -> Norm2D:
    """Radial norm from (theta_i, h_i) samples, interpolated by a periodic cubic spline.

    Samples may cover [0, 2pi) or only [0, pi); the latter are mirrored.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 8:
        raise ConfigError("radial samples must be a list of at least 8 [theta, h] pairs")
    th = np.mod(arr[:, 0], 2 * np.pi)
    order = np.argsort(th)
    th, h = th[order], arr[order, 1]
    if th[-1] < np.pi:
        th, h = np.concatenate([th, th + np.pi]), np.concatenate([h, h])
    if np.any(np.diff(th) <= 0):
        raise ConfigError("radial sample angles must be distinct")
    spline = CubicSpline(np.append(th, th[0] + 2 * np.pi), np.append(h, h[0]),
                         bc_type="periodic")
    dspline = spline.derivative()

    def profile(x):
        return spline(np.mod(x, 2 * np.pi))

    def dprofile(x):
        return dspline(np.mod(x, 2 * np.pi))

    spec = {"kind": "radial", "samples": arr.tolist(), "interpolation": "cubic"}
    return make_radial_norm(profile, Smoothness.C2, dprofile, name=name, spec=spec)


RADIAL_EXAMPLE_AMPLITUDE = 0.05


def make_radial_example(a: float = RADIAL_EXAMPLE_AMPLITUDE) -> Norm2D:
    """Smooth non-Euclidean test norm ||v|| = |v| (1 + a cos 4 theta).

    The gauge g = 1 + a cos 4 theta gives a convex ball iff g + g'' >= 0,
    i.e. a <= 1/15; the ball is uniformly convex below that.
    """
    if not 0 <= a < 1 / 15:
        raise InvalidParameter("radial example needs 0 <= a < 1/15")

    def profile(th):
        return 1 / (1 + a * np.cos(4 * th))

    def dprofile(th):
        return 4 * a * np.sin(4 * th) / (1 + a * np.cos(4 * th)) ** 2

    return make_radial_norm(profile, Smoothness.C2, dprofile, name="radial-example",
                            spec={"kind": "radial-example", "a": a})


def norm_from_spec(spec) -> Norm2D:
    """Build a norm from a spec string, a path prefixed with ``@``, or a dict.

    String forms: ``euclidean``, ``lp:P``, ``radial-example``. Dict forms: ``{"kind": "euclidean"}``,
    ``{"kind": "lp", "p": P}``, ``{"kind": "radial", "samples": [[θ, h], ...],
    "interpolation": "cubic"}``; any dict may add ``"basis": [[e1], [e2]]``.
    """
    if isinstance(spec, str):
        text = spec.strip()
        if text.startswith("@"):
            try:
                spec = json.loads(Path(text[1:]).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read norm spec file {text[1:]!r}: {exc}") from exc
        elif text.startswith("{"):
            try:
                spec = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"bad inline norm spec: {exc}") from exc
        elif text in ("euclidean", "l2"):
            spec = {"kind": "euclidean"}
        elif text == "radial-example":
            spec = {"kind": "radial-example"}
        elif text.startswith("lp:"):
            try:
                spec = {"kind": "lp", "p": float(text[3:])}
            except ValueError as exc:
                raise ConfigError(f"bad lp exponent in {text!r}") from exc
        else:
            raise ConfigError(f"unknown norm spec {text!r}")
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("norm spec must be an object with a 'kind' field")
    kind = spec["kind"]
    if kind == "euclidean":
        norm = make_euclidean_norm()
    elif kind == "lp":
        if "p" not in spec:
            raise ConfigError("lp norm spec needs field 'p'")
        norm = make_lp_norm(spec["p"])
    elif kind == "radial-example":
        norm = make_radial_example(float(spec.get("a", RADIAL_EXAMPLE_AMPLITUDE)))
    elif kind == "radial":
        if spec.get("interpolation", "cubic") != "cubic":
            raise ConfigError("radial interpolation must be 'cubic'")
        norm = radial_norm_from_samples(spec.get("samples", []))
    else:
        raise ConfigError(f"unknown norm kind {kind!r}")
    if "basis" in spec:
        e1, e2 = np.asarray(spec["basis"], dtype=float)
        norm = norm.with_basis(e1, e2)
        norm = replace(norm, spec=dict(spec))
    return norm
