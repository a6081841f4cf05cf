"""Intrinsic (eps-chain) distance along sampled arcs of the sphere.

An eps-chain from x to y is a finite sequence of points of the arc, each step
shorter than eps; its length is the sum of the step lengths. On a densely
sampled arc the consecutive chain is the natural candidate, and it is the
exact infimum over chains through the samples as long as eps lies between
the longest consecutive chord and the shortest two-step chord. A graph
search over all eps-admissible steps is provided to check that claim.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import InvalidParameter, ResolutionError
from .norm import Norm2D
from .sphere_param import NaturalCurve

BASE_INTERVALS = 32
MAX_LEVELS = 6
DIJKSTRA_LIMIT = 2000


@dataclass(frozen=True)
class SampledArc:
    points: np.ndarray
    params: np.ndarray
    norm: Norm2D

    def __post_init__(self):
        if self.params.ndim != 1 or self.points.shape != (self.params.size, 2):
            raise InvalidParameter("arc needs n params and n points")
        if self.params.size < 2 or np.any(np.diff(self.params) <= 0):
            raise InvalidParameter("arc params must be strictly increasing")
        if np.any(self.chords() > np.diff(self.params) + 1e-9):
            raise InvalidParameter("a chord exceeds its parameter gap (arc is not non-expanding)")

    def chords(self) -> np.ndarray:
        return self.norm(np.diff(self.points, axis=0))

    def coarsen(self) -> "SampledArc":
        """Every other sample, keeping both ends."""
        idx = np.arange(0, self.params.size, 2)
        if idx[-1] != self.params.size - 1:
            idx = np.append(idx, self.params.size - 1)
        return SampledArc(self.points[idx], self.params[idx], self.norm)


@dataclass(frozen=True)
class IntrinsicResult:
    d_eps: float
    eps: float
    converged: bool
    chord: float


def sample_arc(curve: NaturalCurve, a: float, b: float, n_intervals: int) -> SampledArc:
    s = np.linspace(a, b, n_intervals + 1)
    return SampledArc(curve.r(s), s, curve.norm)


def default_eps(arc: SampledArc) -> float:
    """1.5 times the longest consecutive chord."""
    return 1.5 * float(arc.chords().max())


def _chain(arc: SampledArc, i: int, j: int, eps: float) -> float:
    lo, hi = min(i, j), max(i, j)
    steps = arc.chords()[lo:hi]
    if steps.size and steps.max() >= eps:
        raise ResolutionError(f"consecutive chord {steps.max():.3e} is not below eps={eps:.3e}")
    return float(steps.sum())


def intrinsic_distance(arc: SampledArc, i: int, j: int, eps: float | None = None) -> IntrinsicResult:
    """Length of the consecutive eps-chain between samples i and j.

    ``converged`` compares against the same chain on the half-density arc.
    """
    n = arc.params.size
    if not (0 <= i < n and 0 <= j < n):
        raise InvalidParameter("sample index out of range")
    if eps is None:
        eps = default_eps(arc)
    d = _chain(arc, i, j, eps)
    chord = float(arc.norm(arc.points[j] - arc.points[i]))
    converged = False
    lo, hi = min(i, j), max(i, j)
    if lo % 2 == 0 and (hi % 2 == 0 or hi == n - 1) and n > 2:
        coarse = arc.coarsen()
        ci = lo // 2
        cj = hi // 2 if hi % 2 == 0 else coarse.params.size - 1
        converged = abs(d - float(coarse.chords()[ci:cj].sum())) < 1e-8
    return IntrinsicResult(d, float(eps), converged, chord)


def dijkstra_distance(arc: SampledArc, i: int, j: int, eps: float | None = None) -> float:
    """Shortest eps-chain through the samples by graph search (small arcs only)."""
    n = arc.params.size
    if n > DIJKSTRA_LIMIT:
        raise InvalidParameter(f"graph search is limited to {DIJKSTRA_LIMIT} samples")
    if eps is None:
        eps = default_eps(arc)
    diff = arc.points[:, None, :] - arc.points[None, :, :]
    w = arc.norm(diff)
    mask = (w < eps) & ~np.eye(n, dtype=bool)
    graph = csr_matrix((w[mask], np.nonzero(mask)), shape=(n, n))
    d = dijkstra(graph, directed=False, indices=i)[j]
    if not np.isfinite(d):
        raise ResolutionError(f"no eps-chain joins samples {i} and {j} at eps={eps:.3e}")
    return float(d)


@dataclass(frozen=True)
class IsometryCheck:
    residual: float
    distances: tuple
    intervals: tuple


def verify_natural_isometry(curve: NaturalCurve, a: float, b: float,
                            levels: int = MAX_LEVELS,
                            base_intervals: int = BASE_INTERVALS) -> IsometryCheck:
    """| intrinsic distance between r(a) and r(b) - |b - a| | at the finest level.

    Level k samples the arc with base_intervals * 2**k intervals; chain sums
    are non-decreasing in k.
    """
    if not 0 <= levels <= MAX_LEVELS:
        raise InvalidParameter(f"levels must lie in [0, {MAX_LEVELS}]")
    lo, hi = min(a, b), max(a, b)
    if hi - lo > 2 * curve.L - 1e-6:
        raise InvalidParameter("arc must be proper: |b - a| <= 2L - 1e-6")
    if hi == lo:
        return IsometryCheck(0.0, (0.0,), (0,))
    dists, counts = [], []
    for k in range(levels + 1):
        n = base_intervals * 2**k
        arc = sample_arc(curve, lo, hi, n)
        dists.append(intrinsic_distance(arc, 0, n).d_eps)
        counts.append(n)
    return IsometryCheck(abs(dists[-1] - (hi - lo)), tuple(dists), tuple(counts))
