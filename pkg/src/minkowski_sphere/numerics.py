"""Small numerical kernels shared by the geometry modules."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import QuadratureFailure

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def adaptive_simpson(f: Callable[[np.ndarray], np.ndarray], a, b,
                     tol: float = 1e-10, max_depth: int = 30) -> np.ndarray:
    """Adaptive Simpson quadrature over many panels at once.

    ``f`` must accept an array. Each panel [a_i, b_i] is bisected until the
    local error estimate |S_left + S_right - S_whole| / 15 is at most the
    panel's share of ``tol`` (halved at every split); accepted panels get the
    usual Richardson correction.

    Returns an array with one integral per panel.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    out = np.zeros(a.shape, dtype=float)
    owner = np.arange(a.size)
    a, b = a.ravel().copy(), b.ravel().copy()
    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)
    ptol = np.full(a.size, float(tol))
    depth = 0
    flat = out.ravel()
    while owner.size:
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6 * (fa + 4 * flm + fm)
        right = (b - m) / 6 * (fm + 4 * frm + fb)
        delta = left + right - whole
        done = np.abs(delta) <= 15 * ptol
        np.add.at(flat, owner[done], left[done] + right[done] + delta[done] / 15)
        keep = ~done
        if not keep.any():
            break
        depth += 1
        if depth > max_depth:
            raise QuadratureFailure(
                f"adaptive Simpson exceeded depth {max_depth} near x={a[keep][0]:.6g}")
        owner = np.concatenate([owner[keep], owner[keep]])
        na = np.concatenate([a[keep], m[keep]])
        nb = np.concatenate([m[keep], b[keep]])
        nfa = np.concatenate([fa[keep], fm[keep]])
        nfm = np.concatenate([flm[keep], frm[keep]])
        nfb = np.concatenate([fm[keep], fb[keep]])
        nwhole = np.concatenate([left[keep], right[keep]])
        ptol = np.concatenate([ptol[keep], ptol[keep]]) / 2
        a, b, fa, fm, fb, whole = na, nb, nfa, nfm, nfb, nwhole
        m = 0.5 * (a + b)
    return out


def gauss_legendre(f: Callable[[np.ndarray], np.ndarray], a, b) -> np.ndarray:
    """Fixed 16-point Gauss-Legendre rule on each [a_i, b_i] (smooth in the endpoints)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    x = (0.5 * (a + b))[..., None] + half[..., None] * GL_NODES
    return half * (f(x) @ GL_WEIGHTS)


def richardson(values: Sequence, ratio: float = 2.0, order: int = 2) -> np.ndarray:
    """One-step Richardson extrapolation of consecutive pairs.

    ``values[k]`` is computed at step h_k = h_0 / ratio**k and its error is
    assumed to lead with h**order. Returns len(values) - 1 extrapolants.
    """
    vals = [np.asarray(v, dtype=float) for v in values]
    if len(vals) < 2:
        raise ValueError("richardson needs at least two values")
    w = float(ratio) ** order
    return np.array([(w * vals[k + 1] - vals[k]) / (w - 1) for k in range(len(vals) - 1)])


def periodic_trapezoid(values, period: float, axis: int = -1) -> np.ndarray:
    """Trapezoid rule on a uniform periodic grid of one period (endpoint excluded)."""
    values = np.asarray(values, dtype=float)
    return values.sum(axis=axis) * period / values.shape[axis]
