"""Adaptive Simpson quadrature.

Intervals are refined breadth-first so each sweep evaluates the integrand once
on an array of new nodes. The integrand may return one value per node or a
row of values per node (integrating a family of functions at once); the error
test then uses the largest component.
"""
from __future__ import annotations

import numpy as np

from hde.errors import QuadratureError

__all__ = ["adaptive_simpson"]


def _call(f, x):
    y = np.asarray(f(x), dtype=float)
    if y.shape[:1] != x.shape:
        raise ValueError(f"integrand returned shape {y.shape} for {x.shape[0]} nodes")
    return y


def _simpson(width, fa, fm, fb):
    w = (width / 6.0).reshape((-1,) + (1,) * (fa.ndim - 1))
    return w * (fa + 4.0 * fm + fb)


def adaptive_simpson(f, a: float, b: float, abstol: float = 1e-10,
                     panels: int = 16, max_depth: int = 50):
    """Integrate ``f`` over [a, b] to absolute tolerance ``abstol``.

    Starts from ``panels`` equal panels and bisects any interval whose
    two-half Simpson estimate disagrees with the whole-interval one by more
    than 15 times its share of the tolerance. Accepted intervals get the
    Richardson correction.
    """
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("integration limits must be finite")
    if b == a:
        y = _call(f, np.array([a]))
        return np.zeros(y.shape[1:]) if y.ndim > 1 else 0.0
    if b < a:
        return -adaptive_simpson(f, b, a, abstol, panels, max_depth)

    edges = np.linspace(a, b, panels + 1)
    lo, hi = edges[:-1], edges[1:]
    mid = 0.5 * (lo + hi)
    vals = _call(f, np.concatenate([edges, mid]))
    fa, fb, fm = vals[:panels], vals[1:panels + 1], vals[panels + 1:]
    whole = _simpson(hi - lo, fa, fm, fb)
    tol = np.full(panels, abstol / panels)
    total = np.zeros(vals.shape[1:])

    for _ in range(max_depth):
        m = 0.5 * (lo + hi)
        lm = 0.5 * (lo + m)
        rm = 0.5 * (m + hi)
        k = lo.size
        new = _call(f, np.concatenate([lm, rm]))
        flm, frm = new[:k], new[k:]
        left = _simpson(m - lo, fa, flm, fm)
        right = _simpson(hi - m, fm, frm, fb)
        diff = left + right - whole
        err = np.abs(diff) if diff.ndim == 1 else np.max(np.abs(diff), axis=1)
        ok = err <= 15.0 * tol
        total = total + np.sum((left + right + diff / 15.0)[ok], axis=0)
        if ok.all():
            return float(total) if total.ndim == 0 else total
        bad = ~ok
        lo, m, hi = lo[bad], m[bad], hi[bad]
        fa, fm, fb, flm, frm = fa[bad], fm[bad], fb[bad], flm[bad], frm[bad]
        lo = np.concatenate([lo, m])
        hi = np.concatenate([m, hi])
        fa, fm, fb = (np.concatenate([fa, fm]), np.concatenate([flm, frm]),
                      np.concatenate([fm, fb]))
        whole = np.concatenate([left[bad], right[bad]])
        tol = np.concatenate([tol[bad], tol[bad]]) / 2.0
    raise QuadratureError(f"adaptive Simpson did not converge in {max_depth} levels "
                          f"on [{a}, {b}] at tolerance {abstol}")
