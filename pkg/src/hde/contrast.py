"""Quasi-likelihood contrasts on partially hidden observations.

For a usable pair i (X_{i-1} > tau', X_i > tau), with s2 = sigma^2(X_{i-1}):

    g-term  = log s2 + (Delta_i X)^2 / (s2 h)
    l-term  = log s2 + (Delta_i X - b(X_{i-1}) h)^2 / (s2 h)

Sums run left to right with compensated summation. Only the censored series
is ever read.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from hde.censor import PartialObservations
from hde.errors import InsufficientDataError, UnsupportedModelError
from hde.model import DiffusionModel, ParamPoint
from hde.quadrature import adaptive_simpson

__all__ = [
    "ContrastValue",
    "kahan_sum",
    "g_contrast",
    "l_contrast",
    "full_g_contrast",
    "full_l_contrast",
    "contrast_profile",
    "limit_surfaces",
    "integration_range",
]


@dataclass(frozen=True)
class ContrastValue:
    value: float
    n_terms: int


@numba.njit(cache=True)
def kahan_sum(a):
    total = 0.0
    comp = 0.0
    for v in a:
        y = v - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def _g_terms(model, x_prev, dx, theta1, h):
    s2 = model.diffusion(x_prev, theta1) ** 2
    return np.log(s2) + dx * dx / (s2 * h)


def _l_terms(model, x_prev, dx, theta1, theta2, h):
    s2 = model.diffusion(x_prev, theta1) ** 2
    r = dx - model.drift(x_prev, theta2) * h
    return np.log(s2) + r * r / (s2 * h)


def _sum(terms) -> ContrastValue:
    if terms.size == 0:
        raise InsufficientDataError("no usable pairs: contrast is empty")
    return ContrastValue(float(kahan_sum(np.ascontiguousarray(terms, dtype=np.float64))),
                         int(terms.size))


def g_contrast(obs: PartialObservations, model: DiffusionModel, theta1: float) -> ContrastValue:
    """Diffusion-parameter contrast g_n(theta1)."""
    x_prev, dx = obs.pair_data
    return _sum(_g_terms(model, x_prev, dx, float(theta1), obs.h_n))


def l_contrast(obs: PartialObservations, model: DiffusionModel, p: ParamPoint) -> ContrastValue:
    """Drift contrast l_n(theta1, theta2)."""
    x_prev, dx = obs.pair_data
    return _sum(_l_terms(model, x_prev, dx, float(p[0]), float(p[1]), obs.h_n))


def full_g_contrast(values, h_n: float, model: DiffusionModel, theta1: float) -> ContrastValue:
    """g_n without indicators, over every consecutive pair of a complete record."""
    v = np.asarray(values, dtype=float)
    return _sum(_g_terms(model, v[:-1], np.diff(v), float(theta1), h_n))


def full_l_contrast(values, h_n: float, model: DiffusionModel, p: ParamPoint) -> ContrastValue:
    v = np.asarray(values, dtype=float)
    return _sum(_l_terms(model, v[:-1], np.diff(v), float(p[0]), float(p[1]), h_n))


def contrast_profile(obs: PartialObservations, model: DiffusionModel, which: str,
                     grid, fixed_theta1: float | None = None) -> np.ndarray:
    """Evaluate g_n (``which="theta1"``) or l_n(fixed_theta1, .) (``"theta2"``) on a grid."""
    grid = np.asarray(grid, dtype=float)
    if which == "theta1":
        return np.array([g_contrast(obs, model, t).value for t in grid])
    if which == "theta2":
        if fixed_theta1 is None:
            raise ValueError("theta2 profile needs fixed_theta1")
        return np.array([l_contrast(obs, model, (fixed_theta1, t)).value for t in grid])
    raise ValueError(f"which must be 'theta1' or 'theta2', got {which!r}")


def integration_range(model: DiffusionModel, theta0: ParamPoint, tau: float,
                      width: float = 50.0) -> tuple[float, float]:
    """Truncated support [max(tau, -width*s), max(tau, -width*s) + width*s]."""
    if model.invariant_density is None or model.scale is None:
        raise UnsupportedModelError(f"model {model.name!r} has no invariant density")
    s = model.scale(tuple(theta0))
    lo = max(float(tau), -width * s)
    if lo == -width * s:
        return lo, width * s
    return lo, lo + width * s


def limit_surfaces(model: DiffusionModel, theta0: ParamPoint, tau: float,
                   theta1_grid, theta2_grid, abstol: float = 1e-10):
    """Limits of (1/n) g_n and of (1/(n h)) (l_n(., theta2) - l_n(., theta2_0)).

    Returns ``(G, L)`` on the two grids::

        G(t1) = int {log s^2(x, t1) + s^2(x, t1_0) / s^2(x, t1)} 1{x > tau} nu(dx)
        L(t2) = int ((b(x, t2) - b(x, t2_0)) / s(x, t1_0))^2 1{x > tau} nu(dx)
    """
    theta0 = ParamPoint(*theta0)
    lo, hi = integration_range(model, theta0, tau)
    t1 = np.asarray(theta1_grid, dtype=float)
    t2 = np.asarray(theta2_grid, dtype=float)
    density = model.invariant_density

    def g_integrand(x):
        nu = density(x, theta0)[:, None]
        s2_true = (model.diffusion(x, theta0.theta1) ** 2)[:, None]
        s2 = model.diffusion(x[:, None], t1[None, :]) ** 2
        return (np.log(s2) + s2_true / s2) * nu

    def l_integrand(x):
        nu = density(x, theta0)[:, None]
        s2_true = (model.diffusion(x, theta0.theta1) ** 2)[:, None]
        db = model.drift(x[:, None], t2[None, :]) - model.drift(x, theta0.theta2)[:, None]
        return db * db / s2_true * nu

    G = adaptive_simpson(g_integrand, lo, hi, abstol)
    L = adaptive_simpson(l_integrand, lo, hi, abstol)
    return np.asarray(G), np.asarray(L)
