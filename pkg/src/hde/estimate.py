"""Two-stage contrast minimization.

theta1 is estimated first from g_n alone; theta2 then minimizes
l_n(theta1_hat, .). Each stage is a bounded scalar problem solved by a grid
scan followed by golden-section search.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.stats import norm

from hde.asymptotics import SINGULAR_TOL, empirical_sigma, plugin_sigma
from hde.censor import PartialObservations
from hde.contrast import full_g_contrast, full_l_contrast, g_contrast, l_contrast
from hde.errors import InsufficientDataError
from hde.model import DiffusionModel, ParamPoint, ParamRectangle

__all__ = [
    "GRID_POINTS",
    "MIN_PAIRS",
    "DEFAULT_TOL",
    "minimize_scalar",
    "StageEstimate",
    "EstimationResult",
    "estimate_theta1",
    "estimate_theta2",
    "two_stage_estimate",
    "classical_two_stage",
]

GRID_POINTS = 65
MIN_PAIRS = 30
DEFAULT_TOL = 1e-8
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def minimize_scalar(f: Callable[[float], float], lo: float, hi: float,
                    tol: float = DEFAULT_TOL) -> tuple[float, int]:
    """Global-ish minimizer of ``f`` on [lo, hi].

    A 65-point grid locates the best cell pair; golden-section search shrinks
    that bracket below ``tol``. Among equal values the smallest abscissa wins,
    so a constant function returns ``lo``. Returns ``(argmin, evaluations)``.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if not tol > 0:
        raise ValueError("tol must be positive")
    evals = 0

    def fx(x):
        nonlocal evals
        evals += 1
        y = float(f(x))
        if not math.isfinite(y):
            raise FloatingPointError(f"objective is {y} at x={x!r}")
        return y

    grid = np.linspace(lo, hi, GRID_POINTS)
    values = [fx(x) for x in grid]
    k = int(np.argmin(values))
    best_x, best_f = float(grid[k]), values[k]

    a = float(grid[max(k - 1, 0)])
    b = float(grid[min(k + 1, GRID_POINTS - 1)])
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fx(c), fx(d)
    while b - a >= tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fx(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fx(d)
    for x, y in ((c, fc), (d, fd)):
        if y < best_f or (y == best_f and x < best_x):
            best_x, best_f = x, y
    return best_x, evals


class StageEstimate(NamedTuple):
    value: float
    at_boundary: bool
    evals: int


def _check_pairs(n_pairs, min_pairs):
    if n_pairs < min_pairs:
        raise InsufficientDataError(
            f"only {n_pairs} usable pairs; at least {min_pairs} required")


def _stage(f, lo, hi, tol) -> StageEstimate:
    x, evals = minimize_scalar(f, lo, hi, tol)
    x = min(max(x, lo), hi)
    return StageEstimate(x, bool(x - lo <= tol or hi - x <= tol), evals)


def estimate_theta1(obs: PartialObservations, model: DiffusionModel,
                    rect: ParamRectangle = ParamRectangle(), tol: float = DEFAULT_TOL,
                    min_pairs: int = MIN_PAIRS) -> StageEstimate:
    """Minimize g_n over [theta1_min, theta1_max]. The drift is never evaluated."""
    _check_pairs(obs.pair_index.size, min_pairs)
    return _stage(lambda t: g_contrast(obs, model, t).value,
                  rect.theta1_min, rect.theta1_max, tol)


def estimate_theta2(obs: PartialObservations, model: DiffusionModel, theta1_hat: float,
                    rect: ParamRectangle = ParamRectangle(), tol: float = DEFAULT_TOL,
                    min_pairs: int = MIN_PAIRS) -> StageEstimate:
    """Minimize l_n(theta1_hat, .) over [theta2_min, theta2_max]."""
    _check_pairs(obs.pair_index.size, min_pairs)
    return _stage(lambda t: l_contrast(obs, model, (theta1_hat, t)).value,
                  rect.theta2_min, rect.theta2_max, tol)


@dataclass(frozen=True)
class EstimationResult:
    """Two-stage estimate with plug-in standard errors.

    ``se1`` is on the sqrt(n) scale and ``se2`` on the sqrt(n h) scale, i.e.
    they are the standard deviations of theta1_hat and theta2_hat themselves.
    ``sigma_singular`` is set when the plug-in information matrix has a
    vanishing diagonal entry; the matching standard error is then infinite.
    """

    theta_hat: ParamPoint
    se1: float
    se2: float
    n_pairs: int
    at_boundary: tuple[bool, bool]
    optimizer_evals: int
    n: int
    h_n: float
    s11_hat: float = math.nan
    s22_hat: float = math.nan
    sigma_singular: bool = False

    def confidence_intervals(self, level: float = 0.95):
        """Wald intervals ``((lo1, hi1), (lo2, hi2))`` at ``level``."""
        if not 0.0 < level < 1.0:
            raise ValueError("level must lie in (0, 1)")
        q = float(norm.ppf(0.5 + level / 2.0))
        t1, t2 = self.theta_hat
        return ((t1 - q * self.se1, t1 + q * self.se1),
                (t2 - q * self.se2, t2 + q * self.se2))


def two_stage_estimate(obs: PartialObservations, model: DiffusionModel,
                       rect: ParamRectangle = ParamRectangle(), tol: float = DEFAULT_TOL,
                       min_pairs: int = MIN_PAIRS) -> EstimationResult:
    st1 = estimate_theta1(obs, model, rect, tol, min_pairs)
    st2 = estimate_theta2(obs, model, st1.value, rect, tol, min_pairs)
    theta_hat = ParamPoint(st1.value, st2.value)
    sig = empirical_sigma(obs, model, theta_hat, min_pairs)
    return _finish(theta_hat, st1, st2, sig, obs.pair_index.size, obs.n, obs.h_n)


def _finish(theta_hat, st1, st2, sig, n_pairs, n, h_n):
    if sig.singular:
        warnings.warn("plug-in information matrix is singular; standard errors are infinite",
                      RuntimeWarning, stacklevel=3)
    se1 = math.sqrt(1.0 / (sig.s11 * n)) if sig.s11 > SINGULAR_TOL else math.inf
    se2 = math.sqrt(1.0 / (sig.s22 * n * h_n)) if sig.s22 > SINGULAR_TOL else math.inf
    return EstimationResult(
        theta_hat=theta_hat, se1=se1, se2=se2, n_pairs=int(n_pairs),
        at_boundary=(st1.at_boundary, st2.at_boundary),
        optimizer_evals=st1.evals + st2.evals, n=int(n), h_n=float(h_n),
        s11_hat=sig.s11, s22_hat=sig.s22, sigma_singular=sig.singular,
    )


def classical_two_stage(values, h_n: float, model: DiffusionModel,
                        rect: ParamRectangle = ParamRectangle(),
                        tol: float = DEFAULT_TOL) -> EstimationResult:
    """Two-stage estimator for a fully observed record (no indicators)."""
    v = np.asarray(values, dtype=float)
    n = v.size - 1
    st1 = _stage(lambda t: full_g_contrast(v, h_n, model, t).value,
                 rect.theta1_min, rect.theta1_max, tol)
    st2 = _stage(lambda t: full_l_contrast(v, h_n, model, (st1.value, t)).value,
                 rect.theta2_min, rect.theta2_max, tol)
    theta_hat = ParamPoint(st1.value, st2.value)
    sig = plugin_sigma(v[:-1], model, theta_hat, n)
    return _finish(theta_hat, st1, st2, sig, n, n, h_n)
