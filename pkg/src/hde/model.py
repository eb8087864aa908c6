"""Parametric diffusion families dX = b(X, theta2) dt + sigma(X, theta1) dW.

Coefficient functions of the built-in models are numba-compiled so the Euler
kernel can call them without leaving nopython mode; they accept scalars and
numpy arrays alike.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numba
import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.interpolate import CubicSpline

from hde.errors import RegistryError

__all__ = [
    "ParamPoint",
    "ParamRectangle",
    "DiffusionModel",
    "builtin_model",
    "eval_derivatives",
    "model_names",
    "diffusion_floor",
]


class ParamPoint(NamedTuple):
    theta1: float
    theta2: float


@dataclass(frozen=True)
class ParamRectangle:
    theta1_min: float = 0.1
    theta1_max: float = 10.0
    theta2_min: float = 0.1
    theta2_max: float = 10.0

    def __post_init__(self):
        for name in ("theta1_min", "theta1_max", "theta2_min", "theta2_max"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not self.theta1_min < self.theta1_max:
            raise ValueError("theta1_min must be < theta1_max")
        if not self.theta2_min < self.theta2_max:
            raise ValueError("theta2_min must be < theta2_max")

    def contains(self, p: ParamPoint) -> bool:
        return (self.theta1_min <= p.theta1 <= self.theta1_max
                and self.theta2_min <= p.theta2 <= self.theta2_max)

    def interior(self, p: ParamPoint) -> bool:
        return (self.theta1_min < p.theta1 < self.theta1_max
                and self.theta2_min < p.theta2 < self.theta2_max)


@dataclass(frozen=True)
class DiffusionModel:
    """A one-dimensional parametric diffusion.

    ``drift(x, theta2)`` and ``diffusion(x, theta1)`` are the coefficients;
    ``d_theta2_b`` and ``d_theta1_sigma`` their parameter derivatives.
    ``invariant_density(x, theta0)`` is the normalized stationary density when
    it can be evaluated. ``exact_stationary(theta0, rng)`` draws from it
    exactly; models without one are started by burn-in. ``scale(theta0)`` is a
    length scale of the stationary law used to truncate integrals.
    """

    name: str
    drift: Callable
    diffusion: Callable
    d_theta1_sigma: Callable
    d_theta2_b: Callable
    invariant_density: Callable | None = None
    exact_stationary: Callable | None = None
    scale: Callable | None = None

    @property
    def compiled(self) -> bool:
        return all(isinstance(f, numba.core.registry.CPUDispatcher)
                   for f in (self.drift, self.diffusion))


def eval_derivatives(model: DiffusionModel, x, p: ParamPoint):
    """Return ``(db/dtheta2, dsigma/dtheta1)`` at ``x``."""
    return model.d_theta2_b(x, p.theta2), model.d_theta1_sigma(x, p.theta1)


# --- Ornstein-Uhlenbeck -----------------------------------------------------

@numba.njit(cache=True)
def _ou_drift(x, theta2):
    return -theta2 * x


@numba.njit(cache=True)
def _ou_diffusion(x, theta1):
    return theta1 + 0.0 * x


@numba.njit(cache=True)
def _ou_db(x, theta2):
    return -x + 0.0 * theta2


@numba.njit(cache=True)
def _unit(x, theta1):
    return 1.0 + 0.0 * x


def _ou_variance(theta0):
    return theta0[0] ** 2 / (2.0 * theta0[1])


def _ou_density(x, theta0):
    v = _ou_variance(theta0)
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x / v) / math.sqrt(2.0 * math.pi * v)


def _ou_exact(theta0, rng):
    return float(rng.normal(0.0, math.sqrt(_ou_variance(theta0))))


def _ou_scale(theta0):
    return math.sqrt(_ou_variance(theta0))


# --- hyperbolic drift, constant diffusion ---------------------------------

@numba.njit(cache=True)
def _hyp_drift(x, theta2):
    return -theta2 * x / np.sqrt(1.0 + x * x)


@numba.njit(cache=True)
def _hyp_db(x, theta2):
    return -x / np.sqrt(1.0 + x * x) + 0.0 * theta2


@lru_cache(maxsize=256)
def _hyp_normalizer(theta1, theta2):
    # density is shifted by exp(c) to keep large c from underflowing
    from scipy.integrate import quad

    c = 2.0 * theta2 / theta1 ** 2
    val, _ = quad(lambda u: math.exp(-c * (math.sqrt(1.0 + u * u) - 1.0)),
                  0.0, math.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    return 2.0 * val


def _hyp_density(x, theta0):
    t1, t2 = float(theta0[0]), float(theta0[1])
    c = 2.0 * t2 / t1 ** 2
    x = np.asarray(x, dtype=float)
    return np.exp(-c * (np.sqrt(1.0 + x * x) - 1.0)) / _hyp_normalizer(t1, t2)


def _gauss_exp_scale(spread, theta2):
    # larger of the Gaussian core width and the exponential tail length
    return max(spread / math.sqrt(2.0 * theta2), spread ** 2 / (2.0 * theta2))


def _hyp_scale(theta0):
    return _gauss_exp_scale(theta0[0], theta0[1])


# --- tanh drift, state-dependent diffusion ---------------------------------

@numba.njit(cache=True)
def _tanh_drift(x, theta2):
    return -theta2 * np.tanh(x)


@numba.njit(cache=True)
def _tanh_diffusion(x, theta1):
    return theta1 * (1.0 + 0.5 / (1.0 + x * x))


@numba.njit(cache=True)
def _tanh_db(x, theta2):
    return -np.tanh(x) + 0.0 * theta2


@numba.njit(cache=True)
def _tanh_dsigma(x, theta1):
    return 1.0 + 0.5 / (1.0 + x * x) + 0.0 * theta1


def _tanh_scale(theta0):
    return _gauss_exp_scale(1.5 * theta0[0], theta0[1])


_TANH_GRID = 200_001


@lru_cache(maxsize=64)
def _tanh_speed(theta1, theta2):
    """Spline of the log speed density on [0, L] and its normalizer.

    The speed density is m(x) = exp(2 * int_0^x b/sigma^2) / sigma^2(x); it is
    even, so only the positive half line is tabulated.
    """
    upper = 60.0 * _tanh_scale((theta1, theta2))
    x = np.linspace(0.0, upper, _TANH_GRID)
    s2 = _tanh_diffusion(x, theta1) ** 2
    potential = cumulative_simpson(2.0 * _tanh_drift(x, theta2) / s2, x=x, initial=0.0)
    log_m = potential - np.log(s2)
    shift = log_m[0]
    normalizer = 2.0 * simpson(np.exp(log_m - shift), x=x)
    return CubicSpline(x, log_m - shift), normalizer, upper


def _tanh_density(x, theta0):
    spline, normalizer, upper = _tanh_speed(float(theta0[0]), float(theta0[1]))
    ax = np.abs(np.asarray(x, dtype=float))
    out = np.exp(spline(np.minimum(ax, upper))) / normalizer
    return np.where(ax <= upper, out, 0.0)


_BUILTINS = {
    "ou": DiffusionModel(
        name="ou",
        drift=_ou_drift,
        diffusion=_ou_diffusion,
        d_theta1_sigma=_unit,
        d_theta2_b=_ou_db,
        invariant_density=_ou_density,
        exact_stationary=_ou_exact,
        scale=_ou_scale,
    ),
    "hyperbolic": DiffusionModel(
        name="hyperbolic",
        drift=_hyp_drift,
        diffusion=_ou_diffusion,
        d_theta1_sigma=_unit,
        d_theta2_b=_hyp_db,
        invariant_density=_hyp_density,
        scale=_hyp_scale,
    ),
    "tanh_drift": DiffusionModel(
        name="tanh_drift",
        drift=_tanh_drift,
        diffusion=_tanh_diffusion,
        d_theta1_sigma=_tanh_dsigma,
        d_theta2_b=_tanh_db,
        invariant_density=_tanh_density,
        scale=_tanh_scale,
    ),
}


def model_names() -> tuple[str, ...]:
    return tuple(_BUILTINS)


def diffusion_floor(model: DiffusionModel, rect: ParamRectangle,
                    xs=np.linspace(-10.0, 10.0, 401), n_theta: int = 101) -> float:
    """Smallest sigma^2 over ``xs`` x [theta1_min, theta1_max]."""
    thetas = np.linspace(rect.theta1_min, rect.theta1_max, n_theta)
    return float(min(np.min(model.diffusion(xs, t) ** 2) for t in thetas))


def builtin_model(name: str, rect: ParamRectangle | None = None) -> DiffusionModel:
    """Look up a built-in model by name.

    The model is only handed out if sigma^2 stays bounded away from zero over
    the parameter rectangle.
    """
    try:
        model = _BUILTINS[name]
    except KeyError:
        raise RegistryError(
            f"unknown model {name!r}; expected one of {', '.join(_BUILTINS)}"
        ) from None
    floor = diffusion_floor(model, rect or ParamRectangle())
    if not floor > 0.0:
        raise RegistryError(f"model {name!r} has sigma^2 floor {floor} <= 0 on the rectangle")
    return model
