"""Euler-Maruyama paths subsampled to the observation grid t_i = i * h_n.

Random numbers come from ``numpy.random.Generator(numpy.random.Philox(seed))``
with Gaussian variates from ``Generator.standard_normal``. For a given seed the
draw order is fixed: the initial state first (exact draw or burn-in
increments), then ``n * refine`` path increments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from hde.errors import RegimeError, SimulationBlowup
from hde.model import DiffusionModel, ParamPoint

__all__ = [
    "SamplingScheme",
    "Trajectory",
    "make_rng",
    "scheme_from_rate",
    "stationary_initial_draw",
    "euler_maruyama_path",
    "BURN_IN_MEAN_REVERSION_TIMES",
]

BURN_IN_MEAN_REVERSION_TIMES = 50.0
DEFAULT_BURN_IN_STEP = 0.01


@dataclass(frozen=True)
class SamplingScheme:
    """Observation design: ``n`` intervals of length ``h_n``.

    ``refine`` Euler steps are taken per observation interval; ``alpha`` is the
    exponent of the elevated threshold tau + h_n**alpha.
    """

    n: int
    h_n: float
    refine: int = 10
    alpha: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise RegimeError(f"n must be a positive integer, got {self.n!r}")
        if not (math.isfinite(self.h_n) and self.h_n > 0):
            raise RegimeError(f"h_n must be positive, got {self.h_n!r}")
        if int(self.refine) != self.refine or self.refine < 1:
            raise RegimeError(f"refine must be a positive integer, got {self.refine!r}")
        if not 0.0 < self.alpha < 0.5:
            raise RegimeError(f"alpha must lie in (0, 0.5), got {self.alpha!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise RegimeError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    @property
    def horizon(self) -> float:
        return self.n * self.h_n

    @property
    def h_fine(self) -> float:
        return self.h_n / self.refine


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    values: np.ndarray
    scheme: SamplingScheme
    model_name: str
    theta0: ParamPoint

    def __post_init__(self):
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have equal length")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def scheme_from_rate(n: int, gamma: float, refine: int = 10, alpha: float = 0.25,
                     seed: int = 0) -> SamplingScheme:
    """Scheme with h_n = n**-gamma, so that n h_n -> inf and n h_n**2 -> 0."""
    if not 0.5 < gamma < 1.0:
        raise RegimeError(f"gamma must lie in (0.5, 1) for n*h -> inf and n*h^2 -> 0, got {gamma!r}")
    return SamplingScheme(n=n, h_n=float(n) ** (-gamma), refine=refine, alpha=alpha, seed=seed)


@numba.njit(cache=True)
def _euler_kernel(drift, diffusion, x0, theta1, theta2, dt, z, refine):
    n = z.size // refine
    out = np.empty(n + 1)
    out[0] = x0
    x = x0
    sq = np.sqrt(dt)
    for i in range(n):
        base = i * refine
        for k in range(refine):
            x = x + drift(x, theta2) * dt + diffusion(x, theta1) * sq * z[base + k]
            if not np.isfinite(x):
                out[i + 1] = x
                return out, base + k
        out[i + 1] = x
    return out, -1


def _euler_python(drift, diffusion, x0, theta1, theta2, dt, z, refine):
    n = z.size // refine
    out = np.empty(n + 1)
    out[0] = x = x0
    sq = math.sqrt(dt)
    for i in range(n):
        for k in range(refine):
            x = x + drift(x, theta2) * dt + diffusion(x, theta1) * sq * z[i * refine + k]
            if not math.isfinite(x):
                out[i + 1] = x
                return out, i * refine + k
        out[i + 1] = x
    return out, -1


def _integrate(model, theta0, x0, dt, z, refine):
    kernel = _euler_kernel if model.compiled else _euler_python
    out, bad = kernel(model.drift, model.diffusion, float(x0),
                      float(theta0.theta1), float(theta0.theta2), float(dt), z, int(refine))
    if bad >= 0:
        raise SimulationBlowup(int(bad), float(out[bad // refine + 1]))
    return out


def stationary_initial_draw(model: DiffusionModel, theta0: ParamPoint,
                            rng: np.random.Generator,
                            h_fine: float = DEFAULT_BURN_IN_STEP) -> float:
    """Draw X_0 from (approximately) the stationary law.

    Exact when the model provides a sampler; otherwise the endpoint of an Euler
    path of length 50 / theta2 started at 0 with step ``h_fine``.
    """
    theta0 = ParamPoint(*theta0)
    if model.exact_stationary is not None:
        return model.exact_stationary(theta0, rng)
    steps = max(1, math.ceil(BURN_IN_MEAN_REVERSION_TIMES / theta0.theta2 / h_fine))
    z = rng.standard_normal(steps)
    return float(_integrate(model, theta0, 0.0, h_fine, z, steps)[-1])


def euler_maruyama_path(model: DiffusionModel, theta0: ParamPoint,
                        scheme: SamplingScheme, x0: float | None = None) -> Trajectory:
    """Simulate X on the fine grid h_n / refine and keep every refine-th point.

    ``x0`` overrides the stationary initial draw.
    """
    theta0 = ParamPoint(*theta0)
    rng = make_rng(scheme.seed)
    if x0 is None:
        x0 = stationary_initial_draw(model, theta0, rng, scheme.h_fine)
    z = rng.standard_normal(scheme.n * scheme.refine)
    values = _integrate(model, theta0, x0, scheme.h_fine, z, scheme.refine)
    times = np.arange(scheme.n + 1) * scheme.h_n
    return Trajectory(times=times, values=values, scheme=scheme,
                      model_name=model.name, theta0=theta0)
