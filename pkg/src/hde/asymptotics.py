"""Asymptotic covariance of the two-stage estimator.

The limit law of (sqrt(n)(theta1_hat - theta1_0), sqrt(n h)(theta2_hat -
theta2_0)) is N(0, Sigma^-1) with Sigma diagonal::

    s11 = 2 int (dsigma/dtheta1 / sigma)^2 1{x > tau} nu(dx)
    s22 =   int (db/dtheta2 / sigma)^2     1{x > tau} nu(dx)

evaluated at the true parameter under the invariant law nu.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from hde.censor import PartialObservations
from hde.contrast import integration_range, kahan_sum
from hde.errors import InsufficientDataError, SingularSigmaError, UnsupportedModelError
from hde.model import DiffusionModel, ParamPoint
from hde.quadrature import adaptive_simpson

__all__ = [
    "SINGULAR_TOL",
    "SigmaMatrix",
    "sigma_quadrature",
    "closed_form_sigma",
    "plugin_sigma",
    "empirical_sigma",
    "standardize_errors",
]

# diagonal entries at or below this are treated as zero
SINGULAR_TOL = 1e-10


@dataclass(frozen=True)
class SigmaMatrix:
    s11: float
    s22: float

    def __post_init__(self):
        if not (self.s11 >= 0.0 and self.s22 >= 0.0):
            raise ValueError(f"diagonal entries must be nonnegative, got {self.s11}, {self.s22}")

    @property
    def singular(self) -> bool:
        return not (self.s11 > SINGULAR_TOL and self.s22 > SINGULAR_TOL)

    def inverse(self) -> tuple[float, float]:
        if self.singular:
            raise SingularSigmaError(f"Sigma = diag({self.s11!r}, {self.s22!r}) is singular")
        return 1.0 / self.s11, 1.0 / self.s22


def sigma_quadrature(model: DiffusionModel, theta0: ParamPoint, tau: float,
                     abstol: float = 1e-10) -> SigmaMatrix:
    """Sigma by adaptive Simpson against the invariant density on {x > tau}."""
    theta0 = ParamPoint(*theta0)
    if model.invariant_density is None:
        raise UnsupportedModelError(f"model {model.name!r} has no invariant density")
    lo, hi = integration_range(model, theta0, tau)

    def integrand(x):
        nu = model.invariant_density(x, theta0)
        s = model.diffusion(x, theta0.theta1)
        a = model.d_theta1_sigma(x, theta0.theta1) / s
        b = model.d_theta2_b(x, theta0.theta2) / s
        return np.stack([a * a * nu, b * b * nu], axis=1)

    i1, i2 = adaptive_simpson(integrand, lo, hi, abstol)
    return SigmaMatrix(2.0 * max(float(i1), 0.0), max(float(i2), 0.0))


def closed_form_sigma(model: DiffusionModel, theta0: ParamPoint, tau: float) -> SigmaMatrix | None:
    """Gaussian-moment Sigma for the OU model; ``None`` for other models."""
    if model.name != "ou":
        return None
    t1, t2 = ParamPoint(*theta0)
    v = t1 * t1 / (2.0 * t2)
    a = tau / math.sqrt(v)
    tail = float(norm.sf(a))
    # E[X^2; X > tau] = v (P(Z > a) + a phi(a))
    second = v * (tail + (a * float(norm.pdf(a)) if math.isfinite(a) else 0.0))
    return SigmaMatrix(2.0 * tail / (t1 * t1), second / (t1 * t1))


def plugin_sigma(x_prev, model: DiffusionModel, theta_hat: ParamPoint, n: int) -> SigmaMatrix:
    """Sigma with nu replaced by the empirical measure of ``x_prev``, divided by ``n``."""
    t1, t2 = ParamPoint(*theta_hat)
    x = np.ascontiguousarray(x_prev, dtype=float)
    s = model.diffusion(x, t1)
    a = np.ascontiguousarray((model.d_theta1_sigma(x, t1) / s) ** 2, dtype=float)
    b = np.ascontiguousarray((model.d_theta2_b(x, t2) / s) ** 2, dtype=float)
    return SigmaMatrix(2.0 * float(kahan_sum(a)) / n, float(kahan_sum(b)) / n)


def empirical_sigma(obs: PartialObservations, model: DiffusionModel,
                    theta_hat: ParamPoint, min_pairs: int = 30) -> SigmaMatrix:
    """Plug-in Sigma over the usable pairs' left endpoints.

    The sums are divided by the total number of intervals n, not by the
    number of usable pairs.
    """
    x_prev, _ = obs.pair_data
    if x_prev.size < min_pairs:
        raise InsufficientDataError(
            f"only {x_prev.size} usable pairs; at least {min_pairs} required")
    return plugin_sigma(x_prev, model, theta_hat, obs.n)


def standardize_errors(result, theta0: ParamPoint, sigma: SigmaMatrix,
                       n: int | None = None, h_n: float | None = None) -> tuple[float, float]:
    """Errors scaled to be asymptotically standard normal.

    ``z1 = sqrt(n) (theta1_hat - theta1_0) sqrt(s11)`` and
    ``z2 = sqrt(n h) (theta2_hat - theta2_0) sqrt(s22)``.
    """
    if sigma.singular:
        raise SingularSigmaError(f"Sigma = diag({sigma.s11!r}, {sigma.s22!r}) is singular")
    n = result.n if n is None else n
    h_n = result.h_n if h_n is None else h_n
    t1, t2 = result.theta_hat
    z1 = math.sqrt(n) * (t1 - theta0[0]) * math.sqrt(sigma.s11)
    z2 = math.sqrt(n * h_n) * (t2 - theta0[1]) * math.sqrt(sigma.s22)
    return z1, z2
