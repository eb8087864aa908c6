"""Threshold censoring: X_i is recorded only when X_i > tau.

Hidden values are stored as NaN. A pair (X_{i-1}, X_i) enters the contrasts
only if X_{i-1} > tau' and X_i > tau, where tau' = tau + h_n**alpha sits
slightly above the hiding threshold.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from hde.errors import RegimeError

__all__ = [
    "ThresholdSpec",
    "PartialObservations",
    "effective_threshold",
    "apply_threshold",
    "censor_values",
    "usable_pairs",
    "dropped_pair_fraction",
]


@dataclass(frozen=True)
class ThresholdSpec:
    tau: float
    alpha: float
    tau_prime: float


@dataclass(frozen=True, eq=False)
class PartialObservations:
    times: np.ndarray
    values: np.ndarray
    visible: np.ndarray
    threshold: ThresholdSpec
    h_n: float

    def __post_init__(self):
        if not (self.times.shape == self.values.shape == self.visible.shape):
            raise ValueError("times, values and visible must have equal length")
        if self.values.size < 2:
            raise ValueError("need at least two observation times")
        if not np.array_equal(self.visible, ~np.isnan(self.values)):
            raise ValueError("visible flags disagree with hidden (NaN) values")
        if np.any(self.values[self.visible] <= self.threshold.tau):
            raise ValueError(f"visible value at or below tau={self.threshold.tau}")

    @property
    def n(self) -> int:
        """Number of observation intervals."""
        return self.values.size - 1

    @cached_property
    def pair_index(self) -> np.ndarray:
        return usable_pairs(self)

    @cached_property
    def pair_data(self) -> tuple[np.ndarray, np.ndarray]:
        """``(X_{i-1}, Delta_i X)`` over the usable pairs, in index order."""
        i = self.pair_index
        prev = self.values[i - 1]
        return prev, self.values[i] - prev


def effective_threshold(tau: float, h_n: float, alpha: float) -> ThresholdSpec:
    if not 0.0 < h_n < 1.0:
        raise RegimeError(f"h_n must lie in (0, 1) so that h_n**alpha -> 0, got {h_n!r}")
    if not 0.0 < alpha < 0.5:
        raise RegimeError(f"alpha must lie in (0, 0.5), got {alpha!r}")
    return ThresholdSpec(tau=float(tau), alpha=float(alpha), tau_prime=float(tau) + h_n ** alpha)


def apply_threshold(series, tau: float, alpha: float, h_n: float | None = None) -> PartialObservations:
    """Hide every value <= tau.

    ``series`` is a :class:`~hde.simulate.Trajectory` or an already censored
    :class:`PartialObservations`; in the latter case the result has identical
    values and flags when tau is unchanged.
    """
    if h_n is None:
        h_n = series.scheme.h_n if hasattr(series, "scheme") else series.h_n
    return censor_values(series.times, series.values, tau, alpha, h_n)


def censor_values(times, values, tau: float, alpha: float, h_n: float) -> PartialObservations:
    values = np.asarray(values, dtype=float)
    visible = values > tau
    return PartialObservations(
        times=np.asarray(times, dtype=float),
        values=np.where(visible, values, np.nan),
        visible=visible,
        threshold=effective_threshold(tau, h_n, alpha),
        h_n=float(h_n),
    )


def usable_pairs(obs: PartialObservations) -> np.ndarray:
    """Indices i in 1..n with X_{i-1} > tau' and X_i > tau."""
    v = obs.values
    th = obs.threshold
    # NaN compares false, so hidden points never qualify
    mask = (v[:-1] > th.tau_prime) & (v[1:] > th.tau)
    return np.flatnonzero(mask) + 1


def dropped_pair_fraction(obs: PartialObservations) -> float:
    """Fraction of the n intervals with X_{i-1} > tau' but X_i hidden."""
    v = obs.values
    dropped = (v[:-1] > obs.threshold.tau_prime) & ~obs.visible[1:]
    return float(np.count_nonzero(dropped)) / obs.n
