"""Seeded Monte Carlo replications of simulate -> censor -> estimate.

Replication ``r`` uses seed ``seed_base + r`` at every n. Records are
independent of the worker count: each one is a pure function of
``(cfg, n, r)`` and aggregation folds them in (n, rep) order.
"""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import IO, Sequence

import numpy as np
from scipy import stats

from hde.asymptotics import SigmaMatrix, sigma_quadrature, standardize_errors
from hde.censor import apply_threshold
from hde.csvio import write_rows
from hde.errors import (ExperimentAborted, HDEError, InsufficientDataError, RegimeError,
                        SimulationBlowup)
from hde.estimate import DEFAULT_TOL, MIN_PAIRS, EstimationResult, two_stage_estimate
from hde.model import ParamPoint, ParamRectangle, builtin_model
from hde.simulate import euler_maruyama_path, scheme_from_rate

__all__ = [
    "ExperimentConfig",
    "ReplicationRecord",
    "NSummary",
    "ExperimentSummary",
    "run_replication",
    "run_experiment",
    "summarize",
    "RECORD_HEADER",
    "SUMMARY_HEADER",
    "MAX_FAILURE_RATE",
]

log = logging.getLogger(__name__)

MAX_FAILURE_RATE = 0.2


@dataclass(frozen=True)
class ExperimentConfig:
    model_name: str
    theta0: ParamPoint
    rect: ParamRectangle = ParamRectangle()
    tau: float = 0.0
    alpha: float = 0.25
    n_list: tuple[int, ...] = (12500, 50000)
    gamma: float = 0.6
    refine: int = 10
    replications: int = 300
    seed_base: int = 0
    ci_level: float = 0.95
    tol: float = DEFAULT_TOL
    min_pairs: int = MIN_PAIRS

    def __post_init__(self):
        object.__setattr__(self, "theta0", ParamPoint(*map(float, self.theta0)))
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        if self.replications < 1:
            raise RegimeError("replications must be >= 1")
        if not 0.5 < self.gamma < 1.0:
            raise RegimeError(f"gamma must lie in (0.5, 1), got {self.gamma!r}")
        if not 0.0 < self.ci_level < 1.0:
            raise RegimeError(f"ci_level must lie in (0, 1), got {self.ci_level!r}")
        if not 0.0 < self.alpha < 0.5:
            raise RegimeError(f"alpha must lie in (0, 0.5), got {self.alpha!r}")
        if not self.n_list:
            raise RegimeError("n_list is empty")
        builtin_model(self.model_name, self.rect)


@dataclass(frozen=True)
class ReplicationRecord:
    n: int
    rep: int
    seed: int
    status: str
    result: EstimationResult | None = None
    z1: float = math.nan
    z2: float = math.nan

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def row(self) -> tuple:
        r = self.result
        if r is None:
            return (self.n, self.rep, self.seed, None, None, None, None, None, None, None,
                    self.status)
        return (self.n, self.rep, self.seed, r.theta_hat.theta1, r.theta_hat.theta2,
                r.se1, r.se2, self.z1, self.z2, r.n_pairs, self.status)


RECORD_HEADER = ("n", "rep", "seed", "theta1_hat", "theta2_hat", "se1", "se2",
                 "z1", "z2", "n_pairs", "status")


@lru_cache(maxsize=32)
def _true_sigma(model_name: str, theta0: ParamPoint, tau: float) -> SigmaMatrix:
    return sigma_quadrature(builtin_model(model_name), theta0, tau)


def run_replication(cfg: ExperimentConfig, n: int, rep_index: int) -> ReplicationRecord:
    """One seeded pipeline run; failures are recorded in ``status``, never raised."""
    seed = cfg.seed_base + rep_index
    model = builtin_model(cfg.model_name, cfg.rect)
    try:
        scheme = scheme_from_rate(n, cfg.gamma, cfg.refine, cfg.alpha, seed)
        traj = euler_maruyama_path(model, cfg.theta0, scheme)
        obs = apply_threshold(traj, cfg.tau, cfg.alpha)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            result = two_stage_estimate(obs, model, cfg.rect, cfg.tol, cfg.min_pairs)
    except InsufficientDataError:
        return ReplicationRecord(n, rep_index, seed, "insufficient_pairs")
    except SimulationBlowup:
        return ReplicationRecord(n, rep_index, seed, "blowup")
    except (HDEError, FloatingPointError) as exc:
        return ReplicationRecord(n, rep_index, seed, f"error:{type(exc).__name__}")
    sigma = _true_sigma(cfg.model_name, cfg.theta0, cfg.tau)
    z1 = z2 = math.nan
    if not sigma.singular:
        z1, z2 = standardize_errors(result, cfg.theta0, sigma)
    return ReplicationRecord(n, rep_index, seed, "ok", result, z1, z2)


def _task(args):
    cfg, n, rep = args
    return run_replication(cfg, n, rep)


@dataclass(frozen=True)
class NSummary:
    n: int
    h_n: float
    replications: int
    failures: int
    bias1: float
    bias2: float
    rmse1: float
    rmse2: float
    var1: float
    var2: float
    coverage1: float
    coverage2: float
    pair_fraction: float
    skew1: float
    skew2: float
    kurt1: float
    kurt2: float
    ks1: float
    ks2: float
    corr_z: float
    dispersion_defined: bool

    def row(self) -> tuple:
        return tuple(getattr(self, f) for f in SUMMARY_HEADER)


SUMMARY_HEADER = ("n", "h_n", "replications", "failures", "bias1", "bias2", "rmse1", "rmse2",
                  "var1", "var2", "coverage1", "coverage2", "pair_fraction", "skew1", "skew2",
                  "kurt1", "kurt2", "ks1", "ks2", "corr_z", "dispersion_defined")


@dataclass
class ExperimentSummary:
    config: ExperimentConfig
    records: list[ReplicationRecord]
    by_n: dict[int, NSummary] = field(default_factory=dict)

    def records_for(self, n: int) -> list[ReplicationRecord]:
        return [r for r in self.records if r.n == n]


def _shape_stats(z: np.ndarray):
    z = z[np.isfinite(z)]
    if z.size < 3:
        return math.nan, math.nan, math.nan
    return (float(stats.skew(z)), float(stats.kurtosis(z)),
            float(stats.kstest(z, "norm").statistic))


def summarize(cfg: ExperimentConfig, n: int, records: Sequence[ReplicationRecord]) -> NSummary:
    ok = [r for r in records if r.ok]
    failures = len(records) - len(ok)
    h = float(n) ** (-cfg.gamma)
    nan = math.nan
    if not ok:
        return NSummary(n, h, len(records), failures, *([nan] * 16), False)
    est = np.array([r.result.theta_hat for r in ok], dtype=float)
    err = est - np.asarray(cfg.theta0)
    bias = err.mean(axis=0)
    var = est.var(axis=0)
    rmse = np.sqrt(np.mean(err * err, axis=0))
    cover = np.zeros(2)
    for r in ok:
        (lo1, hi1), (lo2, hi2) = r.result.confidence_intervals(cfg.ci_level)
        cover += (lo1 <= cfg.theta0.theta1 <= hi1, lo2 <= cfg.theta0.theta2 <= hi2)
    cover /= len(ok)
    pair_fraction = float(np.mean([r.result.n_pairs / r.result.n for r in ok]))
    z1 = np.array([r.z1 for r in ok])
    z2 = np.array([r.z2 for r in ok])
    s1, k1, ks1 = _shape_stats(z1)
    s2, k2, ks2 = _shape_stats(z2)
    both = np.isfinite(z1) & np.isfinite(z2)
    corr = float(np.corrcoef(z1[both], z2[both])[0, 1]) if both.sum() >= 3 else nan
    return NSummary(
        n=n, h_n=h, replications=len(records), failures=failures,
        bias1=float(bias[0]), bias2=float(bias[1]), rmse1=float(rmse[0]), rmse2=float(rmse[1]),
        var1=float(var[0]), var2=float(var[1]),
        coverage1=float(cover[0]), coverage2=float(cover[1]), pair_fraction=pair_fraction,
        skew1=s1, skew2=s2, kurt1=k1, kurt2=k2, ks1=ks1, ks2=ks2, corr_z=corr,
        dispersion_defined=len(ok) >= 3,
    )


def run_experiment(cfg: ExperimentConfig, jobs: int = 1,
                   records_out: IO[str] | None = None,
                   summary_out: IO[str] | None = None) -> ExperimentSummary:
    """Run replications x n_list and aggregate per n.

    The per-replication CSV is written before the failure check so aborted
    runs can still be inspected. More than 20% failures at any n raises
    :class:`ExperimentAborted`.
    """
    tasks = [(cfg, n, rep) for n in cfg.n_list for rep in range(cfg.replications)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        records = [_task(t) for t in tasks]
    records.sort(key=lambda r: (r.n, r.rep))
    if records_out is not None:
        write_rows(records_out, RECORD_HEADER, (r.row() for r in records))

    summary = ExperimentSummary(cfg, records)
    for n in cfg.n_list:
        group = summary.records_for(n)
        failed = [r for r in group if not r.ok]
        if len(failed) > MAX_FAILURE_RATE * len(group):
            causes = sorted({r.status for r in failed})
            raise ExperimentAborted(
                f"n={n}: {len(failed)}/{len(group)} replications failed ({', '.join(causes)})")
        summary.by_n[n] = summarize(cfg, n, group)
        log.info("n=%d done: %s", n, summary.by_n[n])
    if summary_out is not None:
        write_rows(summary_out, SUMMARY_HEADER, (s.row() for s in summary.by_n.values()))
    return summary
