"""Command-line front end.

Exit status: 0 on success, 1 on domain errors (too few usable pairs, singular
information matrix, simulation blow-up), 2 on usage, configuration and input
format errors. Data goes to stdout, diagnostics to stderr.

Settings are layered: ``--config`` file < ``HDE_SEED`` (seed only) < flags.
"""
from __future__ import annotations

import argparse
import contextlib
import logging
import os
import sys
from pathlib import Path

import numpy as np

from hde.asymptotics import closed_form_sigma, sigma_quadrature
from hde.censor import censor_values
from hde.config import RunConfig, parse_config, parse_int_list, with_overrides
from hde.contrast import contrast_profile, limit_surfaces
from hde.csvio import (read_censored_csv, read_trajectory_csv, write_censored_csv,
                       write_profile_csv, write_rows, write_trajectory_csv)
from hde.errors import ConfigError, HDEError, SingularSigmaError
from hde.estimate import two_stage_estimate
from hde.harness import ExperimentConfig, run_experiment
from hde.model import ParamPoint, ParamRectangle, builtin_model, model_names
from hde.simulate import SamplingScheme, euler_maruyama_path, scheme_from_rate

PROFILE_POINTS = 201


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hde",
        description="Estimate drift and diffusion parameters of a diffusion observed only above a threshold.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="flat key = value configuration file")

    def model_args(p, theta=True):
        p.add_argument("--model", choices=model_names())
        if theta:
            p.add_argument("--theta1", type=float)
            p.add_argument("--theta2", type=float)

    def rect_args(p):
        for key in ("theta1-min", "theta1-max", "theta2-min", "theta2-max"):
            p.add_argument(f"--{key}", type=float)

    p = sub.add_parser("simulate", help="simulate a trajectory and write t,x CSV")
    common(p)
    model_args(p)
    p.add_argument("--n", type=int)
    p.add_argument("--gamma", type=float, help="observation step h = n**-gamma")
    p.add_argument("--h", type=float, help="observation step (overrides --gamma)")
    p.add_argument("--refine", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--output")

    p = sub.add_parser("censor", help="hide values <= tau and write t,x,visible CSV")
    common(p)
    p.add_argument("--input")
    p.add_argument("--tau", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--output")

    p = sub.add_parser("estimate", help="two-stage estimate from a censored CSV")
    common(p)
    model_args(p, theta=False)
    rect_args(p)
    p.add_argument("--input")
    p.add_argument("--tau", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--min-pairs", type=int)
    p.add_argument("--level", type=float, help="confidence level (default 0.95)")
    p.add_argument("--profile-theta1", help="write g_n profile as theta,value CSV")
    p.add_argument("--profile-theta2", help="write l_n(theta1_hat, .) profile as theta,value CSV")

    p = sub.add_parser("sigma", help="asymptotic covariance s11,s22,inv11,inv22")
    common(p)
    model_args(p)
    rect_args(p)
    p.add_argument("--tau", type=float)
    p.add_argument("--method", choices=("auto", "quadrature", "closed"), default="auto",
                   help="auto uses the closed form when the model has one")
    p.add_argument("--profile-theta1", help="write the limit surface G as theta,value CSV")
    p.add_argument("--profile-theta2", help="write the limit surface L as theta,value CSV")

    p = sub.add_parser("experiment", help="Monte Carlo replications and summary")
    common(p)
    model_args(p)
    rect_args(p)
    p.add_argument("--tau", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--n-list", help="comma-separated sample sizes")
    p.add_argument("--gamma", type=float)
    p.add_argument("--refine", type=int)
    p.add_argument("--replications", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--level", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--min-pairs", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--output", help="per-replication CSV (default stdout)")
    p.add_argument("--summary", help="summary CSV keyed by n")
    return parser


_FLAG_TO_KEY = {"level": "ci_level"}
_NOT_CONFIG = {"command", "config", "verbose", "method", "profile_theta1", "profile_theta2"}


def _resolve(args) -> RunConfig:
    cfg = RunConfig()
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        cfg = parse_config(text)
    env_seed = os.environ.get("HDE_SEED")
    if env_seed is not None:
        try:
            cfg = with_overrides(cfg, seed=int(env_seed))
        except ValueError:
            raise ConfigError(f"HDE_SEED must be an integer, got {env_seed!r}") from None
    overrides = {}
    for name, value in vars(args).items():
        if name in _NOT_CONFIG or value is None:
            continue
        key = _FLAG_TO_KEY.get(name, name)
        if key == "n_list":
            try:
                value = parse_int_list(value)
            except ValueError as exc:
                raise ConfigError(f"--n-list: {exc}") from None
        overrides[key] = value
    return with_overrides(cfg, **overrides)


def _need(cfg: RunConfig, *keys):
    missing = [k for k in keys if getattr(cfg, k) is None]
    if missing:
        raise ConfigError("missing required setting(s): " + ", ".join(missing))


def _rect(cfg):
    return ParamRectangle(cfg.theta1_min, cfg.theta1_max, cfg.theta2_min, cfg.theta2_max)


@contextlib.contextmanager
def _open_out(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _open_in(path):
    if path is None or path == "-":
        return contextlib.nullcontext(sys.stdin)
    return open(path, newline="")


def cmd_simulate(cfg: RunConfig, args) -> int:
    _need(cfg, "model", "theta1", "theta2", "n")
    model = builtin_model(cfg.model, _rect(cfg))
    if cfg.h is not None:
        scheme = SamplingScheme(cfg.n, cfg.h, cfg.refine, cfg.alpha, cfg.seed)
    else:
        scheme = scheme_from_rate(cfg.n, cfg.gamma, cfg.refine, cfg.alpha, cfg.seed)
    traj = euler_maruyama_path(model, ParamPoint(cfg.theta1, cfg.theta2), scheme)
    with _open_out(cfg.output) as out:
        write_trajectory_csv(out, traj.times, traj.values)
    return 0


def cmd_censor(cfg: RunConfig, args) -> int:
    with _open_in(cfg.input) as fh:
        times, values = read_trajectory_csv(fh)
    if times.size < 2:
        raise ValueError("trajectory needs at least two rows")
    obs = censor_values(times, values, cfg.tau, cfg.alpha, float(times[1] - times[0]))
    with _open_out(cfg.output) as out:
        write_censored_csv(out, obs)
    return 0


def cmd_estimate(cfg: RunConfig, args) -> int:
    _need(cfg, "model")
    rect = _rect(cfg)
    model = builtin_model(cfg.model, rect)
    with _open_in(cfg.input) as fh:
        obs = read_censored_csv(fh, cfg.tau, cfg.alpha)
    result = two_stage_estimate(obs, model, rect, cfg.tol, cfg.min_pairs)
    (lo1, hi1), (lo2, hi2) = result.confidence_intervals(cfg.ci_level)
    header = ("theta1_hat", "theta2_hat", "se1", "se2", "n_pairs",
              "ci1_lo", "ci1_hi", "ci2_lo", "ci2_hi")
    row = (*result.theta_hat, result.se1, result.se2, result.n_pairs, lo1, hi1, lo2, hi2)
    write_rows(sys.stdout, header, [row])
    if args.profile_theta1:
        grid = np.linspace(rect.theta1_min, rect.theta1_max, PROFILE_POINTS)
        with open(args.profile_theta1, "w") as out:
            write_profile_csv(out, grid, contrast_profile(obs, model, "theta1", grid))
    if args.profile_theta2:
        grid = np.linspace(rect.theta2_min, rect.theta2_max, PROFILE_POINTS)
        values = contrast_profile(obs, model, "theta2", grid, result.theta_hat.theta1)
        with open(args.profile_theta2, "w") as out:
            write_profile_csv(out, grid, values)
    if result.sigma_singular:
        print("error: plug-in information matrix is singular", file=sys.stderr)
        return 1
    return 0


def cmd_sigma(cfg: RunConfig, args) -> int:
    _need(cfg, "model", "theta1", "theta2")
    rect = _rect(cfg)
    model = builtin_model(cfg.model, rect)
    theta0 = ParamPoint(cfg.theta1, cfg.theta2)
    sig = None
    if args.method in ("auto", "closed"):
        sig = closed_form_sigma(model, theta0, cfg.tau)
        if sig is None and args.method == "closed":
            raise ConfigError(f"model {model.name!r} has no closed-form Sigma")
    if sig is None:
        sig = sigma_quadrature(model, theta0, cfg.tau)
    inv = (1.0 / sig.s11 if sig.s11 > 0 else float("inf"),
           1.0 / sig.s22 if sig.s22 > 0 else float("inf"))
    write_rows(sys.stdout, ("s11", "s22", "inv11", "inv22"), [(sig.s11, sig.s22, *inv)])
    for path, which in ((args.profile_theta1, 1), (args.profile_theta2, 2)):
        if not path:
            continue
        lo, hi = (rect.theta1_min, rect.theta1_max) if which == 1 else (rect.theta2_min, rect.theta2_max)
        grid = np.linspace(lo, hi, PROFILE_POINTS)
        G, L = limit_surfaces(model, theta0, cfg.tau, grid if which == 1 else [theta0.theta1],
                              grid if which == 2 else [theta0.theta2])
        with open(path, "w") as out:
            write_profile_csv(out, grid, G if which == 1 else L)
    if sig.singular:
        raise SingularSigmaError(f"Sigma = diag({sig.s11!r}, {sig.s22!r}) is singular")
    return 0


def cmd_experiment(cfg: RunConfig, args) -> int:
    _need(cfg, "model", "theta1", "theta2", "n_list")
    exp = ExperimentConfig(
        model_name=cfg.model, theta0=ParamPoint(cfg.theta1, cfg.theta2), rect=_rect(cfg),
        tau=cfg.tau, alpha=cfg.alpha, n_list=cfg.n_list, gamma=cfg.gamma, refine=cfg.refine,
        replications=cfg.replications, seed_base=cfg.seed, ci_level=cfg.ci_level,
        tol=cfg.tol, min_pairs=cfg.min_pairs,
    )
    with contextlib.ExitStack() as stack:
        records = stack.enter_context(_open_out(cfg.output))
        summary = stack.enter_context(open(cfg.summary, "w")) if cfg.summary else None
        run_experiment(exp, jobs=cfg.jobs, records_out=records, summary_out=summary)
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "censor": cmd_censor,
    "estimate": cmd_estimate,
    "sigma": cmd_sigma,
    "experiment": cmd_experiment,
}


def dispatch(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = _resolve(args)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HDEError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch())
