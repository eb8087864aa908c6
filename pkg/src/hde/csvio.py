"""CSV readers and writers.

Floats are written with 17 significant digits (``format(x, ".17g")``), so a
write/read cycle reproduces every double exactly. Hidden observations are an
empty ``x`` field with ``visible=0``.
"""
from __future__ import annotations

import csv
import io
import math
from typing import IO, Iterable, Sequence

import numpy as np

from hde.censor import PartialObservations, effective_threshold

__all__ = [
    "fmt",
    "write_rows",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_censored_csv",
    "read_censored_csv",
    "write_profile_csv",
]


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def write_rows(stream: IO[str], header: Sequence[str], rows: Iterable[Sequence]) -> None:
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(fmt(v) for v in row) + "\n")


def write_trajectory_csv(stream: IO[str], times, values) -> None:
    write_rows(stream, ("t", "x"), zip(np.asarray(times, float), np.asarray(values, float)))


def _read(stream: IO[str], header: tuple[str, ...]) -> list[list[str]]:
    rows = list(csv.reader(io.StringIO(stream.read())))
    if not rows or tuple(c.strip() for c in rows[0]) != header:
        raise ValueError(f"expected header {','.join(header)!r}")
    body = [r for r in rows[1:] if r]
    for lineno, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} fields, got {len(r)}")
    return body


def read_trajectory_csv(stream: IO[str]) -> tuple[np.ndarray, np.ndarray]:
    body = _read(stream, ("t", "x"))
    arr = np.array([[float(t), float(x)] for t, x in body], dtype=float).reshape(-1, 2)
    return arr[:, 0].copy(), arr[:, 1].copy()


def write_censored_csv(stream: IO[str], obs: PartialObservations) -> None:
    rows = ((t, x if vis else None, bool(vis))
            for t, x, vis in zip(obs.times, obs.values, obs.visible))
    write_rows(stream, ("t", "x", "visible"), rows)


def _uniform_step(times: np.ndarray) -> float:
    if times.size < 2:
        raise ValueError("need at least two rows")
    h = float(times[1] - times[0])
    steps = np.diff(times)
    if not h > 0 or np.max(np.abs(steps - h)) > 1e-9 * max(h, abs(times[-1])):
        raise ValueError("times must be equally spaced and increasing")
    return h


def read_censored_csv(stream: IO[str], tau: float, alpha: float) -> PartialObservations:
    """Load the ``t,x,visible`` format; ``tau`` and ``alpha`` are not stored in it."""
    body = _read(stream, ("t", "x", "visible"))
    times = np.empty(len(body))
    values = np.empty(len(body))
    visible = np.empty(len(body), dtype=bool)
    for k, (t, x, vis) in enumerate(body):
        lineno = k + 2
        times[k] = float(t)
        if vis.strip() not in ("0", "1"):
            raise ValueError(f"line {lineno}: visible must be 0 or 1, got {vis!r}")
        visible[k] = vis.strip() == "1"
        if visible[k]:
            if not x.strip():
                raise ValueError(f"line {lineno}: visible row has empty x")
            values[k] = float(x)
        else:
            if x.strip():
                raise ValueError(f"line {lineno}: hidden row must have empty x")
            values[k] = np.nan
    h = _uniform_step(times)
    return PartialObservations(times=times, values=values, visible=visible,
                               threshold=effective_threshold(tau, h, alpha), h_n=h)


def write_profile_csv(stream: IO[str], grid, values) -> None:
    write_rows(stream, ("theta", "value"), zip(np.asarray(grid, float), np.asarray(values, float)))
