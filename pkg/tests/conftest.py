import math
import time

import numpy as np
import pytest

from hde.harness import ExperimentConfig, run_experiment
from hde.model import DiffusionModel, builtin_model

MC_SEED = 20240101
ACCEPTANCE_LINES: list[str] = []
ELAPSED: dict[str, float] = {}


@pytest.fixture(scope="session")
def ou():
    return builtin_model("ou")


@pytest.fixture(scope="session", params=["ou", "hyperbolic", "tanh_drift"])
def any_model(request):
    return builtin_model(request.param)


def _zero(x, theta):
    return 0.0 * x


def _ou_drift(x, theta2):
    return -theta2 * x


def _const_sigma(x, theta1):
    return theta1 + 0.0 * x


def _one(x, theta):
    return 1.0 + 0.0 * x


@pytest.fixture(scope="session")
def driftless():
    """sigma = theta1, b = 0: the drift contrast is flat in theta2."""
    return DiffusionModel("driftless", _zero, _const_sigma, _one, _zero)


@pytest.fixture(scope="session")
def frozen_ou():
    """OU drift with sigma forced to 0 (plain Python, uncompiled path)."""
    return DiffusionModel("frozen", _ou_drift, _zero, _zero, lambda x, t: -x)


@pytest.fixture(scope="session")
def censored_mc():
    """ou(1,1), tau=0, alpha=0.25, h=n^-0.6: 500 replications at two sample sizes."""
    cfg = ExperimentConfig("ou", (1.0, 1.0), tau=0.0, alpha=0.25, n_list=(12500, 50000),
                           gamma=0.6, refine=10, replications=500, seed_base=MC_SEED)
    start = time.perf_counter()
    result = run_experiment(cfg)
    ELAPSED["censored_mc"] = time.perf_counter() - start
    return result


@pytest.fixture(scope="session")
def uncensored_mc():
    """Same seeds as ``censored_mc`` with nothing hidden (tau = -inf)."""
    cfg = ExperimentConfig("ou", (1.0, 1.0), tau=-math.inf, alpha=0.25, n_list=(50000,),
                           gamma=0.6, refine=10, replications=300, seed_base=MC_SEED)
    return run_experiment(cfg)


def estimates(records):
    return np.array([r.result.theta_hat for r in records if r.ok], dtype=float)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
