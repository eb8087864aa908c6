import math

import numpy as np
import pytest

from hde.censor import apply_threshold, censor_values
from hde.contrast import g_contrast
from hde.errors import InsufficientDataError
from hde.estimate import (classical_two_stage, estimate_theta1, estimate_theta2,
                          minimize_scalar, two_stage_estimate)
from hde.model import DiffusionModel, ParamPoint, ParamRectangle
from hde.simulate import euler_maruyama_path, scheme_from_rate

from conftest import estimates

RECT = ParamRectangle()


def test_minimize_quadratic():
    x, evals = minimize_scalar(lambda x: (x - 2.0) ** 2, 0.0, 5.0, 1e-8)
    assert x == pytest.approx(2.0, abs=1e-8)
    assert evals > 65


def test_minimize_cosine():
    x, _ = minimize_scalar(math.cos, 0.0, 2 * math.pi, 1e-8)
    assert x == pytest.approx(math.pi, abs=1e-8)


def test_minimize_constant_returns_lo():
    x, _ = minimize_scalar(lambda x: 3.0, -1.0, 4.0)
    assert x == -1.0


def test_minimize_monotone_hits_edges():
    assert minimize_scalar(lambda x: x, 1.0, 2.0)[0] == 1.0
    assert minimize_scalar(lambda x: -x, 1.0, 2.0)[0] == pytest.approx(2.0, abs=1e-8)


def test_minimize_finds_global_among_local():
    # local minimum near 0.6, global near 3.9
    f = lambda x: math.sin(3 * x) + 0.1 * (x - 4) ** 2
    x, _ = minimize_scalar(f, 0.0, 5.0)
    grid = np.linspace(0, 5, 100_001)
    assert x == pytest.approx(grid[np.argmin([f(g) for g in grid])], abs=1e-4)


def test_minimize_propagates_nonfinite():
    with pytest.raises(FloatingPointError):
        minimize_scalar(lambda x: math.nan if x > 1 else x, 0.0, 2.0)


def test_minimize_validates_interval():
    with pytest.raises(ValueError):
        minimize_scalar(lambda x: x, 1.0, 1.0)


@pytest.mark.parametrize("shift, scale", [(0.0, 1.0), (1e3, 1.0), (-7.5, 0.01), (0.0, 250.0)])
def test_argmin_invariance(ou, shift, scale):
    traj = euler_maruyama_path(ou, (1.0, 1.0), scheme_from_rate(4000, 0.6, seed=5))
    obs = apply_threshold(traj, 0.0, 0.25)
    base, _ = minimize_scalar(lambda t: g_contrast(obs, ou, t).value, 0.1, 10.0)
    moved, _ = minimize_scalar(lambda t: shift + scale * g_contrast(obs, ou, t).value, 0.1, 10.0)
    assert moved == pytest.approx(base, abs=1e-6)


def _sim(model, n=5000, seed=0, tau=0.0, theta=(1.0, 1.0)):
    traj = euler_maruyama_path(model, theta, scheme_from_rate(n, 0.6, seed=seed))
    return traj, apply_threshold(traj, tau, 0.25)


def test_zero_increments_clamp_to_lower_edge(driftless):
    h = 0.01
    obs = censor_values(np.arange(100) * h, np.ones(100), 0.0, 0.25, h)
    st = estimate_theta1(obs, driftless, RECT)
    assert st.value == pytest.approx(RECT.theta1_min, abs=1e-8)
    assert st.at_boundary


def test_flat_drift_contrast_returns_theta2_min(driftless, ou):
    _, obs = _sim(ou, seed=1)
    st = estimate_theta2(obs, driftless, 1.0, RECT)
    assert st.value == RECT.theta2_min
    assert st.at_boundary


def test_estimates_are_deterministic(ou):
    _, obs = _sim(ou, seed=2)
    a = two_stage_estimate(obs, ou)
    b = two_stage_estimate(obs, ou)
    assert a == b


def test_n_pairs_bookkeeping(ou):
    _, obs = _sim(ou, seed=3)
    res = two_stage_estimate(obs, ou)
    assert res.n_pairs == obs.pair_index.size
    assert res.n == obs.n and res.h_n == obs.h_n


def test_too_few_pairs(ou):
    h = 0.01
    v = np.full(40, -1.0)
    v[:20] = 1.0
    obs = censor_values(np.arange(40) * h, v, 0.0, 0.25, h)
    with pytest.raises(InsufficientDataError, match="usable pairs"):
        two_stage_estimate(obs, ou)
    assert two_stage_estimate(obs, ou, min_pairs=10).n_pairs == 19


def test_stage_one_never_calls_drift(ou):
    def drift(x, theta2):
        raise AssertionError("drift evaluated in stage 1")

    spy = DiffusionModel("spy", drift, ou.diffusion, ou.d_theta1_sigma, ou.d_theta2_b)
    _, obs = _sim(ou, seed=4)
    st = estimate_theta1(obs, spy, RECT)
    assert st.value == estimate_theta1(obs, ou, RECT).value


@pytest.mark.parametrize("seed", range(20))
def test_uncensored_matches_classical(ou, seed):
    traj, obs = _sim(ou, n=2000, seed=seed, tau=-math.inf)
    a = two_stage_estimate(obs, ou)
    b = classical_two_stage(traj.values, traj.scheme.h_n, ou)
    np.testing.assert_allclose(a.theta_hat, b.theta_hat, rtol=0, atol=1e-10)
    assert a.se1 == pytest.approx(b.se1, rel=1e-12)


def test_confidence_intervals(ou):
    _, obs = _sim(ou, seed=6)
    res = two_stage_estimate(obs, ou)
    (lo1, hi1), (lo2, hi2) = res.confidence_intervals(0.95)
    assert hi1 - lo1 == pytest.approx(2 * 1.959963984540054 * res.se1, rel=1e-12)
    assert lo2 < res.theta_hat.theta2 < hi2
    with pytest.raises(ValueError):
        res.confidence_intervals(1.0)


def test_singular_plugin_gives_infinite_se(ou):
    flat = DiffusionModel("flat-b", ou.drift, ou.diffusion, ou.d_theta1_sigma,
                          lambda x, t: 0.0 * x)
    _, obs = _sim(ou, seed=7)
    with pytest.warns(RuntimeWarning, match="singular"):
        res = two_stage_estimate(obs, flat)
    assert res.sigma_singular and res.se2 == math.inf and math.isfinite(res.se1)


def test_uncensored_theta1_within_three_root_n(uncensored_mc):
    est = estimates(uncensored_mc.records_for(50000))
    assert len(est) == 300
    assert np.mean(np.abs(est[:, 0] - 1.0) < 3 / math.sqrt(50000)) >= 0.95


def test_uncensored_theta2_within_three_se(uncensored_mc):
    # uncensored s22 = E[X^2] = 1/2, so the asymptotic SD is sqrt(2 / (n h))
    nh = 50000 ** 0.4
    est = estimates(uncensored_mc.records_for(50000))
    assert np.mean(np.abs(est[:, 1] - 1.0) < 3 * math.sqrt(2 / nh)) >= 0.95


def test_censored_within_four_se(censored_mc):
    recs = [r for r in censored_mc.records_for(50000) if r.rep < 300]
    assert all(r.ok for r in recs)
    inside = [abs(r.result.theta_hat.theta1 - 1) < 4 * r.result.se1
              and abs(r.result.theta_hat.theta2 - 1) < 4 * r.result.se2 for r in recs]
    assert np.mean(inside) >= 0.95


def test_censoring_does_not_improve_rmse(censored_mc, uncensored_mc):
    cens = estimates([r for r in censored_mc.records_for(50000) if r.rep < 300])
    full = estimates(uncensored_mc.records_for(50000))
    rmse_c = np.sqrt(np.mean((cens - 1.0) ** 2, axis=0))
    rmse_f = np.sqrt(np.mean((full - 1.0) ** 2, axis=0))
    assert np.all(rmse_c >= 0.9 * rmse_f)


def test_other_models_recover_parameters(any_model):
    theta = ParamPoint(0.8, 2.0)
    est = []
    for seed in range(5):
        traj = euler_maruyama_path(any_model, theta, scheme_from_rate(50000, 0.6, seed=seed))
        est.append(two_stage_estimate(apply_threshold(traj, -0.2, 0.25), any_model).theta_hat)
    est = np.mean(est, axis=0)
    assert est[0] == pytest.approx(0.8, abs=0.02)
    assert est[1] == pytest.approx(2.0, abs=0.6)
