import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracsmc.engine import SimConfig, simulate
from fracsmc.errors import ConfigError, ContractError
from fracsmc.fracops import DiffusiveState, build_grid
from fracsmc.models import DuffingParams, Forcing, KelvinVoigtParams, ModifiedKVParams
from fracsmc.smc import (
    ControllerConfig,
    adapt_step,
    control,
    control_adaptive,
    control_duffing,
    control_known_bound,
    lyapunov_adaptive,
    lyapunov_duffing_sliding,
    lyapunov_kv_sliding,
    lyapunov_mkv_sliding,
    lyapunov_surface,
    lyapunov_excess,
    reaching_rate,
    reaching_violations,
    surface_duffing,
    surface_kv,
    surface_mkv,
    switch,
)

KV = KelvinVoigtParams(m=1.0, c=0.4, k=2.0, alpha=0.56)
KNOWN = ControllerConfig("known_bound", eta=35.0, rho2=2.0)
ADAPT = ControllerConfig("adaptive", rho1_over_sqrt2=25.0, rho2=5.0, mu=5.0)
DUF = DuffingParams(a=-2.0, b=4.0, c=0.4, alpha=0.56, surface_gain=1.0)

reals = st.floats(-1e3, 1e3, allow_nan=False)
gains = st.floats(0.0, 100.0)


def test_controller_config_validation():
    with pytest.raises(ConfigError):
        ControllerConfig("sliding")
    with pytest.raises(ConfigError):
        ControllerConfig("known_bound", eta=-1.0)
    with pytest.raises(ConfigError):
        ControllerConfig("adaptive", rho1_over_sqrt2=25.0)
    with pytest.raises(ConfigError):
        ControllerConfig("adaptive", mu=0.0)


def test_switch():
    assert switch(0.0) == 0.0
    assert switch(-0.0) == 0.0
    assert switch(1e-300) == 1.0 and switch(-3.0) == -1.0
    assert switch(0.05, phi=0.1) == pytest.approx(0.5)
    assert switch(5.0, phi=0.1) == 1.0


def test_surfaces():
    assert surface_kv((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), KV) == 0.0
    assert surface_kv((0.0, 0.0, 1.0), (0.0, 0.0, 0.0), KV) == 1.0
    assert surface_kv((0.0, 0.0, 0.5), (1.0, 2.0, 0.0), KV) == pytest.approx(3.3)
    mkv = ModifiedKVParams(1.0, 0.4, 0.2, 2.0, 0.56, 0.2)
    assert surface_mkv((0.0, 0.0, 0.0, 0.5), (1.0, 2.0, 3.0), mkv) == pytest.approx(3.9)
    duf = DuffingParams(a=-2.0, b=4.0, c=0.4, alpha=0.56, surface_gain=2.0)
    assert surface_duffing((0.0, 0.0, 0.5), (1.0, 2.0, 0.0), duf) == pytest.approx(3.3)


def test_known_bound_examples():
    assert control_known_bound(0.0, KNOWN) == 0.0
    assert control_known_bound(0.5, KNOWN) == pytest.approx(-36.0)
    assert control_known_bound(-0.5, KNOWN) == pytest.approx(36.0)
    with pytest.raises(ContractError):
        control_known_bound(0.5, ADAPT)


def test_adaptive_examples():
    assert control_adaptive(0.0, 30.0, ADAPT) == 0.0
    assert control_adaptive(0.1, 30.0, ADAPT) == pytest.approx(-55.5)
    with pytest.raises(ContractError):
        control_adaptive(0.1, -1.0, ADAPT)
    with pytest.raises(ContractError):
        control_adaptive(0.1, 1.0, KNOWN)


def test_adapt_step():
    assert adapt_step(3.0, 0.0, ADAPT, 1.0, 1e-3) == 3.0
    assert adapt_step(0.0, -2.0, ADAPT, 1.0, 1e-3) == pytest.approx(0.01)
    with pytest.raises(ConfigError):
        adapt_step(0.0, 1.0, ADAPT, 1.0, 0.0)


def test_duffing_control_examples():
    cfg = ControllerConfig("known_bound", eta=31.0, rho2=2.0)
    assert control_duffing((0.0, 0.0, 0.0), 0.0, cfg, DUF) == 0.0
    assert control_duffing((1.0, 0.0, 0.0), 0.0, cfg, DUF) == pytest.approx(1.0)
    assert control_duffing((0.0, 0.0, 0.0), 1.0, cfg, DUF) == pytest.approx(-33.0)
    with pytest.raises(ContractError):
        control_duffing((0.0,) * 3, 1.0, ControllerConfig(), DUF)


def test_open_loop_control_is_zero():
    assert control((1.0, 2.0, 3.0), 5.0, ControllerConfig(), KV) == 0.0


@given(reals, gains, gains, st.sampled_from([0.0, 0.01, 1.0]))
def test_known_bound_odd_and_bounded(s, eta, rho2, phi):
    cfg = ControllerConfig("known_bound", eta=eta, rho2=rho2, phi=phi)
    u = control_known_bound(s, cfg)
    assert control_known_bound(-s, cfg) == -u
    assert abs(u) <= eta + rho2 * abs(s) + 1e-9 * (1 + abs(u))


@given(reals, gains, gains, gains)
def test_adaptive_odd_and_bounded(s, fhat, rho1s, rho2):
    cfg = ControllerConfig("adaptive", rho1_over_sqrt2=rho1s, rho2=rho2, mu=1.0)
    u = control_adaptive(s, fhat, cfg)
    assert control_adaptive(-s, fhat, cfg) == -u
    assert abs(u) <= fhat + rho1s + rho2 * abs(s) + 1e-9 * (1 + abs(u))


@given(st.floats(0, 1e3), reals, st.floats(1e-6, 1.0))
def test_adapt_step_nondecreasing(fhat, s, dt):
    assert adapt_step(fhat, s, ADAPT, 1.0, dt) >= fhat


def test_lyapunov_values():
    grid = build_grid(0.44)
    zero = DiffusiveState.zeros(grid)
    assert lyapunov_kv_sliding((0.0, 0.0, 0.0), zero, KV) == 0.0
    assert lyapunov_kv_sliding((1.0, 0.0, 0.0), zero, KV) == pytest.approx(1.0)
    assert lyapunov_kv_sliding((0.0, 0.0, 2.0), zero, KV) == pytest.approx(2.0)
    z = DiffusiveState(np.ones(len(grid)), grid)
    assert lyapunov_kv_sliding((0.0, 0.0, 0.0), z, KV) == pytest.approx(0.2 * grid.weights.sum())
    mkv = ModifiedKVParams(1.0, 0.4, 0.2, 2.0, 0.56, 0.2)
    z2 = DiffusiveState.zeros(build_grid(0.8))
    assert lyapunov_mkv_sliding((1.0, 0.0, 0.0, 1.0), (zero, z2), mkv) == pytest.approx(1.5)
    assert lyapunov_duffing_sliding((1.0, 0.0, 1.0), zero, DUF) == pytest.approx(1.0)
    assert lyapunov_surface(0.0) == 0.0 and lyapunov_surface(2.0) == 2.0
    assert lyapunov_adaptive(0.0, 30.0, 30.0, 5.0) == 0.0
    assert lyapunov_adaptive(2.0, 0.0, 10.0, 5.0) == pytest.approx(12.0)


def test_diagnostics_on_synthetic_signals():
    t = np.linspace(0.0, 1.0, 101)
    decaying = np.exp(-5 * t)
    assert len(reaching_violations(t, decaying)) == 0
    assert len(reaching_violations(t, 1 + t)) == 99
    # s' = -r sign(s): V2' = -r |s| = -r sqrt(2 V2) exactly in continuous time
    s = np.maximum(1.0 - 2.0 * t, 0.0)
    frac, n = reaching_rate(t, s, rho1=2.0 * math.sqrt(2) * 0.99, m=1.0)
    assert n == 50 and frac == 1.0
    assert reaching_rate(t, np.zeros_like(t), 1.0, 1.0) == (1.0, 0)
    assert lyapunov_excess([3.0, 2.0, 2.0, 1.0]) == 0.0
    assert lyapunov_excess([1.0, 1.0 + 2e-8]) == pytest.approx(2.0)


def test_logged_surface_energy_is_half_s_squared(scenario_run):
    tr = scenario_run("kv_smc")
    assert np.array_equal(tr["v_surface"], 0.5 * tr["s"] * tr["s"])


def test_reaching_from_off_surface_state():
    # starting on s = 1, the known-bound law must drive s to the band monotonically
    cfg = SimConfig(KV, Forcing("cosine", 30.0, 6.0), KNOWN, dt=1e-5, T=1.0, decimation=100, v0=1.0)
    tr = simulate(cfg)
    assert tr["s"][0] == 1.0
    assert len(reaching_violations(tr.t, tr["s"])) == 0
    frac, n = reaching_rate(tr.t, tr["s"], rho1=math.sqrt(2) * 5.0, m=1.0)
    assert n > 10 and frac >= 0.95
    assert tr.summary()["max_abs_s"] == 1.0
    assert np.max(np.abs(tr["s"][tr.t > 0.5])) <= 1e-3
