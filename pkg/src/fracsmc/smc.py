"""Sliding surfaces, switching/adaptive control laws and Lyapunov diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError, ContractError

MODES = ("open_loop", "known_bound", "adaptive")
MODE_CODES = {name: i for i, name in enumerate(MODES)}


@dataclass(frozen=True)
class ControllerConfig:
    """Controller gains.

    ``eta`` is the combined switching gain F + rho1/sqrt(2) used in
    ``known_bound`` mode. In ``adaptive`` mode the switching gain is
    ``fhat + rho1_over_sqrt2`` with ``fhat`` adapted online at rate
    ``(mu/m)|s|``. ``phi > 0`` replaces sign(s) by a saturation of width phi.
    """

    mode: str = "open_loop"
    eta: float = 0.0
    rho1_over_sqrt2: float = 0.0
    rho2: float = 0.0
    mu: float | None = None
    phi: float = 0.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"controller mode must be one of {MODES}, got {self.mode!r}")
        for name in ("eta", "rho1_over_sqrt2", "rho2", "phi"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value >= 0):
                raise ConfigError(f"{name} must be finite and >= 0, got {value!r}")
            object.__setattr__(self, name, value)
        if self.mode == "adaptive":
            if self.mu is None or not (math.isfinite(self.mu) and self.mu > 0):
                raise ConfigError("adaptive mode needs an adaptation gain mu > 0")
        if self.mu is not None:
            object.__setattr__(self, "mu", float(self.mu))

    @property
    def code(self) -> int:
        return MODE_CODES[self.mode]


@njit(cache=True)
def sign_core(s):
    if s > 0.0:
        return 1.0
    if s < 0.0:
        return -1.0
    return 0.0


@njit(cache=True)
def switch_core(s, phi):
    if phi == 0.0:
        return sign_core(s)
    return min(1.0, max(-1.0, s / phi))


@njit(cache=True)
def surface_core(v, I1, I2, I3, g1, g2, g3):
    return v + g1 * I1 + g2 * I2 + g3 * I3


@njit(cache=True)
def control_core(mode, s, x, fhat, eta, rho1s, rho2, phi, ff_cubic, ff_lin):
    """Control for every plant; ``ff_*`` are the model-cancelling terms (Duffing only)."""
    if mode == 0:
        return 0.0
    gain = eta if mode == 1 else fhat + rho1s
    return ff_cubic * x * x * x + ff_lin * x - gain * switch_core(s, phi) - rho2 * s


def switch(s: float, phi: float = 0.0) -> float:
    """sign(s) with sign(0) = 0, or its saturation clamp(s/phi, -1, 1) for phi > 0."""
    return switch_core(float(s), float(phi))


def surface_kv(obs, integrals, params) -> float:
    I1, I2 = integrals[0], integrals[1]
    return surface_core(obs[2], I1, I2, 0.0, params.k / params.m, params.c / params.m, 0.0)


def surface_mkv(obs, integrals, params) -> float:
    I1, I2, I3 = integrals
    g1, g2, g3 = params.surface_gains
    return surface_core(obs[3], I1, I2, I3, g1, g2, g3)


def surface_duffing(obs, integrals, params) -> float:
    I1, I2 = integrals[0], integrals[1]
    return surface_core(obs[2], I1, I2, 0.0, params.surface_gain, params.c, 0.0)


_SURFACES = {"kelvin_voigt": surface_kv, "modified_kelvin_voigt": surface_mkv, "duffing": surface_duffing}


def surface(obs, integrals, params) -> float:
    return _SURFACES[params.kind](obs, integrals, params)


def control_known_bound(s: float, cfg: ControllerConfig) -> float:
    if cfg.mode != "known_bound":
        raise ContractError(f"control_known_bound called with mode {cfg.mode!r}")
    return control_core(1, float(s), 0.0, 0.0, cfg.eta, 0.0, cfg.rho2, cfg.phi, 0.0, 0.0)


def control_adaptive(s: float, fhat: float, cfg: ControllerConfig) -> float:
    if cfg.mode != "adaptive":
        raise ContractError(f"control_adaptive called with mode {cfg.mode!r}")
    if fhat < 0:
        raise ContractError(f"bound estimate must be >= 0, got {fhat!r}")
    return control_core(2, float(s), 0.0, float(fhat), 0.0, cfg.rho1_over_sqrt2, cfg.rho2, cfg.phi, 0.0, 0.0)


def adapt_rate(s: float, cfg: ControllerConfig, m: float) -> float:
    return cfg.mu / m * abs(s)


def adapt_step(fhat: float, s: float, cfg: ControllerConfig, m: float, dt: float) -> float:
    """One explicit step of the bound-estimate rate law."""
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt!r}")
    return fhat + adapt_rate(s, cfg, m) * dt


def control_duffing(obs, s: float, cfg: ControllerConfig, params, fhat: float = 0.0) -> float:
    """Model-cancelling part plus the switching part of the chosen mode."""
    if cfg.mode == "open_loop":
        raise ContractError("control_duffing needs a closed-loop mode")
    ff_cubic, ff_lin = params.feedforward
    return control_core(
        cfg.code, float(s), float(obs[0]), float(fhat),
        cfg.eta, cfg.rho1_over_sqrt2, cfg.rho2, cfg.phi, ff_cubic, ff_lin,
    )


def control(obs, s, cfg: ControllerConfig, params, fhat: float = 0.0) -> float:
    """Control for any plant (the model-cancelling part is zero for KV plants)."""
    ff_cubic, ff_lin = params.feedforward
    return control_core(
        cfg.code, float(s), float(obs[0]), float(fhat),
        cfg.eta, cfg.rho1_over_sqrt2, cfg.rho2, cfg.phi, ff_cubic, ff_lin,
    )


# --- Lyapunov functions -----------------------------------------------------


def _mode_energy(zstate) -> float:
    return float(zstate.grid.weights @ (zstate.z * zstate.z))


def lyapunov_kv_sliding(obs, zstate, params) -> float:
    """V1 = k x1^2/2 + (c/2) sum_j w_j z_j^2 + m x3^2/2."""
    x1, _, x3 = obs
    return 0.5 * params.k * x1 * x1 + 0.5 * params.c * _mode_energy(zstate) + 0.5 * params.m * x3 * x3


def lyapunov_mkv_sliding(obs, zstates, params) -> float:
    """V3, with squared modes in both damping integrals."""
    x1, _, _, x4 = obs
    z1, z2 = zstates
    return (
        0.5 * params.k * x1 * x1
        + 0.5 * params.c1 * _mode_energy(z1)
        + 0.5 * params.c2 * _mode_energy(z2)
        + 0.5 * params.m * x4 * x4
    )


def lyapunov_duffing_sliding(obs, zstate, params) -> float:
    """V5 = k x1^2/2 + x3^2/2 + (c/2) sum_j w_j z_j^2 with the surface gain k."""
    x1, _, x3 = obs
    return 0.5 * params.surface_gain * x1 * x1 + 0.5 * x3 * x3 + 0.5 * params.c * _mode_energy(zstate)


def lyapunov_surface(s: float) -> float:
    return 0.5 * s * s


def lyapunov_adaptive(s: float, fhat: float, F: float, mu: float) -> float:
    return 0.5 * (s * s + (fhat - F) ** 2 / mu)


# --- trajectory diagnostics -------------------------------------------------


def central_difference(t, y):
    """dy/dt at interior samples (length len(y) - 2)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    return (y[2:] - y[:-2]) / (t[2:] - t[:-2])


def reaching_violations(t, s, band: float = 1e-3) -> np.ndarray:
    """Indices of interior samples with |s| > band where s * ds/dt >= 0."""
    s = np.asarray(s, dtype=float)
    sdot = central_difference(t, s)
    inner = s[1:-1]
    bad = (np.abs(inner) > band) & (inner * sdot >= 0.0)
    return np.nonzero(bad)[0] + 1


def reaching_rate(t, s, rho1: float, m: float, band: float = 1e-3):
    """Fraction of steps obeying dV2/dt <= -(rho1/m) sqrt(V2).

    A step n -> n+1 qualifies when |s_n| > band. The finite difference of
    V2 = s^2/2 is compared against the bound evaluated at the end of the step
    (the smaller of the two values while V2 decreases). Returns
    ``(fraction, n_qualifying)``; with no qualifying step the fraction is 1.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    V = 0.5 * s * s
    rate = np.diff(V) / np.diff(t)
    bound = -(rho1 / m) * np.sqrt(V[1:])
    qualifying = np.abs(s[:-1]) > band
    n = int(qualifying.sum())
    if n == 0:
        return 1.0, 0
    ok = rate[qualifying] <= bound[qualifying]
    return float(ok.mean()), n


def lyapunov_excess(V, rtol: float = 1e-8) -> float:
    """Largest per-step increase of V measured in units of rtol * max(1, V).

    Values <= 1 mean V is nonincreasing up to the tolerance.
    """
    V = np.asarray(V, dtype=float)
    if len(V) < 2:
        return 0.0
    inc = np.diff(V) / (rtol * np.maximum(1.0, V[:-1]))
    return float(max(inc.max(), 0.0))
