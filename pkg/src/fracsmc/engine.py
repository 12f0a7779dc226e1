"""Fixed-step closed-loop simulation, cross-validation and parameter sweeps.

Two independent integration routes are available:

``diffusive``
    Classic RK4 for (x, v, surface integrals) with the diffusive modes
    advanced by their exact exponential propagator. Inside a step the modes
    see the velocity as linear between the step start and the RK stage value,
    which makes the mode/plant coupling second order in dt. The control is
    computed once per step from the step-start state and held.
``gl_oracle``
    Central differences for x'' with every fractional derivative taken from
    the full Grünwald-Letnikov history. Shares no code with the diffusive
    kernels; its cost grows quadratically with the number of steps.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import ConfigError, SimulationDiverged
from .fracops import (
    DEFAULT_J,
    DEFAULT_OMEGA_MAX,
    DEFAULT_OMEGA_MIN,
    SampledSignal,
    caputo_power,
    diffusive_caputo,
    build_grid,
    gl_derivative,
    gl_weights,
    hold_coefficients,
)
from .models import FORCING_CODES, Forcing, accel_core, forcing_core, make_grids
from .smc import ControllerConfig, adapt_step, control_core, reaching_violations, surface_core

COLUMNS = ("t", "x1", "x2", "x3", "x4", "s", "u", "fhat", "v_surface", "v_energy")
METHODS = ("diffusive", "gl_oracle")
GL_MAX_STEPS = 100_000
SETTLE_BAND = 0.01
REACHING_BAND = 1e-3


@dataclass(frozen=True)
class SimConfig:
    plant: object
    forcing: Forcing = field(default_factory=lambda: Forcing("zero"))
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    dt: float = 1e-3
    T: float = 20.0
    J: int = DEFAULT_J
    omega_min: float = DEFAULT_OMEGA_MIN
    omega_max: float = DEFAULT_OMEGA_MAX
    method: str = "diffusive"
    decimation: int = 1
    # nonzero integer-state initial conditions are for validation runs only;
    # the fractional states always start from rest
    x0: float = 0.0
    v0: float = 0.0
    name: str = ""

    def __post_init__(self):
        for key in ("dt", "T", "omega_min", "omega_max", "x0", "v0"):
            value = float(getattr(self, key))
            if not math.isfinite(value):
                raise ConfigError(f"sim.{key} must be finite, got {value!r}")
            object.__setattr__(self, key, value)
        if not self.dt > 0:
            raise ConfigError(f"sim.dt must be > 0, got {self.dt!r}")
        if self.T < self.dt * (1 - 1e-9):
            raise ConfigError(f"sim.T must be >= dt, got T={self.T!r}, dt={self.dt!r}")
        if int(self.decimation) != self.decimation or self.decimation < 1:
            raise ConfigError(f"sim.decimation must be an integer >= 1, got {self.decimation!r}")
        object.__setattr__(self, "decimation", int(self.decimation))
        if int(self.J) != self.J or self.J < 2:
            raise ConfigError(f"sim.J must be an integer >= 2, got {self.J!r}")
        object.__setattr__(self, "J", int(self.J))
        if not 0 < self.omega_min < self.omega_max:
            raise ConfigError("sim.omega_min/omega_max must satisfy 0 < omega_min < omega_max")
        if self.method not in METHODS:
            raise ConfigError(f"sim.method must be one of {METHODS}, got {self.method!r}")
        if not self.forcing.covers(self.T):
            raise ConfigError("forcing table does not cover the simulation horizon")

    @property
    def steps(self) -> int:
        return int(math.floor(self.T / self.dt + 1e-9))

    @property
    def n_rows(self) -> int:
        return self.steps // self.decimation + 1

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


@dataclass(eq=False)
class Trajectory:
    data: np.ndarray
    config: SimConfig

    def __getitem__(self, name) -> np.ndarray:
        return self.data[:, COLUMNS.index(name)]

    def __len__(self):
        return len(self.data)

    @property
    def t(self):
        return self["t"]

    def summary(self) -> dict:
        return summarize(self)


def summarize(traj: Trajectory) -> dict:
    t, x1, s, fhat = traj["t"], traj["x1"], traj["s"], traj["fhat"]
    T = traj.config.T
    tail = t >= 0.5 * T - 1e-12
    outside = np.nonzero(np.abs(s) > SETTLE_BAND)[0]
    if len(outside) == 0:
        settle = 0.0
    elif outside[-1] == len(s) - 1:
        settle = math.inf
    else:
        settle = float(t[outside[-1] + 1])
    band = max(traj.config.controller.phi, REACHING_BAND)
    return {
        "rows": len(t),
        "max_abs_x1": float(np.max(np.abs(x1))),
        "tail_max_abs_x1": float(np.max(np.abs(x1[tail]))),
        "max_abs_s": float(np.max(np.abs(s))),
        "s_settling_time": settle,
        "fhat_final": float(fhat[-1]),
        "reaching_violations": int(len(reaching_violations(t, s, band))),
    }


# --- diffusive route ----------------------------------------------------------


@njit(cache=True)
def _diffusive_kernel(
    N, h, dec, x0, v0,
    m, stiff, cubic, c1, c2, nb,
    W, WEh, WEf, Ef, Af, Bf, ah, bh, af, bf,
    g1, g2, g3, kV,
    mode, eta, rho1s, rho2, mu, phi, ffc, ffl,
    fcode, A, Om, ts, fs,
    out, last,
):
    J = W.shape[1]
    Z = np.zeros((2, J))
    x = x0
    v = v0
    I1 = 0.0
    I2 = 0.0
    I3 = 0.0
    fhat = 0.0
    d = np.zeros(2)
    ph = np.zeros(2)
    pf = np.zeros(2)
    row = 0
    for n in range(N + 1):
        t = n * h
        s = surface_core(v, I1, I2, I3, g1, g2, g3)
        u = control_core(mode, s, x, fhat, eta, rho1s, rho2, phi, ffc, ffl)
        energy = 0.5 * kV * x * x + 0.5 * m * v * v
        for b in range(nb):
            acc = 0.0
            for j in range(J):
                acc += W[b, j] * Z[b, j] * Z[b, j]
            energy += 0.5 * (c1 if b == 0 else c2) * acc
        last[0] = t
        last[1] = x
        last[2] = d[0]
        if nb == 2:
            last[3] = d[1]
            last[4] = v
        else:
            last[3] = v
            last[4] = np.nan
        last[5] = s
        last[6] = u
        last[7] = fhat
        last[8] = 0.5 * s * s
        last[9] = energy
        if n % dec == 0:
            out[row, :] = last
            row += 1
        if n == N:
            break

        f0 = forcing_core(fcode, A, Om, ts, fs, t)
        fm = forcing_core(fcode, A, Om, ts, fs, t + 0.5 * h)
        f1 = forcing_core(fcode, A, Om, ts, fs, t + h)
        for b in range(nb):
            ph[b] = 0.0
            pf[b] = 0.0
            for j in range(J):
                ph[b] += WEh[b, j] * Z[b, j]
                pf[b] += WEf[b, j] * Z[b, j]

        # stage 1
        k1x = v
        k1v = accel_core(m, stiff, cubic, c1, c2, x, d[0], d[1], f0, u)
        k11, k12, k13 = x, d[0], d[1]
        s1 = s
        # stage 2
        xs = x + 0.5 * h * k1x
        vs = v + 0.5 * h * k1v
        J1 = I1 + 0.5 * h * k11
        J2 = I2 + 0.5 * h * k12
        J3 = I3 + 0.5 * h * k13
        e1 = ph[0] + ah[0] * v + bh[0] * vs
        e2 = ph[1] + ah[1] * v + bh[1] * vs if nb == 2 else 0.0
        k2x = vs
        k2v = accel_core(m, stiff, cubic, c1, c2, xs, e1, e2, fm, u)
        k21, k22, k23 = xs, e1, e2
        s2 = surface_core(vs, J1, J2, J3, g1, g2, g3)
        # stage 3
        xs = x + 0.5 * h * k2x
        vs = v + 0.5 * h * k2v
        J1 = I1 + 0.5 * h * k21
        J2 = I2 + 0.5 * h * k22
        J3 = I3 + 0.5 * h * k23
        e1 = ph[0] + ah[0] * v + bh[0] * vs
        e2 = ph[1] + ah[1] * v + bh[1] * vs if nb == 2 else 0.0
        k3x = vs
        k3v = accel_core(m, stiff, cubic, c1, c2, xs, e1, e2, fm, u)
        k31, k32, k33 = xs, e1, e2
        s3 = surface_core(vs, J1, J2, J3, g1, g2, g3)
        # stage 4
        xs = x + h * k3x
        vs = v + h * k3v
        J1 = I1 + h * k31
        J2 = I2 + h * k32
        J3 = I3 + h * k33
        e1 = pf[0] + af[0] * v + bf[0] * vs
        e2 = pf[1] + af[1] * v + bf[1] * vs if nb == 2 else 0.0
        k4x = vs
        k4v = accel_core(m, stiff, cubic, c1, c2, xs, e1, e2, f1, u)
        k41, k42, k43 = xs, e1, e2
        s4 = surface_core(vs, J1, J2, J3, g1, g2, g3)

        xn = x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        vn = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        I1 += h / 6.0 * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
        I2 += h / 6.0 * (k12 + 2.0 * k22 + 2.0 * k32 + k42)
        I3 += h / 6.0 * (k13 + 2.0 * k23 + 2.0 * k33 + k43)
        if mode == 2:
            # the rate does not depend on fhat, so the RK4 update is a quadrature
            sbar = (abs(s1) + 2.0 * abs(s2) + 2.0 * abs(s3) + abs(s4)) / 6.0
            fhat = fhat + mu / m * sbar * h
        for b in range(nb):
            acc = 0.0
            for j in range(J):
                Z[b, j] = Ef[b, j] * Z[b, j] + Af[b, j] * v + Bf[b, j] * vn
                acc += W[b, j] * Z[b, j]
            d[b] = acc
        x = xn
        v = vn
        ok = (
            math.isfinite(x) and math.isfinite(v) and math.isfinite(I1)
            and math.isfinite(I2) and math.isfinite(I3) and math.isfinite(fhat)
            and math.isfinite(d[0]) and math.isfinite(d[1])
        )
        if not ok:
            return row, n + 1
    return row, -1


def _simulate_diffusive(cfg: SimConfig) -> Trajectory:
    p, ctl, fo = cfg.plant, cfg.controller, cfg.forcing
    h = cfg.dt
    grids = make_grids(p, cfg.J, cfg.omega_min, cfg.omega_max)
    nb = len(grids)
    shape = (2, cfg.J)
    W, WEh, WEf, Ef, Af, Bf = (np.zeros(shape) for _ in range(6))
    ah, bh, af, bf = (np.zeros(2) for _ in range(4))
    for b, g in enumerate(grids):
        Eh_, Ah_, Bh_ = hold_coefficients(g.nodes, 0.5 * h)
        Ef_, Af_, Bf_ = hold_coefficients(g.nodes, h)
        W[b] = g.weights
        WEh[b] = g.weights * Eh_
        WEf[b] = g.weights * Ef_
        Ef[b], Af[b], Bf[b] = Ef_, Af_, Bf_
        ah[b], bh[b] = g.weights @ Ah_, g.weights @ Bh_
        af[b], bf[b] = g.weights @ Af_, g.weights @ Bf_
    damping = tuple(p.damping) + (0.0,)
    g1, g2, g3 = p.surface_gains
    ffc, ffl = p.feedforward
    ts, fs = fo.table_arrays
    out = np.empty((cfg.n_rows, len(COLUMNS)))
    last = np.full(len(COLUMNS), np.nan)
    rows, failed = _diffusive_kernel(
        cfg.steps, h, cfg.decimation, cfg.x0, cfg.v0,
        float(p.mass), float(p.stiffness), float(p.cubic), float(damping[0]), float(damping[1]), nb,
        W, WEh, WEf, Ef, Af, Bf, ah, bh, af, bf,
        float(g1), float(g2), float(g3), float(p.energy_stiffness),
        ctl.code, ctl.eta, ctl.rho1_over_sqrt2, ctl.rho2, float(ctl.mu or 0.0), ctl.phi,
        float(ffc), float(ffl),
        FORCING_CODES[fo.kind], fo.A, fo.omega, ts, fs,
        out, last,
    )
    if failed >= 0:
        raise SimulationDiverged(
            f"non-finite state at step {failed} (t={failed * h:.6g})",
            step=failed,
            last_row=dict(zip(COLUMNS, map(float, last))),
        )
    return Trajectory(out[:rows], cfg)


# --- Grünwald-Letnikov route -------------------------------------------------


def _simulate_gl(cfg: SimConfig) -> Trajectory:
    p, ctl, fo = cfg.plant, cfg.controller, cfg.forcing
    N, h = cfg.steps, cfg.dt
    if N > GL_MAX_STEPS:
        raise ConfigError(
            f"gl_oracle is limited to {GL_MAX_STEPS} steps (full-memory history); "
            f"this config needs {N}; raise dt or shorten T"
        )
    m, k, b = float(p.mass), float(p.stiffness), float(p.cubic)
    orders = p.orders
    damping = p.damping
    weights = [gl_weights(a, N + 1) for a in orders]
    scale = [h ** (-a) for a in orders]
    g1, g2, g3 = p.surface_gains
    ffc, ffl = p.feedforward
    f = fo(h * np.arange(N + 1))

    X = np.zeros(N + 1)  # displacement history relative to x0 (Caputo form)
    rows = []
    x_prev = None
    v = cfg.v0
    I = np.zeros(3)
    D_prev = np.zeros(2)
    fhat = 0.0
    a_prev = 0.0
    x = cfg.x0
    for n in range(N + 1):
        X[n] = x - cfg.x0
        D = np.zeros(2)
        hist = X[n::-1]
        for i, (g, sc) in enumerate(zip(weights, scale)):
            D[i] = sc * np.dot(g[: n + 1], hist)
        if n > 0:
            # half-step velocity plus a half-step of the previous acceleration
            v = (x - x_prev) / h + 0.5 * h * a_prev
            I += 0.5 * h * (np.array([x_prev, D_prev[0], D_prev[1]]) + np.array([x, D[0], D[1]]))
        s = surface_core(v, I[0], I[1], I[2], g1, g2, g3)
        u = control_core(ctl.code, s, x, fhat, ctl.eta, ctl.rho1_over_sqrt2, ctl.rho2, ctl.phi, ffc, ffl)
        a = accel_core(m, k, b, damping[0], damping[1] if len(damping) > 1 else 0.0, x, D[0], D[1], f[n], u)
        row = (n * h, x, D[0]) + ((D[1], v) if len(orders) == 2 else (v, np.nan))
        row += (s, u, fhat, 0.5 * s * s, np.nan)
        if not all(math.isfinite(val) for val in (x, v, a, s, u, *D, *I)):
            last = dict(zip(COLUMNS, map(float, rows[-1]))) if rows else None
            raise SimulationDiverged(f"non-finite state at step {n} (t={n * h:.6g})", step=n, last_row=last)
        if n % cfg.decimation == 0:
            rows.append(row)
        if n == N:
            break
        if ctl.mode == "adaptive":
            fhat = adapt_step(fhat, s, ctl, m, h)
        if x_prev is None:
            x_next = x + h * v + 0.5 * h * h * a
        else:
            x_next = 2.0 * x - x_prev + h * h * a
        x_prev, D_prev, a_prev = x, D, a
        x = x_next
    return Trajectory(np.array(rows, dtype=float), cfg)


def simulate(config: SimConfig) -> Trajectory:
    """Run one simulation from rest; identical configs give identical trajectories."""
    if config.method == "gl_oracle":
        return _simulate_gl(config)
    return _simulate_diffusive(config)


# --- cross-validation ---------------------------------------------------------


def rel_l2(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    num = np.linalg.norm(a - b)
    den = np.linalg.norm(b)
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return float(num / den)


def operator_fixture_errors(alpha: float, dt: float = 1e-3, t_min: float = 0.1, t_max: float = 10.0,
                            J: int = DEFAULT_J, omega_min: float = DEFAULT_OMEGA_MIN,
                            omega_max: float = DEFAULT_OMEGA_MAX) -> dict:
    """Max relative error of D^alpha t^p (p = 1, 2) on [t_min, t_max] for both kernels."""
    grid = build_grid(1.0 - alpha, J, omega_min, omega_max)
    report = {"gl": {}, "diffusive": {}}
    for p in (1, 2):
        x = SampledSignal.from_function(lambda t: t**p, dt, t_max)
        xdot = SampledSignal(dt, p * x.t ** (p - 1))
        mask = x.t >= t_min - 1e-12
        exact = caputo_power(p, alpha, x.t[mask])
        for key, approx in (
            ("gl", gl_derivative(x, alpha)),
            ("diffusive", diffusive_caputo(xdot, alpha, grid)),
        ):
            report[key][f"t{p}"] = float(np.max(np.abs(approx.values[mask] - exact) / exact))
    return report


def validate(config_a: SimConfig, config_b: SimConfig, fixtures: bool = True) -> dict:
    """Discrepancy report between two runs of the same scenario.

    ``config_b`` is the reference for the relative error.
    """
    if abs(config_a.T - config_b.T) > 1e-12:
        raise ConfigError(f"mismatched horizons: {config_a.T} vs {config_b.T}")
    ta, tb = simulate(config_a), simulate(config_b)
    xb = tb["x1"]
    if len(ta) != len(tb) or np.any(np.abs(ta.t - tb.t) > 1e-9):
        xb = np.interp(ta.t, tb.t, xb)
    report = {
        "methods": [config_a.method, config_b.method],
        "x1_max_abs": float(np.max(np.abs(ta["x1"] - xb))),
        "x1_rel_l2": rel_l2(ta["x1"], xb),
    }
    if fixtures:
        report["operator"] = {
            f"alpha={a:g}": operator_fixture_errors(
                a, J=config_a.J, omega_min=config_a.omega_min, omega_max=config_a.omega_max
            )
            for a in config_a.plant.orders
        }
    return report


# --- parameter sweeps ---------------------------------------------------------

_SECTIONS = ("plant", "forcing", "controller")


def apply_override(config: SimConfig, name: str, value) -> SimConfig:
    """Return ``config`` with the dotted parameter ``name`` set to ``value``.

    Names look like ``controller.rho2``, ``plant.c``, ``forcing.A`` or ``sim.dt``.
    """
    section, _, key = name.partition(".")
    if section == "sim":
        fields = {f.name for f in dataclasses.fields(SimConfig)} - set(_SECTIONS) - {"name"}
        if key not in fields:
            raise ConfigError(f"unknown sweep parameter {name!r}")
        return config.replace(**{key: value})
    if section not in _SECTIONS:
        raise ConfigError(f"unknown sweep parameter {name!r}")
    target = getattr(config, section)
    if key not in {f.name for f in dataclasses.fields(target)} or key in ("kind", "table"):
        raise ConfigError(f"unknown sweep parameter {name!r}")
    return config.replace(**{section: dataclasses.replace(target, **{key: value})})


def _sweep_point(config: SimConfig) -> dict:
    try:
        row = simulate(config).summary()
        row["diverged"] = False
    except SimulationDiverged as exc:
        row = {"diverged": True, "diverged_step": exc.step}
    return row


def sweep(base: SimConfig, grid: dict | None = None, workers: int | None = None) -> list[dict]:
    """One summary row per point of the Cartesian product of ``grid``.

    Rows come back in grid order whatever the worker count. An empty grid
    yields the base configuration alone.
    """
    grid = dict(grid or {})
    names = list(grid)
    points = list(itertools.product(*(grid[nm] for nm in names))) if names else [()]
    configs = []
    for values in points:
        cfg = base
        for nm, val in zip(names, values):
            if not math.isfinite(float(val)):
                raise ConfigError(f"sweep value for {nm!r} must be finite")
            cfg = apply_override(cfg, nm, val)
        configs.append(cfg)
    if workers and workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, configs))
    else:
        results = [_sweep_point(c) for c in configs]
    return [dict(zip(names, values), **res) for values, res in zip(points, results)]


def sliding_dynamics_config(config: SimConfig, x0: float = 0.0, v0: float = 0.1) -> SimConfig:
    """Unforced sliding-mode dynamics of ``config``'s plant as a simulation.

    For the KV plants these are the open-loop unforced plant; for the Duffing
    plant the surface gain replaces the stiffness and the cubic term drops.
    """
    p = config.plant
    if p.kind == "duffing":
        p = dataclasses.replace(p, a=p.surface_gain, b=0.0)
    return config.replace(
        plant=p, forcing=Forcing("zero"), controller=ControllerConfig(), x0=x0, v0=v0,
        method="diffusive",
    )
