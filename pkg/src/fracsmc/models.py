"""Single-degree-of-freedom fractional oscillator plants.

Each plant is written as an augmented ordinary system: displacement and
velocity, plus one bank of diffusive modes per fractional damping term. The
modes of a bank are driven by the velocity, so the bank reconstructs the
Caputo derivative of the displacement. The observation functions expose the
controller-facing state vectors:

* Kelvin-Voigt and Duffing: (x, D^a x, x')
* modified Kelvin-Voigt:    (x, D^a1 x, D^a2 x, x')
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np
from numba import njit

from .errors import ConfigError, ContractError
from .fracops import (
    DEFAULT_J,
    DEFAULT_OMEGA_MAX,
    DEFAULT_OMEGA_MIN,
    DiffusiveGrid,
    DiffusiveState,
    FracOrder,
    build_grid,
    reconstruct_caputo,
)


def _finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value!r}")
    return value


def _positive(name, value):
    value = _finite(name, value)
    if value <= 0:
        raise ConfigError(f"{name} must be > 0, got {value!r}")
    return value


def _nonnegative(name, value):
    value = _finite(name, value)
    if value < 0:
        raise ConfigError(f"{name} must be >= 0, got {value!r}")
    return value


def _order(name, value):
    try:
        return FracOrder(value)
    except ConfigError as exc:
        raise ConfigError(f"{name}: {exc}") from None


@dataclass(frozen=True)
class KelvinVoigtParams:
    """m x'' + c D^alpha x + k x = f + u"""

    kind: ClassVar[str] = "kelvin_voigt"

    m: float
    c: float
    k: float
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "m", _positive("m", self.m))
        object.__setattr__(self, "c", _nonnegative("c", self.c))
        object.__setattr__(self, "k", _positive("k", self.k))
        object.__setattr__(self, "alpha", _order("alpha", self.alpha))

    mass = property(lambda self: self.m)
    stiffness = property(lambda self: self.k)
    cubic = property(lambda self: 0.0)
    damping = property(lambda self: (self.c,))
    orders = property(lambda self: (self.alpha,))
    energy_stiffness = property(lambda self: self.k)
    feedforward = property(lambda self: (0.0, 0.0))

    @property
    def surface_gains(self):
        return (self.k / self.m, self.c / self.m, 0.0)


@dataclass(frozen=True)
class ModifiedKVParams:
    """m x'' + c1 D^alpha1 x + c2 D^alpha2 x + k x = f + u

    The orders are not required to be sorted; they only have to differ.
    """

    kind: ClassVar[str] = "modified_kelvin_voigt"

    m: float
    c1: float
    c2: float
    k: float
    alpha1: float
    alpha2: float

    def __post_init__(self):
        object.__setattr__(self, "m", _positive("m", self.m))
        object.__setattr__(self, "c1", _nonnegative("c1", self.c1))
        object.__setattr__(self, "c2", _nonnegative("c2", self.c2))
        object.__setattr__(self, "k", _positive("k", self.k))
        object.__setattr__(self, "alpha1", _order("alpha1", self.alpha1))
        object.__setattr__(self, "alpha2", _order("alpha2", self.alpha2))
        if self.alpha1 == self.alpha2:
            raise ConfigError("alpha1 and alpha2 must differ (x2 and x3 would coincide)")

    mass = property(lambda self: self.m)
    stiffness = property(lambda self: self.k)
    cubic = property(lambda self: 0.0)
    damping = property(lambda self: (self.c1, self.c2))
    orders = property(lambda self: (self.alpha1, self.alpha2))
    energy_stiffness = property(lambda self: self.k)
    feedforward = property(lambda self: (0.0, 0.0))

    @property
    def surface_gains(self):
        return (self.k / self.m, self.c1 / self.m, self.c2 / self.m)


@dataclass(frozen=True)
class DuffingParams:
    """x'' + c D^alpha x + a x + b x^3 = f + u  (unit mass)

    ``surface_gain`` is the controller's design stiffness in the sliding
    surface, not a plant coefficient.
    """

    kind: ClassVar[str] = "duffing"

    a: float
    b: float
    c: float
    alpha: float
    surface_gain: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "a", _finite("a", self.a))
        object.__setattr__(self, "b", _finite("b", self.b))
        object.__setattr__(self, "c", _nonnegative("c", self.c))
        object.__setattr__(self, "alpha", _order("alpha", self.alpha))
        object.__setattr__(self, "surface_gain", _positive("surface_gain", self.surface_gain))

    mass = property(lambda self: 1.0)
    stiffness = property(lambda self: self.a)
    cubic = property(lambda self: self.b)
    damping = property(lambda self: (self.c,))
    orders = property(lambda self: (self.alpha,))
    energy_stiffness = property(lambda self: self.surface_gain)

    @property
    def feedforward(self):
        # cubic and linear coefficients of the model-cancelling control part
        return (self.b, self.a - self.surface_gain)

    @property
    def surface_gains(self):
        return (self.surface_gain, self.c, 0.0)


PLANTS = {p.kind: p for p in (KelvinVoigtParams, ModifiedKVParams, DuffingParams)}


@dataclass(frozen=True)
class Forcing:
    """External force f(t): ``A cos(omega t)``, zero, or a linearly interpolated table."""

    kind: str = "cosine"
    A: float = 0.0
    omega: float = 0.0
    table: tuple = ()

    def __post_init__(self):
        if self.kind not in ("cosine", "zero", "tabulated"):
            raise ConfigError(f"unknown forcing kind {self.kind!r}")
        object.__setattr__(self, "A", _finite("A", self.A))
        object.__setattr__(self, "omega", _finite("omega", self.omega))
        table = tuple((float(t), float(f)) for t, f in self.table)
        if self.kind == "tabulated":
            if len(table) < 2:
                raise ConfigError("tabulated forcing needs at least two (t, f) points")
            ts = np.array([row[0] for row in table])
            if ts[0] != 0.0 or np.any(np.diff(ts) <= 0):
                raise ConfigError("forcing table times must start at 0 and increase")
            if not np.all(np.isfinite(table)):
                raise ConfigError("forcing table must be finite")
        object.__setattr__(self, "table", table)

    @property
    def table_arrays(self):
        if not self.table:
            return np.zeros(1), np.zeros(1)
        arr = np.array(self.table, dtype=float)
        return arr[:, 0].copy(), arr[:, 1].copy()

    def covers(self, T: float) -> bool:
        return self.kind != "tabulated" or self.table[-1][0] >= T - 1e-12

    def __call__(self, t):
        return forcing_eval(self, t)


def forcing_eval(forcing: Forcing, t):
    if forcing.kind == "cosine":
        return forcing.A * np.cos(forcing.omega * np.asarray(t, dtype=float))
    if forcing.kind == "zero":
        return np.zeros_like(np.asarray(t, dtype=float))
    ts, fs = forcing.table_arrays
    return np.interp(t, ts, fs)


# forcing kind codes used by the compiled stepper
FORCING_CODES = {"cosine": 0, "zero": 1, "tabulated": 2}


@njit(cache=True)
def forcing_core(code, A, omega, ts, fs, t):
    if code == 0:
        return A * math.cos(omega * t)
    if code == 1:
        return 0.0
    return np.interp(t, ts, fs)


@njit(cache=True)
def accel_core(m, stiffness, cubic, c1, c2, x, d1, d2, f, u):
    """x'' for the generic plant m x'' + c1 d1 + c2 d2 + stiffness x + cubic x^3 = f + u."""
    return (-stiffness * x - cubic * x * x * x - c1 * d1 - c2 * d2 + f + u) / m


def make_grids(params, J=DEFAULT_J, omega_min=DEFAULT_OMEGA_MIN, omega_max=DEFAULT_OMEGA_MAX):
    """One grid per fractional damping term, weighted for order 1 - alpha_i."""
    return tuple(build_grid(1.0 - a, J, omega_min, omega_max) for a in params.orders)


@dataclass(frozen=True)
class PlantState:
    x: float = 0.0
    v: float = 0.0
    banks: tuple = ()
    I1: float = 0.0
    I2: float = 0.0
    I3: float = 0.0
    fhat: float = 0.0
    t: float = field(default=0.0, compare=False)

    @classmethod
    def zeros(cls, params, grids=None) -> "PlantState":
        grids = make_grids(params) if grids is None else grids
        if len(grids) != len(params.orders):
            raise ContractError("one grid per fractional order is required")
        return cls(banks=tuple(DiffusiveState.zeros(g) for g in grids))

    @property
    def integrals(self):
        return (self.I1, self.I2, self.I3)


def _check_banks(state, params):
    if len(state.banks) != len(params.orders):
        raise ContractError(
            f"{params.kind} needs {len(params.orders)} diffusive bank(s), got {len(state.banks)}"
        )


def kv_observe(state: PlantState, params: KelvinVoigtParams):
    _check_banks(state, params)
    return (state.x, reconstruct_caputo(state.banks[0], params.alpha), state.v)


def mkv_observe(state: PlantState, params: ModifiedKVParams):
    _check_banks(state, params)
    return (
        state.x,
        reconstruct_caputo(state.banks[0], params.alpha1),
        reconstruct_caputo(state.banks[1], params.alpha2),
        state.v,
    )


def duffing_observe(state: PlantState, params: DuffingParams):
    _check_banks(state, params)
    return (state.x, reconstruct_caputo(state.banks[0], params.alpha), state.v)


def kv_accel(obs, params: KelvinVoigtParams, f: float, u: float) -> float:
    x1, x2, _ = obs
    return accel_core(params.m, params.k, 0.0, params.c, 0.0, x1, x2, 0.0, f, u)


def mkv_accel(obs, params: ModifiedKVParams, f: float, u: float) -> float:
    x1, x2, x3, _ = obs
    return accel_core(params.m, params.k, 0.0, params.c1, params.c2, x1, x2, x3, f, u)


def duffing_accel(obs, params: DuffingParams, f: float, u: float) -> float:
    x1, x2, _ = obs
    return accel_core(1.0, params.a, params.b, params.c, 0.0, x1, x2, 0.0, f, u)


_OBSERVE = {"kelvin_voigt": kv_observe, "modified_kelvin_voigt": mkv_observe, "duffing": duffing_observe}
_ACCEL = {"kelvin_voigt": kv_accel, "modified_kelvin_voigt": mkv_accel, "duffing": duffing_accel}


def observe(state, params):
    return _OBSERVE[params.kind](state, params)


def accel(obs, params, f, u):
    return _ACCEL[params.kind](obs, params, f, u)
