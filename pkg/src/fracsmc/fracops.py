"""Numerical fractional-calculus kernels.

Two independent routes to the same operators, both assuming the signal is at
rest for t <= 0:

* the diffusive (frequency-distributed) route, where a fractional integral of
  order ``beta`` of an input ``v`` is the weighted superposition of first-order
  modes ``z' = -w z + v`` with density ``sin(beta*pi)/pi * w**-beta``; a
  Caputo derivative of order ``alpha`` is the order ``1 - alpha`` integral of
  the first derivative;
* Grünwald-Letnikov (GL) convolution with recursively generated binomial
  weights, used as the accuracy oracle for the first route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError, NumericError

DEFAULT_J = 60
DEFAULT_OMEGA_MIN = 1e-4
DEFAULT_OMEGA_MAX = 1e4

# below this value of w*dt the first-order-hold coefficient uses its series
_SERIES_CUTOFF = 1e-2


class FracOrder(float):
    """A fractional order strictly inside (0, 1).

    Behaves as a plain ``float`` once constructed.
    """

    def __new__(cls, alpha):
        value = float(alpha)
        if not (0.0 < value < 1.0) or not math.isfinite(value):
            raise ConfigError(f"fractional order must lie in (0, 1), got {alpha!r}")
        return super().__new__(cls, value)


@dataclass(frozen=True)
class SampledSignal:
    """Uniform samples ``values[n] = x(n*h)`` starting at t = 0."""

    h: float
    values: np.ndarray

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigError(f"sample step must be positive, got {self.h!r}")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @property
    def t(self) -> np.ndarray:
        return self.h * np.arange(len(self.values))

    @classmethod
    def from_function(cls, fn, h: float, T: float) -> "SampledSignal":
        n = int(math.floor(T / h + 1e-9))
        t = h * np.arange(n + 1)
        return cls(h, fn(t))


def mu_weight(alpha, omega):
    """Density of the diffusive representation of the order-``alpha`` integral."""
    alpha = FracOrder(alpha)
    omega = np.asarray(omega, dtype=float)
    if np.any(~(omega > 0)):
        raise ConfigError("mu_weight is defined for omega > 0 only")
    out = math.sin(alpha * math.pi) / math.pi * omega ** (-alpha)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class DiffusiveGrid:
    """Frequency nodes and quadrature weights for one integral order.

    ``weights @ z`` approximates the integral of ``mu_weight(alpha_weighted, w) * z(w)``
    over (0, inf).
    """

    nodes: np.ndarray
    weights: np.ndarray
    alpha_weighted: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 2 or nodes.shape != weights.shape:
            raise ConfigError("grid needs >= 2 nodes and one weight per node")
        if np.any(nodes <= 0) or np.any(np.diff(nodes) <= 0):
            raise ConfigError("grid nodes must be positive and strictly increasing")
        if np.any(weights < 0):
            raise ConfigError("grid weights must be non-negative")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "alpha_weighted", FracOrder(self.alpha_weighted))

    def __len__(self):
        return len(self.nodes)


def build_grid(
    alpha_weighted,
    J: int = DEFAULT_J,
    omega_min: float = DEFAULT_OMEGA_MIN,
    omega_max: float = DEFAULT_OMEGA_MAX,
    tails: bool = True,
) -> DiffusiveGrid:
    """Log-spaced frequency grid with trapezoidal weights in log(omega).

    With ``tails=True`` the two end weights also absorb the truncated parts of
    the measure, using the quasi-static mode values at each end: below
    ``omega_min`` a mode integrates its input (z ~ z[0]); above ``omega_max``
    it tracks it (z ~ v/omega ~ z[-1]*omega_max/omega). Without this the
    truncated tails bias the reconstruction by a few percent.
    """
    beta = FracOrder(alpha_weighted)
    if int(J) != J or J < 2:
        raise ConfigError(f"grid needs J >= 2 nodes, got {J!r}")
    if not (0 < omega_min < omega_max) or not math.isfinite(omega_max):
        raise ConfigError(
            f"need 0 < omega_min < omega_max, got [{omega_min!r}, {omega_max!r}]"
        )
    J = int(J)
    nodes = np.logspace(math.log10(omega_min), math.log10(omega_max), J)
    nodes[0], nodes[-1] = omega_min, omega_max
    du = math.log(omega_max / omega_min) / (J - 1)
    # d(omega) = omega d(log omega)
    weights = mu_weight(beta, nodes) * nodes * du
    weights[0] *= 0.5
    weights[-1] *= 0.5
    if tails:
        scale = math.sin(beta * math.pi) / math.pi
        weights[0] += scale * omega_min ** (1.0 - beta) / (1.0 - beta)
        weights[-1] += scale * omega_max ** (1.0 - beta) / beta
    return DiffusiveGrid(nodes, weights, beta)


@dataclass(frozen=True, eq=False)
class DiffusiveState:
    z: np.ndarray
    grid: DiffusiveGrid

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.shape != self.grid.nodes.shape:
            raise ContractError("state length differs from its grid")
        object.__setattr__(self, "z", z)

    @classmethod
    def zeros(cls, grid: DiffusiveGrid) -> "DiffusiveState":
        return cls(np.zeros(len(grid)), grid)


def _hold_series(x):
    return 0.5 - x / 3.0 + x**2 / 8.0 - x**3 / 30.0 + x**4 / 144.0


def hold_coefficients(nodes, tau: float):
    """Exact one-step propagators of ``z' = -w z + v`` over a step ``tau``.

    For ``v`` varying linearly from ``v0`` to ``v1`` across the step,
    ``z(tau) = decay*z(0) + c_start*v0 + c_end*v1`` holds exactly; for a held
    (constant) input ``c_start + c_end = (1 - exp(-w tau))/w``.
    """
    if not tau > 0:
        raise ConfigError(f"step must be positive, got {tau!r}")
    w = np.asarray(nodes, dtype=float)
    x = w * tau
    decay = np.exp(-x)
    held = -np.expm1(-x) / w
    small = x < _SERIES_CUTOFF
    xs = np.where(small, 1.0, x)
    # (1 - e^-x (1 + x)) / x^2, cancellation-free near 0
    g = np.where(small, _hold_series(x), (1.0 - decay * (1.0 + xs)) / xs**2)
    c_start = tau * g
    return decay, c_start, held - c_start


def diffusive_step(state: DiffusiveState, v: float, dt: float, v_end=None) -> DiffusiveState:
    """Advance every mode by ``dt`` with the exact exponential update.

    ``v`` is held constant over the step unless ``v_end`` is given, in which
    case the input is taken to vary linearly from ``v`` to ``v_end``.
    """
    if not (math.isfinite(v) and (v_end is None or math.isfinite(v_end))):
        raise NumericError(f"non-finite diffusive input {v!r}")
    decay, c_start, c_end = hold_coefficients(state.grid.nodes, dt)
    v1 = v if v_end is None else v_end
    return DiffusiveState(decay * state.z + c_start * v + c_end * v1, state.grid)


def reconstruct_caputo(state: DiffusiveState, alpha) -> float:
    """Caputo derivative of order ``alpha`` of the signal whose derivative drove ``state``."""
    alpha = FracOrder(alpha)
    if abs(state.grid.alpha_weighted - (1.0 - alpha)) > 1e-12:
        raise ContractError(
            f"grid weighted for order {state.grid.alpha_weighted}, "
            f"but a derivative of order {alpha} needs {1.0 - alpha}"
        )
    return float(state.grid.weights @ state.z)


def diffusive_caputo(derivative: SampledSignal, alpha, grid: DiffusiveGrid | None = None) -> SampledSignal:
    """Caputo derivative samples of x from samples of its first derivative.

    The derivative is interpolated linearly between samples.
    """
    alpha = FracOrder(alpha)
    if grid is None:
        grid = build_grid(1.0 - alpha)
    elif abs(grid.alpha_weighted - (1.0 - alpha)) > 1e-12:
        raise ContractError("grid order does not match 1 - alpha")
    v = derivative.values
    if not np.all(np.isfinite(v)):
        raise NumericError("non-finite derivative samples")
    decay, c_start, c_end = hold_coefficients(grid.nodes, derivative.h)
    z = np.zeros(len(grid))
    out = np.zeros(len(v))
    for n in range(len(v) - 1):
        z = decay * z + c_start * v[n] + c_end * v[n + 1]
        out[n + 1] = grid.weights @ z
    return SampledSignal(derivative.h, out)


def gl_coefficients(order: float, n: int) -> np.ndarray:
    """First ``n`` Grünwald-Letnikov weights of ``(1 - q)**order``.

    Negative ``order`` gives fractional-integral weights.
    """
    g = np.empty(n)
    if n == 0:
        return g
    g[0] = 1.0
    for j in range(1, n):
        g[j] = g[j - 1] * (1.0 - (order + 1.0) / j)
    return g


def gl_weights(alpha, n: int) -> np.ndarray:
    return gl_coefficients(FracOrder(alpha), n)


def _gl_convolve(x: SampledSignal, order: float) -> SampledSignal:
    n = len(x.values)
    g = gl_coefficients(order, n)
    y = np.convolve(g, x.values)[:n] * x.h ** (-order)
    return SampledSignal(x.h, y)


def gl_derivative(x: SampledSignal, alpha) -> SampledSignal:
    """Full-memory GL derivative of order ``alpha``.

    Coincides with the Caputo derivative to O(h) when x(0) = 0. A nonzero
    x(0) adds the Riemann-Liouville term x(0) t^-alpha / Gamma(1 - alpha).
    """
    return _gl_convolve(x, FracOrder(alpha))


def rl_integral(x: SampledSignal, alpha) -> SampledSignal:
    """Riemann-Liouville integral of order ``alpha`` by GL convolution."""
    return _gl_convolve(x, -FracOrder(alpha))


def caputo_power(p: float, alpha: float, t):
    """Analytic Caputo derivative of t**p (p > 0): Gamma(p+1)/Gamma(p+1-alpha) t**(p-alpha)."""
    t = np.asarray(t, dtype=float)
    return math.gamma(p + 1.0) / math.gamma(p + 1.0 - alpha) * t ** (p - alpha)
