"""Sliding-mode control of single-degree-of-freedom fractional oscillators.

Modules
-------
fracops  diffusive and Grünwald-Letnikov fractional operators
models   Kelvin-Voigt, modified Kelvin-Voigt and Duffing plants
smc      sliding surfaces, control laws, Lyapunov diagnostics
engine   fixed-step simulation, cross-validation, sweeps
cli      scenario files, CSV output, exit codes
"""

from .engine import SimConfig, Trajectory, simulate, sweep, validate
from .errors import ConfigError, ContractError, NumericError, SimulationDiverged
from .models import DuffingParams, Forcing, KelvinVoigtParams, ModifiedKVParams
from .smc import ControllerConfig

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ContractError",
    "ControllerConfig",
    "DuffingParams",
    "Forcing",
    "KelvinVoigtParams",
    "ModifiedKVParams",
    "NumericError",
    "SimConfig",
    "SimulationDiverged",
    "Trajectory",
    "simulate",
    "sweep",
    "validate",
]
