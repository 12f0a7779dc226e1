"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration or violated precondition (CLI exit code 2)."""


class ContractError(ValueError):
    """Arguments that are individually valid but inconsistent with each other."""


class NumericError(ArithmeticError):
    """Non-finite input or intermediate value."""


class SimulationDiverged(NumericError):
    """A simulation produced a non-finite state (CLI exit code 3).

    ``step`` is the index of the first step whose result was non-finite and
    ``last_row`` is the last fully finite logged-format record (a dict keyed by
    the trajectory column names), or ``None`` if nothing finite was produced.
    """

    def __init__(self, message, step=None, last_row=None):
        super().__init__(message)
        self.step = step
        self.last_row = last_row
