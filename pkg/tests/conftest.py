import functools

import pytest

from fracsmc.cli import load_config
from fracsmc.engine import simulate


@functools.lru_cache(maxsize=None)
def _run(name):
    return simulate(load_config(name))


@pytest.fixture(scope="session")
def scenario_run():
    """Shipped scenario name -> Trajectory, simulated once per session."""
    return _run
