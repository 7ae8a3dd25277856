import pytest

from consensus_lens.config import config_from_mapping
from consensus_lens.engine import SimulationEngine
from consensus_lens.overlay import kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # pay any JIT compilation cost once, before anything is timed
    kernels.warmup()


@pytest.fixture
def run_sim():
    """Run a simulation from a config mapping; returns (engine, events)."""

    def _run(doc: dict):
        engine = SimulationEngine(config_from_mapping(doc))
        events = list(engine.run())
        return engine, events

    return _run
