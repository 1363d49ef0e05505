import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from udnsim.config import SimConfig

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def cfg():
    return SimConfig()


@pytest.fixture
def model(cfg):
    return cfg.path_loss_model()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
