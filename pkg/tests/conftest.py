import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kuramoto_kinetic.core import make_frequency_density
from kuramoto_kinetic.presets import Preset

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# lines recorded by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def single_fiber():
    return make_frequency_density("atoms", atoms={0.0: 1.0})


@pytest.fixture
def two_atoms():
    return make_frequency_density("atoms", atoms={-0.5: 0.5, 0.5: 0.5})


@pytest.fixture
def uniform8():
    return make_frequency_density("uniform", C=0.5, n=8)


@pytest.fixture
def smooth_preset():
    return Preset("raised-cosine", np.pi, 1.0, 0.5)
