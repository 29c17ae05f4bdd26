import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from phaseplace.generator import GeneratorConfig, generate_corpus

settings.register_profile(
    "default", max_examples=100, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_corpus():
    return generate_corpus(GeneratorConfig(n_disks=300, seed=11, days=2))


@pytest.fixture(scope="session")
def small_train():
    return generate_corpus(GeneratorConfig(n_disks=600, seed=12, days=2))


@pytest.fixture(scope="session")
def clean_corpus():
    return generate_corpus(GeneratorConfig(n_disks=2000, seed=5, days=1, unknown_fraction=0.0))


def day_trace(values):
    """One-day sample array from per-slot values (each repeated evenly)."""
    values = np.asarray(values, dtype=float)
    return np.repeat(values, 288 // len(values))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
