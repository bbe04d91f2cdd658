import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dirac_modspace.grid import Grid

settings.register_profile(
    "repo", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(20240611))


@pytest.fixture
def grid1():
    return Grid(1, 64, 10.0)


@pytest.fixture
def grid2():
    return Grid(2, 16, 8.0)


_VERDICTS = []


@pytest.fixture
def verdict(capsys):
    """Record one acceptance line; printed live and again in the terminal summary."""

    def record(number, title, ok, detail=""):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip()
        _VERDICTS.append((number, line))
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_VERDICTS):
            terminalreporter.write_line(line)
