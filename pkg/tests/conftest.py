import numpy as np
import pytest

from toposynth.primitives import cube, icosphere, torus

_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance_line():
    """Record one PASS/FAIL line; all lines are repeated in the terminal summary."""

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)


@pytest.fixture
def unit_cube():
    return cube(1.0)


@pytest.fixture
def small_torus():
    return torus(3, 3)


@pytest.fixture
def sphere():
    return icosphere(2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
