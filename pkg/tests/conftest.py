import numpy as np
import pytest

from safenav import kernels


@pytest.fixture(params=sorted(kernels.backends()))
def backend(request):
    """Each importable geometry backend module."""
    return kernels.backends()[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; returns the verdict so tests can assert it."""
    def record(number, label, ok, detail=""):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip()
        _CRITERIA.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
