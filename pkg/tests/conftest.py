import os

import numpy as np
import pytest

from flexsusp import SuspensionParams, io

DATA = os.path.join(os.path.dirname(__file__), "..", "src", "flexsusp", "data")


def data_path(name):
    return os.path.join(DATA, name)


@pytest.fixture
def unit6():
    """Equal-length N=6 parameters."""
    return SuspensionParams(np.ones(6), np.ones(6), np.ones(6))


@pytest.fixture(scope="session")
def bundled():
    """Every bundled suspension document, loaded once."""
    names = sorted(n for n in os.listdir(DATA)
                   if n.startswith(("example_", "equal_", "perturbed_")))
    return {n: io.read_suspension(data_path(n)) for n in names}


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance_line(request):
    """Record and print the one-line verdict of an acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(n, ok, detail):
        text = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines[n] = text
        print(text)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
