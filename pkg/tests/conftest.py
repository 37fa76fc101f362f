import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from kg2d.potential import PotentialSpec  # noqa: E402


@pytest.fixture
def free():
    return PotentialSpec.free()


@pytest.fixture
def well():
    """Shallow square well with a single weakly bound m = 0 particle state."""
    return PotentialSpec.square_well(0.5)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[key])
