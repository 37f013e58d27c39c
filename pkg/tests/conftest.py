import numpy as np
import pytest

from mfsep.gf2bits import BitVec


def bv(text: str) -> BitVec:
    """Ket-order bit string, rightmost character is bit 0."""
    return BitVec.from_str(text)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.LINES):
        terminalreporter.write_line(mod.LINES[num])
