from __future__ import annotations

import pytest

from qtrans.groebner import Ideal
from qtrans.poly import PolyRing

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


def ideal(names, *gens) -> Ideal:
    R = PolyRing(tuple(names))
    return Ideal(R, [R.parse(g) for g in gens])


@pytest.fixture
def R2():
    return PolyRing(("x", "y"))


@pytest.fixture
def R3():
    return PolyRing(("x", "y", "z"))
