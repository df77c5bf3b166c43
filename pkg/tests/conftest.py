from fractions import Fraction

import pytest

from geosampling.layout import layout_from_offsets, madow_layout

# inclusion probabilities of the seven-unit running example, in hundredths
PI7 = (38, 30, 42, 65, 25, 10, 90)
PI7_FLOAT = tuple(p / 100 for p in PI7)
TOP_OFFSETS = (0, 60, 30, 15, 55, 80, 0)
MIDDLE_OFFSETS = (0, 60, 30, 35, 10, 0, 10)


def frac_masses(design):
    return {s: Fraction(m, design.grid) for s, m in design.masses.items()}


@pytest.fixture
def madow7():
    return madow_layout(PI7, 100)


@pytest.fixture
def middle7():
    return layout_from_offsets(PI7, MIDDLE_OFFSETS, 100)


@pytest.fixture
def top7():
    return layout_from_offsets(PI7, TOP_OFFSETS, 100)


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
