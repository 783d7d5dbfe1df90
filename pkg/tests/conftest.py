import sys

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

coord = st.floats(min_value=-20.0, max_value=20.0, allow_nan=False, allow_infinity=False)
momenta = st.tuples(coord, coord, coord).map(np.array)


@st.composite
def unit_vectors(draw):
    v = np.array(draw(st.tuples(coord, coord, coord)))
    n = np.linalg.norm(v)
    if n < 1e-3:
        return np.array([0.0, 0.0, 1.0])
    v = v / n
    return v / np.linalg.norm(v)


@pytest.fixture(scope="session")
def small_grid():
    from relkin.grid import MomentumGrid

    return MomentumGrid(radial_nodes=12, sphere_nodes=26)


@pytest.fixture(scope="session")
def small_soft(small_grid):
    from relkin.crosssec import CrossSection
    from relkin.linop import assemble_L

    return assemble_L(CrossSection.soft(), small_grid)


@pytest.fixture(scope="session")
def small_hard(small_grid):
    from relkin.crosssec import CrossSection
    from relkin.linop import assemble_L

    return assemble_L(CrossSection.hard(), small_grid)


def pytest_terminal_summary(terminalreporter):
    # one PASS/FAIL line per acceptance criterion, collected by tests/test_acceptance.py
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
