import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ristlm.cell import UnitCellDesign, VaractorModel  # noqa: E402
from ristlm.link import LinkScenario  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def cell():
    """Reference cell: 5 mm lattice, 0.5 mm gap, 1.2 mm lossy FR-4."""
    return UnitCellDesign.square(5e-3, 0.5e-3, 1.2e-3)


@pytest.fixture
def varactor():
    return VaractorModel()


@pytest.fixture
def scenario(cell):
    return LinkScenario((-0.4, 0.0, 0.1), (0.2, 0.0, 0.2), 30, 30, cell, f=8e9)


def record_criterion(request, key: str, passed: bool, detail: str) -> str:
    """Remember one acceptance line; printed again in the terminal summary."""
    line = f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}"
    lines = getattr(request.config, "_acceptance_lines", None)
    if lines is None:
        lines = request.config._acceptance_lines = {}
    lines[key] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])
