import os
import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

GRAPHS = HERE.parent / "graphs"
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def graphs_dir() -> Path:
    return GRAPHS


@pytest.fixture(autouse=True)
def _thread_cap(monkeypatch):
    # keep the suite deterministic in wall time on shared machines
    monkeypatch.setenv("QMW_THREADS", os.environ.get("QMW_THREADS", "4"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
