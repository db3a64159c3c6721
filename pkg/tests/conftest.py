import os
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from rstar_mue.data_ingest import build_dataset, load_csv

REPO = Path(__file__).resolve().parents[1]


def demo_path() -> Path:
    return Path(str(resources.files("rstar_mue") / "data" / "synthetic_demo.csv"))


def fixture_path(name: str) -> Path | None:
    """Locate a replication fixture under $RSTAR_DATA_DIR or the repository's data/."""
    roots = [Path(os.environ["RSTAR_DATA_DIR"])] if os.environ.get("RSTAR_DATA_DIR") else []
    roots.append(REPO / "data")
    for r in roots:
        if (r / name).exists():
            return r / name
    return None


@pytest.fixture(scope="session")
def demo_ds():
    return build_dataset(load_csv(demo_path()), "1961:Q1", "2017:Q1", label="demo")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
