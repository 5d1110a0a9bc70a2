import sys
from pathlib import Path

import numpy as np
import pytest

from pgrouplab.genealogy import default_tree, iterate_tree
from pgrouplab.pc import read_presentation

FIXTURES = Path(__file__).with_name("fixtures")


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def load(name: str):
    return read_presentation(FIXTURES / name)


@pytest.fixture(scope="session")
def tree():
    return default_tree()


def catalog(max_lo: int, min_lo: int = 2):
    """Tree vertices of order p^min_lo .. p^max_lo (abelianization 1^2)."""
    return [v for v in iterate_tree(max_lo, default_tree()) if v.lo >= min_lo]


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
