"""Shared test helpers and the acceptance summary hook.

Acceptance tests append one formatted line per criterion to
``ACCEPTANCE_LINES``; the terminal summary prints them as a block so a
plain ``pytest -v`` run ends with one pass/fail line per criterion.
"""

import numpy as np
import pytest

import casivox

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def cubelet_mirror():
    """Small scalar d=3 mirror pair: 2x2x2 voxels of chi=2 facing a mirror."""
    body = casivox.voxelize(casivox.Box(lo=(0.0, 0.0, -0.5), hi=(0.5, 0.5, 0.0)), h=0.25)
    return casivox.mirror_pair(body, casivox.constant(2.0), field_kind="scalar")


@pytest.fixture
def voxel_pair_1d():
    """Two mirrored single voxels in d=1, moderate coupling."""
    body = casivox.voxelize(casivox.Box(lo=(-0.1,), hi=(0.0,)), h=0.1)
    return casivox.mirror_pair(body, casivox.constant(5.0), field_kind="scalar")


def rel_diff(x, y):
    return abs(x - y) / max(abs(x), abs(y), 1e-300)
