import numpy as np
import pytest

from bvlab import corpus


@pytest.fixture
def gen():
    return corpus.rng(12345)


def interior_nodes(n, lo=0.0, hi=1.0):
    """Interior node coordinates of an ``n x n`` grid, as flat arrays."""
    t = np.linspace(lo, hi, n)[1:-1]
    gx, gy = np.meshgrid(t, t, indexing="ij")
    return gx.ravel(), gy.ravel()


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE = []


def record_criterion(number, title, passed, detail):
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
