import numpy as np
import pytest

from smoteleak.data import FixtureSpec, make_fixture
from smoteleak.smote import SmoteConfig, augment, smote_oversample

CRITERIA = {}


def record_criterion(number, title, passed, detail=""):
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}"
    if detail:
        line += f": {detail}"
    CRITERIA[(number, title)] = line
    print(line)
    return passed


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[key])


@pytest.fixture(scope="session")
def small_world():
    """A small fixture plus its SMOTE output, shared read-only."""
    real = make_fixture(FixtureSpec(n0=240, n1=20, d=4, seed=7))
    syn, prov = smote_oversample(real, SmoteConfig(k=5, seed=7))
    return real, syn, prov, augment(real, syn)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
