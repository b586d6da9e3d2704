import numpy as np
import pytest

from nbnet import core

_built = []
_orig_post_init = core.NbnGraph.__post_init__


def _recording_post_init(self):
    _orig_post_init(self)
    _built.append(self)


core.NbnGraph.__post_init__ = _recording_post_init


@pytest.fixture(autouse=True)
def forest_guard():
    """Every graph constructed by a test must be a valid nearest-better forest."""
    start = len(_built)
    yield
    graphs = _built[start:]
    del _built[start:]
    for g in graphs:
        if g.meta.get("unchecked"):
            continue
        g.check()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def full_cube(D):
    return ((np.arange(2 ** D)[:, None] >> np.arange(D)[::-1]) & 1).astype(np.int8)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
