import numpy as np
import pytest

from mgsgrf.data import MixedDataset


def make_mixed(n_major=80, n_minor=20, d=3, cards=(3, 2), seed=0):
    """Small random mixed dataset, minority rows last."""
    rng = np.random.default_rng(seed)
    N = n_major + n_minor
    X = rng.standard_normal((N, d))
    X[n_major:] += 1.5
    cat = np.column_stack([rng.integers(0, m, N) for m in cards]) if cards else np.empty((N, 0), int)
    y = np.r_[np.zeros(n_major, int), np.ones(n_minor, int)]
    return MixedDataset(X, cat, y, tuple(cards))


@pytest.fixture
def mixed():
    return make_mixed()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: s.split("criterion")[1]):
            terminalreporter.write_line(line)
