import math

import pytest

from mcmatch import sampler
from mcmatch.problems import TableUtility


def table_instance(m, n, values):
    return TableUtility.from_values(m, n, values).instance()


def random_table(rng, m, n, low=0, high=3, integer=True):
    N = math.perm(n, m)
    if integer:
        vals = rng.integers(low, high + 1, size=N).astype(float)
    else:
        vals = rng.uniform(low, high, size=N)
    return table_instance(m, n, vals.tolist())


def small_shapes(max_m=3, max_n=4):
    return [(m, n) for m in range(1, max_m + 1) for n in range(m, max_n + 1)]


@pytest.fixture
def two_state():
    """m=2, n=2 with U([0,1]) = 0 and U([1,0]) = 1."""
    return table_instance(2, 2, [0.0, 1.0])


@pytest.fixture
def debug_checks(monkeypatch):
    monkeypatch.setattr(sampler, "DEBUG_CHECKS", True)


class ScriptedRng:
    """Stand-in for ChainRng that replays fixed draws."""

    def __init__(self, below=(), uniform=(), coin=()):
        self._below = list(below)
        self._uniform = list(uniform)
        self._coin = list(coin)

    def below(self, k):
        v = self._below.pop(0)
        assert 0 <= v < k
        return v

    def uniform(self):
        return self._uniform.pop(0)

    def coin(self):
        return self._coin.pop(0)


# one (criterion, passed, detail) entry per acceptance criterion, echoed at the
# end of the run so the verdicts show up without -s
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
