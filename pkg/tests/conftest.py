import functools

import numpy as np
import pytest

from nlpot.experiments import PROBLEMS


@functools.lru_cache(maxsize=None)
def _solve(problem: str, cells: int, frozen: tuple):
    return PROBLEMS[problem](cells, **dict(frozen))


def solved(problem: str, cells: int, **params):
    """Solve a built-in problem once per session; solutions are read-only."""
    return _solve(problem, cells, tuple(sorted(params.items())))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
