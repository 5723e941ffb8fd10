import functools

import numpy as np
import pytest

import mvalda
import mvalda.npmle as npmle

ASCENT_SLACK = 1e-14

# Every solver run in the session reports its objective trace here; the
# monotone-ascent acceptance test inspects it after all other tests ran.
SOLVER_RUNS = {"count": 0, "violations": []}

_original_solve = npmle.solve_mixture_weights


@functools.wraps(_original_solve)
def _monitored_solve(log_lik, config=None, callback=None):
    trace = []

    def record(it, obj):
        trace.append(obj)
        if callback is not None:
            callback(it, obj)

    result = _original_solve(log_lik, config, record)
    SOLVER_RUNS["count"] += 1
    drops = np.diff(np.asarray(trace))
    if drops.size and drops.min() < -ASCENT_SLACK:
        SOLVER_RUNS["violations"].append(float(drops.min()))
    return result


npmle.solve_mixture_weights = _monitored_solve
mvalda.solve_mixture_weights = _monitored_solve


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    def report(criterion, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return report


def pytest_collection_modifyitems(config, items):
    # the ascent audit must see every other solver run
    last = [it for it in items if it.name == "test_criterion_02_monotone_ascent"]
    items[:] = [it for it in items if it not in last] + last


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
