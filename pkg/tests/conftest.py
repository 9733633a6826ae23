import os
import sys
import time

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from lasso_se import experiments as ex  # noqa: E402

# The desk-scale configuration shared by the acceptance checks.
DESK = dict(N=2000, delta=0.8, sigma=0.2, prior="sparse-gaussian:s=0.1", replicates=8,
            lambda_count=20, folds=4, seed=1)


@pytest.fixture(scope="session")
def desk_config():
    return ex.ExperimentConfig(**DESK)


@pytest.fixture(scope="session")
def desk_run(desk_config):
    t0 = time.perf_counter()
    res = ex.run_experiment(desk_config, threads=1)
    res.elapsed = time.perf_counter() - t0
    return res


@pytest.fixture(scope="session")
def small_run():
    """Same family as the desk run at N=500 (cross-validation off: only W2 is compared)."""
    cfg = ex.ExperimentConfig(**{**DESK, "N": 500, "folds": 0})
    return ex.run_experiment(cfg, threads=1)


_VERDICTS = {}


@pytest.fixture
def verdict():
    """Record one acceptance criterion: prints a PASS/FAIL line and asserts."""
    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _VERDICTS[number] = line
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[number])
