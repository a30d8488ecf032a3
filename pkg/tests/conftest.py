from pathlib import Path

import pytest

from taguchi.design_space import DesignSpace
from taguchi.evaluator import ReplayEvaluator, evaluate
from taguchi.orthogonal_array import catalog_lookup, plan

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"
SPACE_JSON = FIXTURES / "cifar10_space.json"
TABLE2_CSV = FIXTURES / "cifar10_table2.csv"
CONFIG_JSON = FIXTURES / "cifar10.json"


@pytest.fixture(scope="session")
def cifar_space():
    return DesignSpace.load(SPACE_JSON)


@pytest.fixture(scope="session")
def cifar_plan(cifar_space):
    return plan(cifar_space, catalog_lookup(5, 4))


@pytest.fixture(scope="session")
def replay():
    return ReplayEvaluator(TABLE2_CSV)


@pytest.fixture(scope="session")
def cifar_records(cifar_plan, replay):
    return evaluate(replay, cifar_plan)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n = mark.args[0]
    results = item.config._criteria
    ok = rep.passed if rep.when == "call" else not rep.failed
    results[n] = results.get(n, True) and ok


def pytest_terminal_summary(terminalreporter, config):
    results = getattr(config, "_criteria", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if results[n] else 'FAIL'}")
