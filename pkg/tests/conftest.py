import numpy as np
import pytest

from ifqaoa.cli import derive_seed
from ifqaoa.instances import generate_real, knapsack_from_lists, to_integer

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    number, title = crit
    prev = _criteria.get(number, (title, "PASS", ""))
    status = prev[1]
    if report.outcome != "passed":
        status = "FAIL"
    detail = prev[2] or getattr(report, "criterion_detail", "")
    _criteria[number] = (title, status, detail)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report.criterion = tuple(marker.args)
        report.criterion_detail = getattr(item, "criterion_detail", "")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status, detail = _criteria[number]
        line = f"criterion {number:2d} {status}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture
def detail(request):
    """Attach a short measured figure to the criterion summary line."""

    def attach(text):
        request.node.criterion_detail = text

    return attach


def integer_instances(n, count, seed=0):
    return [to_integer(generate_real(n, derive_seed(seed, n, i), id=f"real-n{n}-{i:03d}")) for i in range(count)]


def small_integer_instance(rng, n, max_register=4):
    """Random integer knapsack whose constraint range fits ``max_register`` qubits."""
    lo, hi = -(1 << (max_register - 1)), (1 << (max_register - 1)) - 1
    while True:
        w = rng.integers(1, 5, size=n)
        if w.sum() < 2:
            continue
        W = int(rng.integers(1, w.sum()))
        if W <= hi and W - w.sum() >= lo:
            v = rng.integers(1, 10, size=n)
            return knapsack_from_lists([int(a) for a in w], [int(a) for a in v], W)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
