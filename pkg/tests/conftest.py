from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest

from submachine.grammars import parse_cfg
from submachine.tableio import load_table

GOLDEN = Path(__file__).parent / "golden"

_RESULTS: dict[int, tuple[str, list[str]]] = {}


def data_text(name: str) -> str:
    return resources.files("submachine").joinpath("data", name).read_text(encoding="utf-8")


def data_path(name: str) -> str:
    return str(resources.files("submachine").joinpath("data", name))


@pytest.fixture(scope="session")
def palindrome_table():
    return load_table(data_text("Palindrome.table"))


@pytest.fixture(scope="session")
def expansive_table():
    return load_table(data_text("Expansive.table"))


@pytest.fixture(scope="session")
def nc_table():
    return load_table(data_text("NC.table"))


@pytest.fixture(scope="session")
def cfgs():
    return {n: parse_cfg(data_text(f"{n}.cfg")) for n in ("Palindrome", "Canvas", "DOT", "Ambiguous")}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    _, outcomes = _RESULTS.setdefault(number, (title, []))
    if report.when == "call" or report.outcome != "passed":
        outcomes.append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, outcomes = _RESULTS[number]
        ok = bool(outcomes) and all(o == "passed" for o in outcomes)
        terminalreporter.write_line(f"criterion {number:>2} {title}: {'PASS' if ok else 'FAIL'}")
