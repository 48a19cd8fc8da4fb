from __future__ import annotations

import pytest

from lcsh_pipeline.authority_store import Scheme, load_authorities
from lcsh_pipeline.lcnaf_client import ClientConfig, Mode, NameClient
from lcsh_pipeline.term_index import build_index
from lcsh_pipeline.validator import Validator

from support import FIXTURES

_criteria: dict[int, dict] = {}


@pytest.fixture(scope="session")
def lcsh():
    return load_authorities(FIXTURES / "lcsh.ndjson", Scheme.LCSH)


@pytest.fixture(scope="session")
def lcgft():
    return load_authorities(FIXTURES / "lcgft.ndjson", Scheme.LCGFT)


@pytest.fixture(scope="session")
def lcsh_index(lcsh):
    return build_index(lcsh)


@pytest.fixture(scope="session")
def lcgft_index(lcgft):
    return build_index(lcgft)


@pytest.fixture
def names():
    return NameClient(ClientConfig(mode=Mode.FIXTURE, fixture_dir=FIXTURES / "names"))


@pytest.fixture
def validator(lcsh, lcgft, lcsh_index, lcgft_index, names):
    return Validator(lcsh, lcgft, lcsh_index, lcgft_index, names)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "passed": 0, "failed": 0})
    if report.failed:
        entry["failed"] += 1
    elif report.passed and report.when == "call":
        entry["passed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        ok = entry["failed"] == 0 and entry["passed"] > 0
        terminalreporter.write_line(
            f"criterion {number}: {'PASS' if ok else 'FAIL'}  {entry['title']}"
            f"  ({entry['passed']} passed, {entry['failed']} failed)")
