import os

import pytest

from rcpd.critical_values import CriticalValueTable


@pytest.fixture(scope="session")
def cv_cache_path(tmp_path_factory):
    # RCPD_TEST_CV_CACHE lets repeated local runs reuse simulated values
    shared = os.environ.get("RCPD_TEST_CV_CACHE")
    if shared:
        return shared
    return str(tmp_path_factory.mktemp("cv") / "critical_values.json")


@pytest.fixture(scope="session")
def cv_table(cv_cache_path):
    return CriticalValueTable(cv_cache_path)


@pytest.fixture(scope="session")
def cv_offline(cv_table):
    return cv_table("offline", r=1, alpha=0.05)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
