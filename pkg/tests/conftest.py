import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from synkit.liberty import demo_library, load_library

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile(
    "synkit", deadline=None, derandomize=True, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "synkit"))


@pytest.fixture(scope="session")
def demo():
    return demo_library()


@pytest.fixture(scope="session")
def skew_lib():
    return load_library(FIXTURES / "skew.slf")


# ------------------------------------------------------ acceptance summary

_VERDICTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    rep = (yield).get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _VERDICTS[n] = (title, "PASS" if rep.passed else "FAIL", rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        title, verdict, secs = _VERDICTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  {title}  ({secs:.1f} s)")
