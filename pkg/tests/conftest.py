import math
from fractions import Fraction

import pytest

from reltori import reconstruct
from reltori.catalog import so3_example, torus3_example


@pytest.fixture(scope="session")
def torus3():
    return reconstruct(torus3_example(), mode="exact")


@pytest.fixture(scope="session")
def so3_resonant():
    spec = so3_example(math.pi / 3, math.pi / 3, exact_mean_turns=Fraction(1, 3))
    return reconstruct(spec, mode="exact")


@pytest.fixture(scope="session")
def so3_generic():
    return reconstruct(so3_example(1.0, 1.0), mode="numeric", height_bound=50)


@pytest.fixture(scope="session")
def so3_fourier():
    return reconstruct(so3_example(0.7, 0.4, f1_terms=[(1, 0.0, 1.0)]), mode="numeric")


_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    n, title = mark.args
    _CRITERIA[n] = (title, rep.passed, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok, dt = _CRITERIA[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {title} ({dt:.2f} s)")
