import numpy as np
import pytest

from polyaurn import catalog

E_PASSING = ["all_ones", "affine", "asym_sqrt2", "asym_sqrt11", "lms_ex1", "first_draw"]
TWO_DRAW = [n for n in catalog.names() if catalog.tensor(n).m == 2]

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(cid): acceptance criterion id")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    cid = dict(report.user_properties).get("acceptance")
    if cid is None:
        return
    entry = _acceptance.setdefault(cid, [])
    if not report.passed:
        entry.append(report.nodeid.split("::")[-1])


@pytest.fixture(autouse=True)
def _tag_acceptance(request, record_property):
    marker = request.node.get_closest_marker("acceptance")
    if marker is not None:
        record_property("acceptance", marker.args[0])


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_acceptance):
        failed = _acceptance[cid]
        if failed:
            terminalreporter.write_line(f"{cid} FAIL ({', '.join(failed)})")
        else:
            terminalreporter.write_line(f"{cid} PASS")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
