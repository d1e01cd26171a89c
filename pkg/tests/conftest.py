import pytest

from radiostripe.deploy_opt import optimize_line, optimize_polygon
from radiostripe.formats import parse_scenario
from radiostripe.scene import Hotspot, Scenario


@pytest.fixture(scope="session")
def default_scenario():
    return parse_scenario()


@pytest.fixture(scope="session")
def polygon40(default_scenario):
    return optimize_polygon(default_scenario, 40)


@pytest.fixture(scope="session")
def line40(default_scenario):
    return optimize_line(default_scenario, 40)


def small_room(hotspots, **kw):
    """6 x 6 m room, 3 m ceiling, 10 GHz, with hotspots given as (x, y) or Hotspot."""
    hs = tuple(h if isinstance(h, Hotspot) else Hotspot((h[0], h[1], 1.0)) for h in hotspots)
    params = dict(room_width=6.0, room_depth=6.0, ceiling_height=3.0, hotspots=hs)
    params.update(kw)
    return Scenario(**params)


# One PASS/FAIL line per acceptance criterion, printed in the terminal summary.
_ACCEPTANCE: dict = {}
_MARKERS: dict = {}
_TITLES: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marker = _MARKERS.get(report.nodeid)
    if marker is not None:
        number, title = marker
        ok = report.passed and _ACCEPTANCE.get(number, True)
        _ACCEPTANCE[number] = ok
        _TITLES[number] = title


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m is not None:
            _MARKERS[item.nodeid] = m.args


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status = "PASS" if _ACCEPTANCE[number] else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {_TITLES[number]}")
