import os
import sys
from collections import OrderedDict
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criteria = OrderedDict()


def _ffmpeg_exe():
    exe = os.environ.get("MOTIONCLIP_FFMPEG")
    if exe:
        return exe
    try:
        import imageio_ffmpeg
    except ImportError:
        return None
    try:
        return imageio_ffmpeg.get_ffmpeg_exe()
    except RuntimeError:
        return None


@pytest.fixture(scope="session")
def ffmpeg_exe():
    exe = _ffmpeg_exe()
    if exe is None:
        pytest.skip("no transcoder available")
    return exe


def pytest_runtest_logreport(report):
    label = getattr(report, "criterion", None)
    if label is None:
        return
    state = _criteria.setdefault(label, "PASS")
    if report.failed:
        _criteria[label] = "FAIL"
    elif report.skipped and state == "PASS" and report.when in ("setup", "call"):
        _criteria[label] = "SKIP"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None and marker.args:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, state in _criteria.items():
        terminalreporter.write_line(f"{state}  {label}")
