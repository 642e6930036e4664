import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cvt3d import voronoi
from cvt3d.bounds import CONSTANTS

settings.register_profile("suite", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")


class FloorRecorder:
    """Checks the per-cell and global energy floors on every tessellation built."""

    def __init__(self):
        self.count = 0
        self.violations = []
        self.worst_density = np.inf
        self.worst_cell_ratio = np.inf

    def check(self, t):
        self.count += 1
        vol = t.volumes
        d = t.centroids - t.generators.points
        # parallel axis: moment about the centroid
        centered = t.second_moments - vol * np.einsum("ij,ij->i", d, d)
        floor = CONSTANTS.C_ball * vol ** (5.0 / 3.0)
        ratio = float(np.min(centered / floor))
        density = t.n ** (2.0 / 3.0) * t.energy
        self.worst_density = min(self.worst_density, density)
        self.worst_cell_ratio = min(self.worst_cell_ratio, ratio)
        if density < CONSTANTS.tau_lb or ratio < 1 - 1e-9:
            self.violations.append((t.n, t.domain.value, density, ratio))


RECORDER = FloorRecorder()
_Tessellation = voronoi.Tessellation


def _recording_tessellation(*args, **kwargs):
    t = _Tessellation(*args, **kwargs)
    RECORDER.check(t)
    return t


# build_tessellation looks the class up at call time
voronoi.Tessellation = _recording_tessellation


@pytest.fixture
def floor_recorder():
    return RECORDER


CRITERIA_LINES = []


@pytest.fixture
def criterion(request):
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(number, passed, detail=""):
        line = f"CRITERION {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        CRITERIA_LINES.append(line)
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        return passed

    return emit


def pytest_collection_modifyitems(config, items):
    # the global floor check must see every tessellation, so it runs last
    last = [it for it in items if it.get_closest_marker("runs_last")]
    rest = [it for it in items if not it.get_closest_marker("runs_last")]
    items[:] = rest + last


def pytest_configure(config):
    config.addinivalue_line("markers", "runs_last: run after every other test")
    config.addinivalue_line("markers", "slow: long-running acceptance check")


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
