import pytest

from predbayes.dists import RngStream
from predbayes.model import simulate_dataset
from predbayes.study import DGP0, DGP1


@pytest.fixture
def rng():
    return RngStream(1234, 0)


@pytest.fixture
def dgp0_dataset():
    return simulate_dataset(DGP0, 100, RngStream(77, 0))


@pytest.fixture
def dgp1_dataset():
    return simulate_dataset(DGP1, 100, RngStream(78, 0))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One line per acceptance criterion at the end of the run."""
    lines = []
    for status in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(status, []):
            name = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" in name:
                crit = name.split("test_criterion_", 1)[1]
                lines.append((crit, status.upper()))
    if lines:
        terminalreporter.section("acceptance criteria")
        for crit, status in sorted(lines):
            terminalreporter.write_line(f"criterion {crit}: {status}")
