import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("hslab", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("hslab")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def run_cli(tmp_path_factory, *argv):
    """Run the CLI in-process; returns (exit code, report text)."""
    from hslab.cli import main
    out = tmp_path_factory.mktemp("cli") / "report.json"
    code = main([*argv, "--out", str(out)])
    return code, out.read_text() if out.exists() else None


@pytest.fixture(scope="session")
def super_report(tmp_path_factory):
    return run_cli(tmp_path_factory, "super", "--mode", "polynomial", "--seed", "0")


def pytest_sessionstart(session):
    session.config.hslab_start = time.perf_counter()


def pytest_collection_modifyitems(config, items):
    # acceptance runs last so its wall-clock check covers the whole session
    items.sort(key=lambda item: item.path.name == "test_acceptance.py")


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.VERDICTS):
        terminalreporter.write_line(mod.VERDICTS[n])
