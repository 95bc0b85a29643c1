import numpy as np
import pytest

from hypelastica import analysis as an
from hypelastica import flow as fl

ACCEPTANCE = {}


def record(criterion, ok, detail):
    ACCEPTANCE[criterion] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small_run():
    """A short closed run: a few accepted steps with frames."""
    curve = an.random_closed_curve(np.random.default_rng(3), n=64)
    cfg = fl.FlowConfig(n_nodes=64, dt_initial=1e-4, t_end=2e-2, frame_every=5, dt_max=1e-2)
    return fl.run(cfg, curve)
