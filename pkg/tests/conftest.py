"""Shared fixtures: the 12-agent benchmark run is expensive, so it is
simulated once per session and shared."""
import dataclasses
import time

import pytest

from signedsync import config as cfgmod
from signedsync.sim import simulate

# criterion id -> (passed, line); filled by test_acceptance, printed at the end
ACCEPTANCE = {}


def benchmark_run(seed=0, horizon=200.0, record_stride=1, dt=1e-3):
    resolved = cfgmod.reproduction_config(seed=seed, horizon=horizon)
    cfg = dataclasses.replace(cfgmod.build_sim_config(resolved), record_stride=record_stride,
                              dt=dt)
    started = time.perf_counter()
    traj = simulate(cfg)
    return cfg, traj, time.perf_counter() - started


@pytest.fixture(scope="session")
def benchmark():
    """Default-seed benchmark, recorded at every step (about 160 MB)."""
    return benchmark_run(seed=0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        passed, line = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {key}: {line}")
