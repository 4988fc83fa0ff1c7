import numpy as np
import pytest
from hypothesis import strategies as st

from rlmd_diag.diagnostics import diagnose
from rlmd_diag.motorsim import scenario, simulate_current

FS = 10_000.0


def central(x, fraction=0.9):
    """Middle ``fraction`` of an array."""
    n = len(x)
    cut = int(round(n * (1 - fraction) / 2))
    return x[cut : n - cut]


def tone_mixture(fs=1000.0, duration=2.0):
    """AM 50 Hz tone plus a 5 Hz tone, with the two ground-truth parts."""
    t = np.arange(int(fs * duration)) / fs
    high = (1.0 + 0.5 * np.cos(2 * np.pi * 2 * t)) * np.cos(2 * np.pi * 50 * t)
    low = 0.8 * np.cos(2 * np.pi * 5 * t)
    return t, high, low


@st.composite
def am_fm_mixture(draw):
    n = draw(st.integers(256, 1500))
    t = np.arange(n) / 1000.0
    x = np.zeros(n)
    for _ in range(draw(st.integers(1, 3))):
        amp = draw(st.floats(0.1, 5.0))
        depth = draw(st.floats(0.0, 0.8))
        fa = draw(st.floats(0.5, 5.0))
        fc = draw(st.floats(5.0, 200.0))
        beta = draw(st.floats(0.0, 3.0))
        x += amp * (1 + depth * np.cos(2 * np.pi * fa * t)) * np.cos(
            2 * np.pi * fc * t + beta * np.sin(2 * np.pi * fa * t)
        )
    noise = draw(st.floats(0.0, 0.2))
    seed = draw(st.integers(0, 2**16))
    return x + noise * np.random.default_rng(seed).normal(size=n)


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def scenario_runs():
    """Simulated current and diagnosis report for every canned scenario."""
    runs = {}
    for name in ("healthy", "severity_step", "load_step"):
        config, profile = scenario(name)
        current = simulate_current(config, profile)
        runs[name] = (config, profile, current, diagnose(current))
    return runs
