import math
import warnings

import numpy as np
import pytest

from gravcomp import CalibrationWarning, load_reference_measurements
from gravcomp.arcfit import MarkerTrace

REFERENCE_Q2_DEG = (-0.01, -30.0, -60.0, -90.0, -120.0, -145.0)


@pytest.fixture
def reference_input():
    return load_reference_measurements()


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CalibrationWarning)
        yield


def random_arc(rng, m=None, sigma=None, dim=2):
    """Random arc with a known center, radius and phase; returns (trace, truth)."""
    m = int(rng.integers(5, 51)) if m is None else m
    sigma = rng.uniform(0.0, 0.1) if sigma is None else sigma
    radius = rng.uniform(50.0, 500.0)
    spread = rng.uniform(math.radians(60.0), 2 * math.pi)
    q = np.sort(rng.uniform(0.0, spread, m))
    phase = rng.uniform(0.0, 2 * math.pi)
    center = rng.uniform(-1000.0, 1000.0, 2)
    p = center + radius * np.column_stack([np.cos(q + phase), np.sin(q + phase)])
    if dim == 3:
        p = np.column_stack([p, np.full(m, rng.uniform(-50, 50))])
    p = p + rng.normal(0.0, sigma, p.shape)
    return MarkerTrace("arc", q, p), {"center": center, "radius": radius, "phase": phase}


def random_concentric(rng, k=None):
    k = int(rng.integers(1, 4)) if k is None else k
    center = rng.uniform(-1000.0, 1000.0, 2)
    traces = []
    for j in range(k):
        m = int(rng.integers(5, 41))
        radius = rng.uniform(50.0, 500.0)
        spread = rng.uniform(math.radians(30.0), 2 * math.pi)
        q = np.sort(rng.uniform(0.0, spread, m)) + rng.uniform(0.0, 6.0)
        p = center + radius * np.column_stack([np.cos(q), np.sin(q)])
        p = p + rng.normal(0.0, rng.uniform(0.0, 0.1), p.shape)
        traces.append(MarkerTrace(f"M{j}", q, p))
    return traces, center


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record():
    """Collect a one-line verdict for the acceptance summary."""

    def _record(number: int, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
