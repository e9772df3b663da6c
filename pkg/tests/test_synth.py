import math

import numpy as np
import pytest

from conftest import REFERENCE_Q2_DEG
from gravcomp import DataError, FitError
from gravcomp.arcfit import MarkerTrace
from gravcomp.model import REFERENCE_GEOMETRY, CompensatorGeometry, spring_length
from gravcomp.synth import (
    GroundTruth,
    _multisets,
    algebraic_circle_fit,
    gauss_newton,
    generate_traces,
    oracle_fit_arc,
    oracle_grid_trig_minimum,
)

Q = np.radians(REFERENCE_Q2_DEG)


class TestGroundTruth:
    def test_spring_length_matches_model(self):
        # the model angle is the crank direction measured from the frame's x axis
        truth = GroundTruth.from_geometry(REFERENCE_GEOMETRY, p1_phase=0.0, q2_sense=1)
        for q in Q:
            d = truth.p1_position(q)[0] - truth.p0
            assert np.linalg.norm(d) == pytest.approx(spring_length(REFERENCE_GEOMETRY, q), rel=1e-12)

    def test_reference_pose_uses_tracker_phase(self):
        truth = GroundTruth.reference()
        d = truth.p1_position(0.0)[0] - truth.p2
        assert math.degrees(math.atan2(d[1], d[0])) == pytest.approx(99.8)

    def test_markers_keep_radius(self):
        truth = GroundTruth.reference()
        for j, r in enumerate(truth.marker_radii):
            d = truth.marker_positions(Q, j) - truth.p0
            np.testing.assert_allclose(np.linalg.norm(d, axis=1), r)

    def test_inconsistent_points(self):
        with pytest.raises(DataError):
            GroundTruth(REFERENCE_GEOMETRY, np.zeros(2), np.zeros(2), (1.0,), (0.0,))

    def test_bad_markers(self):
        with pytest.raises(DataError):
            GroundTruth.from_geometry(REFERENCE_GEOMETRY, marker_radii=(1.0,), marker_phases=(0.0, 1.0))
        with pytest.raises(DataError):
            GroundTruth.from_geometry(REFERENCE_GEOMETRY, q2_sense=0)


class TestGenerate:
    def test_seeded_noise_is_reproducible(self):
        a = generate_traces(GroundTruth.reference(), Q, sigma=0.01, seed=4)
        b = generate_traces(GroundTruth.reference(), Q, sigma=0.01, seed=4)
        for x, y in zip(a.traces, b.traces):
            np.testing.assert_array_equal(x.points, y.points)

    def test_names_and_z(self):
        inp = generate_traces(GroundTruth.reference(), Q, z=3.0)
        assert [t.marker_id for t in inp.traces] == ["P1", "P01", "P02"]
        assert np.all(inp.p1_trace.points[:, 2] == 3.0)


class TestOracles:
    def test_gauss_newton_rosenbrock(self):
        x, f, g, ok = gauss_newton(lambda x: np.array([10 * (x[1] - x[0] ** 2), 1 - x[0]]), [-1.2, 1.0])
        assert ok
        np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-8)

    def test_algebraic_circle(self):
        q = np.linspace(0, 1, 6)
        c, r = algebraic_circle_fit(np.column_stack([3 + 2 * np.cos(q), -1 + 2 * np.sin(q)]))
        np.testing.assert_allclose(c, [3, -1], atol=1e-12)
        assert r == pytest.approx(2.0)

    def test_oracle_arc_needs_points(self):
        with pytest.raises(FitError):
            oracle_fit_arc(MarkerTrace("a", [0, 1], [[0, 0], [1, 1]]))

    def test_multisets(self):
        idx = _multisets(4, 3)
        assert len(idx) == math.comb(6, 3)
        assert np.all(np.diff(idx, axis=1) >= 0)
        assert len({tuple(r) for r in idx}) == len(idx)

    def test_grid_against_enumeration(self):
        # tiny grid checked by full enumeration
        F, ang = oracle_grid_trig_minimum(4, 0.0, math.radians(100), step=math.radians(10))
        grid = np.radians(np.arange(0, 101, 10))
        best = min(
            (np.sum(np.cos(grid[list(i)])) ** 2 + np.sum(np.sin(grid[list(i)])) ** 2)
            for i in _multisets(len(grid), 4)
        )
        assert F == pytest.approx(best, abs=1e-12)
        assert len(ang) == 4

    def test_grid_too_large(self):
        with pytest.raises(DataError):
            oracle_grid_trig_minimum(7, math.radians(-145), 0.0)
