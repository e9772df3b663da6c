import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from conftest import random_concentric
from gravcomp import DataError, FitError
from gravcomp.arcfit import MarkerTrace
from gravcomp.axisfit import arc_radii, fit_concentric, normalize_axis_sign
from gravcomp.synth import algebraic_circle_fit, oracle_fit_concentric


def circle(center, radius, q, normal_rot=None, height=0.0):
    p = np.column_stack([radius * np.cos(q), radius * np.sin(q), np.full_like(q, height)])
    if normal_rot is not None:
        p = p @ normal_rot.T
    return p + center


class TestPlanar:
    def test_exact_concentric(self):
        c = np.array([-685.83, -117.57])
        q1 = np.radians(np.linspace(120, 160, 6))
        q2 = np.radians(np.linspace(-170, -130, 6))
        traces = [
            MarkerTrace("A", q1, c + 186.7 * np.column_stack([np.cos(q1), np.sin(q1)])),
            MarkerTrace("B", q2, c + 188.3 * np.column_stack([np.cos(q2), np.sin(q2)])),
        ]
        res = fit_concentric(traces)
        np.testing.assert_allclose(res.p_c, c, atol=1e-8)
        np.testing.assert_allclose(res.radii, [186.7, 188.3], rtol=1e-11)
        assert res.rms_residual < 1e-8
        np.testing.assert_array_equal(res.n, [0, 0, 1])
        np.testing.assert_array_equal(res.xis, [0, 0])
        assert res.marker_ids == ("A", "B")
        assert res.n_points == (6, 6)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_oracle(self, seed):
        traces, _ = random_concentric(np.random.default_rng(seed))
        a, o = fit_concentric(traces), oracle_fit_concentric(traces)
        np.testing.assert_allclose(a.p_c, o.p_c, atol=1e-5)
        assert a.objective <= o.objective * (1 + 1e-8) + 1e-12

    @pytest.mark.parametrize("seed", range(10))
    def test_single_trace_is_algebraic_circle(self, seed):
        traces, _ = random_concentric(np.random.default_rng(seed), k=1)
        c, _ = algebraic_circle_fit(traces[0].points)
        np.testing.assert_allclose(fit_concentric(traces).p_c, c, atol=1e-9)

    @given(st.floats(-math.pi, math.pi), st.floats(-100, 100), st.integers(0, 2**31))
    @settings(max_examples=40, deadline=None)
    def test_rigid_motion(self, th, dx, seed):
        traces, _ = random_concentric(np.random.default_rng(seed))
        Q = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
        d = np.array([dx, -dx])
        moved = [tr.with_points(tr.points @ Q.T + d) for tr in traces]
        a, b = fit_concentric(traces), fit_concentric(moved)
        np.testing.assert_allclose(b.p_c, Q @ a.p_c + d, atol=1e-6)
        np.testing.assert_allclose(b.radii, a.radii, rtol=1e-9)

    def test_radius_error_is_second_order_in_center_error(self):
        q = np.linspace(0, 2 * math.pi, 40, endpoint=False)
        tr = MarkerTrace("A", q, 100.0 * np.column_stack([np.cos(q), np.sin(q)]))
        for delta in (1e-1, 1e-2, 1e-3):
            r = arc_radii([tr], [delta, 0.0])[0]
            assert r - 100.0 == pytest.approx(delta**2 / 200.0, rel=1e-3)


class TestSpatial:
    def test_tilted_axis_two_heights(self):
        Rt = Rotation.from_rotvec([0.4, 0.1, -0.3]).as_matrix()
        c = np.array([10.0, 20.0, 30.0])
        q1 = np.radians(np.linspace(0, 140, 7))
        q2 = np.radians(np.linspace(180, 300, 7))
        traces = [MarkerTrace("A", q1, circle(c, 150.0, q1, Rt, 5.0)), MarkerTrace("B", q2, circle(c, 90.0, q2, Rt, -15.0))]
        res = fit_concentric(traces, mode="spatial")
        n_true = normalize_axis_sign(Rt[:, 2])
        np.testing.assert_allclose(res.n, n_true, atol=1e-10)
        # p_c lies on the true axis
        off = (res.p_c - c) - ((res.p_c - c) @ n_true) * n_true
        assert np.linalg.norm(off) < 1e-8
        sign = float(n_true @ Rt[:, 2])
        assert res.xis[0] - res.xis[1] == pytest.approx(20.0 * sign, abs=1e-8)
        np.testing.assert_allclose(res.radii, [150.0, 90.0], rtol=1e-10)
        np.testing.assert_allclose(res.centers[0], res.p_c + res.xis[0] * res.n)

    def test_axial_position_is_mean_projection(self):
        Rt = Rotation.from_rotvec([0.2, 0.2, 0.0]).as_matrix()
        q = np.radians(np.linspace(0, 200, 9))
        pts = [circle(np.zeros(3), 50.0, q, Rt, h) for h in (0.0, 30.0)]
        res = fit_concentric([MarkerTrace(f"M{i}", q, p) for i, p in enumerate(pts)], mode="spatial")
        assert res.p_c @ res.n == pytest.approx(np.vstack(pts).mean(axis=0) @ res.n, abs=1e-9)

    def test_xi_minimises_axial_offset(self):
        rng = np.random.default_rng(2)
        q = np.radians(np.linspace(0, 180, 10))
        p = circle(np.zeros(3), 60.0, q, None, 7.0) + rng.normal(0, 0.05, (10, 3))
        p2 = circle(np.zeros(3), 40.0, q, None, -3.0) + rng.normal(0, 0.05, (10, 3))
        res = fit_concentric([MarkerTrace("A", q, p), MarkerTrace("B", q, p2)], mode="spatial")

        def axial_ss(xi):
            return np.sum(((p - res.p_c) @ res.n - xi) ** 2)

        for dx in (-1e-3, 1e-3):
            assert axial_ss(res.xis[0]) < axial_ss(res.xis[0] + dx)

    def test_spatial_needs_3d(self):
        traces, _ = random_concentric(np.random.default_rng(0))
        with pytest.raises(DataError):
            fit_concentric(traces, mode="spatial")


class TestErrors:
    def test_axis_sign(self):
        np.testing.assert_array_equal(normalize_axis_sign(np.array([0.1, -0.9, 0.2])), [-0.1, 0.9, -0.2])

    def test_coincident_points(self):
        with pytest.raises(FitError):
            fit_concentric([MarkerTrace("A", [0, 1, 2], np.ones((3, 2)))])

    def test_collinear(self):
        p = np.column_stack([np.arange(5.0), 2 * np.arange(5.0)])
        with pytest.raises(FitError):
            fit_concentric([MarkerTrace("A", np.arange(5.0), p)])

    def test_too_few_points(self):
        with pytest.raises(FitError):
            fit_concentric([MarkerTrace("A", [0, 1], [[0, 0], [1, 1]])])

    def test_no_traces(self):
        with pytest.raises(DataError):
            fit_concentric([])

    def test_radii_center_count(self):
        traces, _ = random_concentric(np.random.default_rng(0), k=2)
        with pytest.raises(DataError):
            arc_radii(traces, np.zeros((3, 2)))
