import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.model_selection import GridSearchCV

from gravcomp import DataError
from gravcomp.estimators import ArcRegressor, CompensatorCalibrator, ConcentricArcTransformer
from gravcomp.synth import GroundTruth, generate_traces

Q = np.radians(np.linspace(-145, 0, 12))


def table(inp):
    X, y = [], []
    for t in inp.traces:
        for q, p in zip(t.q, t.points):
            X.append([q, *p])
            y.append(t.marker_id)
    return np.array(X), np.array(y)


@pytest.fixture
def synthetic():
    return generate_traces(GroundTruth.reference(), Q, sigma=0.01, seed=0)


class TestArcRegressor:
    def test_fit_predict(self, synthetic):
        tr = synthetic.p1_trace
        est = ArcRegressor().fit(tr.q, tr.points)
        assert est.q_sense_ == -1
        assert est.radius_ == pytest.approx(184.72, abs=0.05)
        assert est.score(tr.q, tr.points) > 0.999

    def test_explicit_sense(self, synthetic):
        tr = synthetic.p1_trace
        est = ArcRegressor(q_sense=-1).fit(tr.q, tr.points)
        assert est.rms_residual_ < 0.05
        with pytest.raises(DataError):
            ArcRegressor(q_sense=2).fit(tr.q, tr.points)

    def test_clone_and_params(self):
        est = ArcRegressor(mode="spatial", q_sense=1)
        assert clone(est).get_params() == {"mode": "spatial", "q_sense": 1}

    def test_unfitted(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            ArcRegressor().predict([0.0])

    def test_grid_search(self, synthetic):
        tr = synthetic.p1_trace
        gs = GridSearchCV(ArcRegressor(), {"q_sense": [None, 1]}, cv=3).fit(tr.q, tr.points)
        assert gs.best_params_["q_sense"] is None


class TestConcentricTransformer:
    def test_fit_transform(self, synthetic):
        X, y = table(synthetic)
        mask = y != "P1"
        tf = ConcentricArcTransformer().fit(X[mask, 1:], y[mask])
        np.testing.assert_allclose(tf.center_, GroundTruth.reference().p0, atol=0.05)
        out = tf.transform(X[mask, 1:])
        assert out.shape == (mask.sum(), 2)
        assert np.all(np.abs(out[:, 0] - 187.5) < 1.0)
        assert set(tf.radii_) == {"P01", "P02"}

    def test_spatial_transform(self):
        q = np.radians(np.linspace(0, 180, 8))
        pts = np.column_stack([50 * np.cos(q), 50 * np.sin(q), np.zeros_like(q)])
        X = np.vstack([pts, pts * [0.5, 0.5, 1] + [0, 0, 10]])
        y = np.array(["A"] * 8 + ["B"] * 8)
        tf = ConcentricArcTransformer(mode="spatial").fit(X, y)
        np.testing.assert_allclose(tf.transform(X)[:, 0], np.r_[np.full(8, 50.0), np.full(8, 25.0)], atol=1e-8)

    def test_label_shape(self, synthetic):
        X, y = table(synthetic)
        with pytest.raises(DataError):
            ConcentricArcTransformer().fit(X[:, 1:], y[:-1])


class TestCompensatorCalibrator:
    def test_matches_functional_pipeline(self, reference_input, quiet):
        from gravcomp.pipeline import calibrate

        X, y = table(reference_input)
        est = CompensatorCalibrator().fit(X, y)
        rep = calibrate(reference_input)
        assert est.geometry_ == rep.geometry
        np.testing.assert_allclose(est.predict(reference_input.p1_trace.q), reference_input.p1_trace.points, atol=0.1)

    def test_clone(self):
        est = CompensatorCalibrator(p1_marker="crank", q2_sense=-1, sigma_mm=0.02)
        assert clone(est).get_params() == {"p1_marker": "crank", "q2_sense": -1, "sigma_mm": 0.02}

    @pytest.mark.parametrize("cols", [2, 5])
    def test_bad_columns(self, synthetic, cols):
        X, y = table(synthetic)
        Xb = np.zeros((len(X), cols))
        with pytest.raises(DataError):
            CompensatorCalibrator().fit(Xb, y)

    def test_missing_p1(self, synthetic):
        X, y = table(synthetic)
        with pytest.raises(DataError):
            CompensatorCalibrator(p1_marker="nope").fit(X, y)
