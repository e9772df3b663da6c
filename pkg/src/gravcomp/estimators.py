"""scikit-learn compatible wrappers around the fitting routines.

These give the arc and compensator fits the usual ``fit``/``predict``/
``get_params`` surface so they can be cloned, grid-searched or dropped into
pipelines.  The functional API in :mod:`gravcomp.arcfit`,
:mod:`gravcomp.axisfit` and :mod:`gravcomp.pipeline` does the work.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .arcfit import MarkerTrace, fit_arc, winding_sense
from .axisfit import fit_concentric
from .exceptions import DataError
from .pipeline import DEFAULT_SIGMA_MM, CalibrationInput, calibrate

__all__ = ["ArcRegressor", "ConcentricArcTransformer", "CompensatorCalibrator"]


def _group_traces(X: np.ndarray, labels: np.ndarray, q: np.ndarray | None = None) -> list[MarkerTrace]:
    traces = []
    for lab in dict.fromkeys(labels.tolist()):
        mask = labels == lab
        qq = q[mask] if q is not None else np.arange(mask.sum(), dtype=float)
        traces.append(MarkerTrace(str(lab), qq, X[mask]))
    return traces


class ArcRegressor(RegressorMixin, BaseEstimator):
    """Predict marker positions from joint angles with a fitted circle arc.

    Parameters
    ----------
    mode : {"planar", "spatial"}, default="planar"
        ``"planar"`` ignores a third coordinate of ``y``.
    q_sense : {None, 1, -1}, default=None
        Orientation of increasing angle in the point frame; ``None`` detects
        it from the data.

    Attributes
    ----------
    radius_, center_, rotation_, rms_residual_ : fitted arc parameters.
    q_sense_ : int
        Orientation used for the fit.
    """

    def __init__(self, mode="planar", q_sense=None):
        self.mode = mode
        self.q_sense = q_sense

    def fit(self, X, y):
        """``X``: joint angles (n,) or (n, 1) in rad; ``y``: points (n, 2|3) in mm."""
        X, y = check_X_y(np.asarray(X, dtype=float).reshape(-1, 1), y, multi_output=True, y_numeric=True)
        if y.ndim != 2 or y.shape[1] not in (2, 3):
            raise DataError("y must have 2 or 3 columns")
        trace = MarkerTrace("arc", X[:, 0], y)
        sense = winding_sense(trace) if self.q_sense is None else int(self.q_sense)
        if sense not in (1, -1):
            raise DataError("q_sense must be None, 1 or -1")
        result = fit_arc(MarkerTrace("arc", sense * X[:, 0], y), mode=self.mode)
        self.q_sense_ = sense
        self.result_ = result
        self.radius_ = result.mu
        self.center_ = result.t
        self.rotation_ = result.R
        self.rms_residual_ = result.rms_residual
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        X = check_array(np.asarray(X, dtype=float).reshape(-1, 1))
        return self.result_.predict(self.q_sense_ * X[:, 0])


class ConcentricArcTransformer(TransformerMixin, BaseEstimator):
    """Fit a common rotation axis to labelled marker points.

    ``fit(X, y)`` takes points ``X`` (n, 2|3) and marker labels ``y``; each
    label is one trace.  ``transform`` returns, for each point, its distance
    from the axis and its polar angle about the axis (planar mode) so the
    output is in cylindrical coordinates.
    """

    def __init__(self, mode="planar"):
        self.mode = mode

    def fit(self, X, y):
        X = check_array(X)
        labels = np.asarray(y)
        if labels.shape != (X.shape[0],):
            raise DataError("y must hold one marker label per row of X")
        result = fit_concentric(_group_traces(X, labels), mode=self.mode)
        self.result_ = result
        self.center_ = result.p_c
        self.axis_ = result.n
        self.radii_ = dict(zip(result.marker_ids, result.radii))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "result_")
        X = check_array(X)
        dim = self.center_.shape[0]
        d = X[:, :dim] - self.center_
        if dim == 3:
            d = d - np.outer(d @ self.axis_, self.axis_)
            e1 = np.cross(self.axis_, [1.0, 0.0, 0.0])
            if np.linalg.norm(e1) < 1e-6:
                e1 = np.cross(self.axis_, [0.0, 1.0, 0.0])
            e1 /= np.linalg.norm(e1)
            e2 = np.cross(self.axis_, e1)
            d = np.column_stack([d @ e1, d @ e2])
        return np.column_stack([np.hypot(d[:, 0], d[:, 1]), np.arctan2(d[:, 1], d[:, 0])])


class CompensatorCalibrator(BaseEstimator):
    """Identify compensator geometry from labelled tracker rows.

    ``fit(X, y)`` takes rows ``[q2_rad, x, y(, z)]`` and marker labels; the
    label equal to ``p1_marker`` is the crank marker.  After fitting,
    ``geometry_``, ``p2_``, ``p0_`` and ``report_`` are available, and
    ``predict(q2)`` returns modelled P1 positions.

    Parameters
    ----------
    p1_marker : str, default="P1"
    q2_sense : {None, 1, -1}, default=None
        Joint-angle orientation in the tracker XY plane; ``None`` detects it.
    sigma_mm : float, default=0.01
        Tracker noise used for residual warnings.
    """

    def __init__(self, p1_marker="P1", q2_sense=None, sigma_mm=DEFAULT_SIGMA_MM):
        self.p1_marker = p1_marker
        self.q2_sense = q2_sense
        self.sigma_mm = sigma_mm

    def fit(self, X, y):
        X = check_array(X)
        if X.shape[1] not in (3, 4):
            raise DataError("X must have columns [q2_rad, x, y] or [q2_rad, x, y, z]")
        labels = np.asarray(y).astype(str)
        if labels.shape != (X.shape[0],):
            raise DataError("y must hold one marker label per row of X")
        traces = _group_traces(X[:, 1:], labels, q=X[:, 0])
        p1 = [t for t in traces if t.marker_id.lower() == str(self.p1_marker).lower()]
        if not p1:
            raise DataError(f"no rows labelled {self.p1_marker!r}")
        others = tuple(t for t in traces if t is not p1[0])
        report = calibrate(CalibrationInput(p1[0], others, q2_sense=self.q2_sense), sigma_mm=self.sigma_mm)
        self.report_ = report
        self.geometry_ = report.geometry
        self.p2_ = report.p2
        self.p0_ = report.p0
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        """Modelled P1 positions at joint angles ``X`` (rad)."""
        check_is_fitted(self, "report_")
        q = check_array(np.asarray(X, dtype=float).reshape(-1, 1))[:, 0]
        return self.report_.arc.predict(self.report_.q2_sense * q)
