"""Circle-arc fitting with known arc angles (scaled orthogonal Procrustes).

Each measured point is modelled as ``p_i = mu * R @ u_i + t`` where
``u_i = [cos q_i, sin q_i(, 0)]`` is the unit-circle point at the known joint
angle.  Centering removes ``t``; the rotation comes from an SVD of the
cross-covariance, the scale in closed form, and ``t`` from the means.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from ._validation import as_angles, as_points, check_distinct_angles, planar
from .exceptions import DataError, FitError

__all__ = ["MarkerTrace", "ArcFitResult", "fit_arc", "residual_of", "winding_sense", "unit_circle_points"]

Mode = Literal["planar", "spatial"]

MIN_ANGLE_SPREAD = 1e-3


@dataclass(frozen=True, eq=False)
class MarkerTrace:
    """Positions of one marker, each captured at a known joint angle.

    Parameters
    ----------
    marker_id : str
        Label of the physical marker.
    q : array_like, shape (m,)
        Joint angles in radians, pairwise distinct.
    points : array_like, shape (m, 2) or (m, 3)
        Measured coordinates in mm.
    """

    marker_id: str
    q: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        q = as_angles(self.q, name=f"{self.marker_id}: q")
        p = as_points(self.points, name=f"{self.marker_id}: points")
        if q.shape[0] != p.shape[0]:
            raise DataError(f"{self.marker_id}: {q.shape[0]} angles but {p.shape[0]} points")
        check_distinct_angles(q)
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "points", p)

    def __len__(self) -> int:
        return self.q.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def with_points(self, points) -> "MarkerTrace":
        return MarkerTrace(self.marker_id, self.q, points)


@dataclass(frozen=True)
class ArcFitResult:
    """Radius ``mu``, rotation ``R`` (det +1) and center ``t`` of a fitted arc."""

    mu: float
    R: np.ndarray
    t: np.ndarray
    rms_residual: float
    n_points: int
    # True when the unconstrained Procrustes optimum was a reflection, i.e. the
    # points wind against the supplied joint angles.
    reflection_corrected: bool = field(default=False)

    @property
    def radius(self) -> float:
        return self.mu

    @property
    def center(self) -> np.ndarray:
        return self.t

    def predict(self, q) -> np.ndarray:
        """Model points at joint angles ``q``."""
        u = unit_circle_points(np.asarray(q, dtype=float), self.R.shape[0])
        return self.mu * u @ self.R.T + self.t


def unit_circle_points(q: np.ndarray, dim: int = 2) -> np.ndarray:
    u = np.zeros((q.shape[0], dim))
    u[:, 0] = np.cos(q)
    u[:, 1] = np.sin(q)
    return u


def _prepare(trace: MarkerTrace, mode: Mode):
    if mode not in ("planar", "spatial"):
        raise ValueError(f"mode must be 'planar' or 'spatial', got {mode!r}")
    p = planar(trace.points) if mode == "planar" else trace.points
    return trace.q, p


def winding_sense(trace: MarkerTrace) -> int:
    """Return +1 if the planar points wind with increasing ``q``, -1 otherwise.

    This is the sign of the determinant of the centered cross-covariance of
    unit-circle points and measured points, i.e. whether the best orthogonal
    map between them is a rotation or a reflection.
    """
    q, p = _prepare(trace, "planar")
    u = unit_circle_points(q)
    m = (u - u.mean(axis=0)).T @ (p - p.mean(axis=0))
    return -1 if np.linalg.det(m) < 0 else 1


def fit_arc(trace: MarkerTrace, mode: Mode = "planar") -> ArcFitResult:
    """Fit a circle arc to a marker trace whose joint angles are known.

    In ``"planar"`` mode a third coordinate is dropped and a 2x2 rotation is
    estimated; ``"spatial"`` keeps 3-D points and estimates a 3x3 rotation
    (the reference circle lies in the local XY plane).

    Raises
    ------
    FitError
        Fewer than three points, joint-angle spread below 1e-3 rad, or a
        non-positive radius.
    """
    q, p = _prepare(trace, mode)
    m, dim = p.shape
    if m < 3:
        raise FitError(f"{trace.marker_id}: arc fit needs at least 3 points, got {m}")
    if np.ptp(q) <= MIN_ANGLE_SPREAD:
        raise FitError(f"{trace.marker_id}: joint-angle spread {np.ptp(q):.3g} rad is degenerate")

    u = unit_circle_points(q, dim)
    p_mean, u_mean = p.mean(axis=0), u.mean(axis=0)
    ph, uh = p - p_mean, u - u_mean
    uu = float(np.sum(uh * uh))

    U, _, Vt = np.linalg.svd(uh.T @ ph)
    V = Vt.T
    d = np.ones(dim)
    reflected = np.linalg.det(V @ U.T) < 0
    if reflected:
        d[-1] = -1.0
    R = V @ np.diag(d) @ U.T

    mu = float(np.sum(ph * (uh @ R.T))) / uu
    if not mu > 0:
        raise FitError(f"{trace.marker_id}: non-positive radius {mu:.6g}; angles inconsistent with point winding")
    t = p_mean - mu * R @ u_mean

    res = p - mu * u @ R.T - t
    rms = float(np.sqrt(np.mean(np.sum(res * res, axis=1))))
    return ArcFitResult(mu=mu, R=R, t=t, rms_residual=rms, n_points=m, reflection_corrected=bool(reflected))


def residual_of(trace: MarkerTrace, result: ArcFitResult) -> float:
    """RMS distance between measured points and the fitted model points."""
    dim = result.R.shape[0]
    p = trace.points[:, :dim]
    if p.shape[1] != dim:
        raise DataError(f"trace has {trace.dim} coordinates, result expects {dim}")
    res = p - result.predict(trace.q)
    return float(np.sqrt(np.mean(np.sum(res * res, axis=1))))
