"""Input validation helpers shared by the fitting routines and estimators."""

from __future__ import annotations

import numpy as np

from .exceptions import DataError, DomainError

# Rounding slack before a sqrt/asin argument is treated as a genuine domain error.
DOMAIN_TOL = 1e-9

# Minimum pairwise separation of joint angles inside one trace (rad).
MIN_ANGLE_SEPARATION = 1e-6


def as_points(points, *, name: str = "points", min_rows: int = 0) -> np.ndarray:
    """Return ``points`` as a finite float array of shape (n, 2) or (n, 3)."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] not in (2, 3):
        raise DataError(f"{name} must have shape (n, 2) or (n, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    if arr.shape[0] < min_rows:
        raise DataError(f"{name} needs at least {min_rows} rows, got {arr.shape[0]}")
    return arr


def as_angles(angles, *, name: str = "angles", min_len: int = 0) -> np.ndarray:
    """Return ``angles`` as a finite 1-D float array."""
    arr = np.asarray(angles, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise DataError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    if arr.size < min_len:
        raise DataError(f"{name} needs at least {min_len} values, got {arr.size}")
    return arr


def check_distinct_angles(q: np.ndarray, *, tol: float = MIN_ANGLE_SEPARATION) -> None:
    if q.size < 2:
        return
    gaps = np.diff(np.sort(q))
    if np.min(gaps) <= tol:
        i = int(np.argmin(gaps))
        raise DataError(f"joint angles are not distinct (separation {gaps[i]:.3g} rad <= {tol:g})")


def clamp_unit(x: float, *, what: str = "value") -> float:
    """Clamp ``x`` into [-1, 1] if it is within ``DOMAIN_TOL`` of the interval."""
    if abs(x) > 1.0 + DOMAIN_TOL:
        raise DomainError(f"{what} = {x!r} lies outside [-1, 1]")
    return min(1.0, max(-1.0, x))


def planar(points: np.ndarray) -> np.ndarray:
    """Drop the third coordinate if present."""
    return points[:, :2] if points.shape[1] == 3 else points
