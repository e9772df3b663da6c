"""Concentric-arc fitting: several marker traces rotating about one axis.

The joint angles are not used here: markers on the compensator body rotate by
angles that are unknown until the geometry is known.  The algebraic objective
``sum_j sum_i (R_j^2 - |p_ij - c_j|^2)^2`` is minimised in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from ._validation import planar
from .arcfit import MarkerTrace
from .exceptions import DataError, FitError

__all__ = ["AxisFitResult", "fit_concentric", "arc_radii", "normalize_axis_sign"]

Mode = Literal["planar", "spatial"]

_RANK_TOL = 1e-12
_Z_AXIS = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class AxisFitResult:
    """Common rotation axis and per-trace arc centers/radii.

    ``centers[j] == p_c + xis[j] * n`` (``n`` truncated to the data dimension,
    so planar results have ``centers[j] == p_c``).
    """

    p_c: np.ndarray
    n: np.ndarray
    centers: np.ndarray
    xis: np.ndarray
    radii: np.ndarray
    rms_residual: float
    objective: float
    marker_ids: tuple[str, ...] = ()
    n_points: tuple[int, ...] = ()

    @property
    def center(self) -> np.ndarray:
        return self.p_c


def normalize_axis_sign(n: np.ndarray) -> np.ndarray:
    """Flip ``n`` so that its largest-magnitude component is positive."""
    n = np.asarray(n, dtype=float)
    return -n if n[np.argmax(np.abs(n))] < 0 else n


def arc_radii(traces: Sequence[MarkerTrace], centers) -> np.ndarray:
    """Radii as the RMS distance of each trace's points from its center."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if centers.shape[0] == 1 and len(traces) > 1:
        centers = np.repeat(centers, len(traces), axis=0)
    if centers.shape[0] != len(traces):
        raise DataError(f"{len(traces)} traces but {centers.shape[0]} centers")
    out = []
    for tr, c in zip(traces, centers):
        p = tr.points[:, : c.shape[0]]
        if p.shape[1] != c.shape[0]:
            raise DataError(f"{tr.marker_id}: {tr.dim}-D points vs {c.shape[0]}-D center")
        d = p - c
        out.append(np.sqrt(np.mean(np.sum(d * d, axis=1))))
    return np.array(out)


def _scatter(blocks: list[np.ndarray], origin: np.ndarray):
    """Sum of centered outer products and the right-hand side of the center equation."""
    dim = origin.shape[0]
    A = np.zeros((dim, dim))
    b = np.zeros(dim)
    for p in blocks:
        p = p - origin
        ph = p - p.mean(axis=0)
        sq = np.sum(p * p, axis=1)
        sh = sq - sq.mean()
        A += ph.T @ ph
        b += ph.T @ sh
    return A, b


def fit_concentric(traces: Sequence[MarkerTrace], mode: Mode = "planar") -> AxisFitResult:
    """Fit concentric arcs sharing one rotation axis.

    Parameters
    ----------
    traces : sequence of MarkerTrace
        One trace per marker, each with at least three points.
    mode : {"planar", "spatial"}
        ``"planar"`` drops z, fixes the axis to +Z and fits one shared 2-D
        center.  ``"spatial"`` estimates the axis direction from the smallest
        principal direction of the centered scatter, then a point on it; the
        unobservable axial position of ``p_c`` is fixed so that ``p_c . n``
        equals the mean of all points projected on ``n``.

    Raises
    ------
    FitError
        A trace with coincident points, or a scatter matrix that is singular
        beyond the expected axis direction (collinear data).
    """
    if mode not in ("planar", "spatial"):
        raise ValueError(f"mode must be 'planar' or 'spatial', got {mode!r}")
    if len(traces) == 0:
        raise DataError("at least one trace is required")

    blocks = []
    for tr in traces:
        if len(tr) < 3:
            raise FitError(f"{tr.marker_id}: concentric fit needs at least 3 points, got {len(tr)}")
        p = planar(tr.points) if mode == "planar" else tr.points
        if mode == "spatial" and p.shape[1] != 3:
            raise DataError(f"{tr.marker_id}: spatial mode needs 3-D points")
        if np.allclose(p, p[0], rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(p).max()))):
            raise FitError(f"{tr.marker_id}: all points coincide")
        blocks.append(p)

    origin = np.vstack(blocks).mean(axis=0)
    A, b = _scatter(blocks, origin)
    scale = np.trace(A)

    if mode == "planar":
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[-1] <= _RANK_TOL * scale:
            raise FitError("scatter matrix is singular; points are collinear")
        p_c = 0.5 * np.linalg.solve(A, b) + origin
        n = _Z_AXIS.copy()
        xis = np.zeros(len(blocks))
        centers = np.repeat(p_c[None, :], len(blocks), axis=0)
    else:
        _, sv, Vt = np.linalg.svd(A)
        if sv[1] <= _RANK_TOL * scale:
            raise FitError("scatter matrix has rank < 2; points are collinear")
        n = normalize_axis_sign(Vt[-1])
        B = Vt[:2].T
        y = np.linalg.solve(B.T @ A @ B, 0.5 * B.T @ b)
        # B @ y is orthogonal to n, so p_c . n == mean(all points) . n
        p_c = B @ y + origin
        xis = np.array([float((p.mean(axis=0) - p_c) @ n) for p in blocks])
        centers = p_c[None, :] + xis[:, None] * n[None, :]

    radii = np.array([np.sqrt(np.mean(np.sum((p - c) ** 2, axis=1))) for p, c in zip(blocks, centers)])
    dist_res = np.concatenate([np.linalg.norm(p - c, axis=1) - r for p, c, r in zip(blocks, centers, radii)])
    alg_res = np.concatenate([r * r - np.sum((p - c) ** 2, axis=1) for p, c, r in zip(blocks, centers, radii)])
    return AxisFitResult(
        p_c=p_c,
        n=n,
        centers=centers,
        xis=xis,
        radii=radii,
        rms_residual=float(np.sqrt(np.mean(dist_res**2))),
        objective=float(np.sum(alg_res**2)),
        marker_ids=tuple(tr.marker_id for tr in traces),
        n_points=tuple(len(p) for p in blocks),
    )
