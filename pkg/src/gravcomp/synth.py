"""Synthetic measurements and independent reference solvers.

The reference solvers here deliberately share no code with :mod:`arcfit`,
:mod:`axisfit` or :mod:`doe`: they minimise the same objectives by
Gauss-Newton iteration with finite-difference Jacobians, or by exhaustive
search, so that agreement with the closed-form routines is real evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .arcfit import ArcFitResult, MarkerTrace
from .axisfit import AxisFitResult
from .exceptions import DataError, FitError
from .model import REFERENCE_GEOMETRY, CompensatorGeometry
from .pipeline import CalibrationInput

__all__ = [
    "GroundTruth",
    "generate_traces",
    "oracle_fit_arc",
    "oracle_fit_concentric",
    "algebraic_circle_fit",
    "oracle_grid_trig_minimum",
    "gauss_newton",
]


@dataclass(frozen=True)
class GroundTruth:
    """Known compensator pose in the tracker frame.

    ``p1_phase`` is the direction of P2->P1 at ``q2 = 0``; P1 turns by
    ``q2_sense * q2`` from there.  Marker ``j`` sits at distance
    ``marker_radii[j]`` from P0, at angle ``marker_phases[j]`` from the spring
    direction P0->P1, so it rotates with the spring.
    """

    geometry: CompensatorGeometry
    p2: np.ndarray
    p0: np.ndarray
    marker_radii: tuple[float, ...]
    marker_phases: tuple[float, ...]
    p1_phase: float = 0.0
    q2_sense: int = 1

    def __post_init__(self):
        p2 = np.asarray(self.p2, dtype=float)
        p0 = np.asarray(self.p0, dtype=float)
        object.__setattr__(self, "p2", p2)
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "marker_radii", tuple(float(r) for r in self.marker_radii))
        object.__setattr__(self, "marker_phases", tuple(float(b) for b in self.marker_phases))
        a = np.array([self.geometry.a_x, self.geometry.a_y])
        if not np.allclose(p2 - p0, a, rtol=0.0, atol=1e-9 * max(1.0, self.geometry.a)):
            raise DataError("p2 - p0 must equal (a_x, a_y)")
        if len(self.marker_radii) != len(self.marker_phases) or not self.marker_radii:
            raise DataError("marker radii and phases must be non-empty and of equal length")
        if min(self.marker_radii) <= 0:
            raise DataError("marker radii must be positive")
        if self.q2_sense not in (1, -1):
            raise DataError("q2_sense must be +1 or -1")

    @classmethod
    def from_geometry(
        cls,
        geometry: CompensatorGeometry,
        p2=(0.0, 0.0),
        marker_radii: Sequence[float] = (186.7, 188.3),
        marker_phases: Sequence[float] = (math.radians(157.7), math.radians(-157.5)),
        p1_phase: float = math.radians(99.8),
        q2_sense: int = -1,
    ) -> "GroundTruth":
        """Place P0 from ``p2`` and the geometry.

        The defaults mimic the reference measurement setup: P1 near the +Y axis
        at ``q2 = 0`` and turning clockwise, two markers behind P0.
        """
        p2 = np.asarray(p2, dtype=float)
        p0 = p2 - np.array([geometry.a_x, geometry.a_y])
        return cls(geometry, p2, p0, tuple(marker_radii), tuple(marker_phases), p1_phase, q2_sense)

    @classmethod
    def reference(cls) -> "GroundTruth":
        return cls.from_geometry(REFERENCE_GEOMETRY)

    def p1_position(self, q2) -> np.ndarray:
        th = self.p1_phase + self.q2_sense * np.asarray(q2, dtype=float)
        return self.p2 + self.geometry.L * np.column_stack([np.cos(th), np.sin(th)])

    def marker_positions(self, q2, j: int) -> np.ndarray:
        d = self.p1_position(q2) - self.p0
        psi = np.arctan2(d[:, 1], d[:, 0]) + self.marker_phases[j]
        return self.p0 + self.marker_radii[j] * np.column_stack([np.cos(psi), np.sin(psi)])


def generate_traces(
    truth: GroundTruth,
    q2_angles,
    sigma: float = 0.0,
    seed: int | np.random.Generator | None = 0,
    z: float | None = None,
) -> CalibrationInput:
    """Marker traces for ``truth`` at the given joint angles.

    Zero-mean Gaussian noise of std ``sigma`` (mm) is added to each coordinate.
    With ``z`` given, points get a constant third coordinate (plus noise).
    """
    q = np.asarray(q2_angles, dtype=float)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    clean = [truth.p1_position(q)] + [truth.marker_positions(q, j) for j in range(len(truth.marker_radii))]
    if z is not None:
        clean = [np.column_stack([p, np.full(len(q), float(z))]) for p in clean]
    noisy = [p + rng.normal(0.0, sigma, size=p.shape) if sigma > 0 else p for p in clean]
    names = ["P1"] + [f"P0{j + 1}" for j in range(len(truth.marker_radii))]
    traces = [MarkerTrace(n, q, p) for n, p in zip(names, noisy)]
    return CalibrationInput(traces[0], tuple(traces[1:]), frame_note="synthetic")


def _num_jac(fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray, r0: np.ndarray) -> np.ndarray:
    J = np.empty((r0.size, x.size))
    for k in range(x.size):
        h = 1e-7 * max(1.0, abs(x[k]))
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        J[:, k] = (fun(xp) - fun(xm)) / (xp[k] - xm[k])
    return J


def gauss_newton(
    fun: Callable[[np.ndarray], np.ndarray],
    x0,
    max_iter: int = 200,
    gtol: float = 1e-12,
    rtol: float = 1e-8,
) -> tuple[np.ndarray, float, float, bool]:
    """Minimise ``|fun(x)|^2`` with step-halving Gauss-Newton.

    Returns ``(x, objective, gradient_norm, converged)``.  Converged means
    ``|J^T r| <= gtol`` or ``|J^T r| <= rtol |J| |r|``; the relative test is
    needed because finite-difference noise puts a floor of roughly
    ``eps |r| / h`` under the absolute gradient.
    """

    def done(J, r, g):
        return g <= gtol or g <= rtol * np.linalg.norm(J) * np.linalg.norm(r)

    x = np.array(x0, dtype=float)
    r = fun(x)
    f = float(r @ r)
    for _ in range(max_iter):
        J = _num_jac(fun, x, r)
        gnorm = float(np.linalg.norm(J.T @ r))
        if done(J, r, gnorm):
            return x, f, gnorm, True
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        alpha = 1.0
        while alpha > 1e-10:
            xn = x + alpha * step
            rn = fun(xn)
            fn = float(rn @ rn)
            if fn <= f:
                break
            alpha *= 0.5
        else:
            break
        moved = np.linalg.norm(xn - x)
        x, r, f = xn, rn, fn
        if moved <= 1e-15 * (1.0 + np.linalg.norm(x)):
            break
    J = _num_jac(fun, x, r)
    gnorm = float(np.linalg.norm(J.T @ r))
    return x, f, gnorm, bool(done(J, r, gnorm))


def _normalization(points: np.ndarray) -> tuple[np.ndarray, float]:
    origin = points.mean(axis=0)
    scale = float(np.sqrt(np.mean(np.sum((points - origin) ** 2, axis=1))))
    if scale == 0.0:
        raise FitError("all points coincide")
    return origin, scale


def oracle_fit_arc(trace: MarkerTrace, n_starts: int = 8, max_iter: int = 200) -> ArcFitResult:
    """Reference arc fit: Gauss-Newton over (center, radius, phase offset).

    Minimises ``sum |p_i - c - r [cos(q_i + phi), sin(q_i + phi)]|^2`` on the
    planar coordinates, starting from ``n_starts`` phase offsets.
    """
    q = np.asarray(trace.q, dtype=float)
    p = np.asarray(trace.points, dtype=float)[:, :2]
    if len(q) < 3:
        raise FitError(f"oracle arc fit needs at least 3 points, got {len(q)}")
    origin, scale = _normalization(p)
    pn = (p - origin) / scale

    def resid(x):
        cx, cy, r, ph = x
        return np.concatenate([pn[:, 0] - cx - r * np.cos(q + ph), pn[:, 1] - cy - r * np.sin(q + ph)])

    best = None
    for k in range(n_starts):
        x, f, _, ok = gauss_newton(resid, [0.0, 0.0, 1.0, 2 * math.pi * k / n_starts], max_iter=max_iter)
        if ok and (best is None or f < best[1]):
            best = (x, f)
    if best is None:
        raise FitError("oracle arc fit did not converge")
    cx, cy, r, ph = best[0]
    if r < 0:
        r, ph = -r, ph + math.pi
    R = np.array([[math.cos(ph), -math.sin(ph)], [math.sin(ph), math.cos(ph)]])
    t = origin + scale * np.array([cx, cy])
    mu = r * scale
    res = p - mu * np.column_stack([np.cos(q + ph), np.sin(q + ph)]) - t
    return ArcFitResult(mu=mu, R=R, t=t, rms_residual=float(np.sqrt(np.mean(np.sum(res**2, axis=1)))), n_points=len(q))


def oracle_fit_concentric(traces: Sequence[MarkerTrace], n_starts: int = 8, max_iter: int = 200) -> AxisFitResult:
    """Reference concentric fit: joint Gauss-Newton over a shared planar center and radii.

    Residuals are ``R_j^2 - |p_ij - c|^2``.
    """
    blocks = [np.asarray(tr.points, dtype=float)[:, :2] for tr in traces]
    if not blocks or any(len(b) < 3 for b in blocks):
        raise FitError("oracle concentric fit needs traces with at least 3 points")
    allp = np.vstack(blocks)
    origin, scale = _normalization(allp)
    bn = [(b - origin) / scale for b in blocks]
    k = len(bn)

    def resid(x):
        c = x[:2]
        return np.concatenate([x[2 + j] ** 2 - np.sum((b - c) ** 2, axis=1) for j, b in enumerate(bn)])

    best = None
    for s in range(n_starts):
        ang = 2 * math.pi * s / n_starts
        c0 = 2.0 * np.array([math.cos(ang), math.sin(ang)])
        r0 = [float(np.sqrt(np.mean(np.sum((b - c0) ** 2, axis=1)))) for b in bn]
        x, f, _, ok = gauss_newton(resid, np.concatenate([c0, r0]), max_iter=max_iter)
        if ok and (best is None or f < best[1]):
            best = (x, f)
    if best is None:
        raise FitError("oracle concentric fit did not converge")
    x = best[0]
    center = origin + scale * x[:2]
    radii = np.abs(x[2:]) * scale
    dist = np.concatenate([np.linalg.norm(b - center, axis=1) - r for b, r in zip(blocks, radii)])
    alg = np.concatenate([r * r - np.sum((b - center) ** 2, axis=1) for b, r in zip(blocks, radii)])
    return AxisFitResult(
        p_c=center,
        n=np.array([0.0, 0.0, 1.0]),
        centers=np.repeat(center[None, :], k, axis=0),
        xis=np.zeros(k),
        radii=radii,
        rms_residual=float(np.sqrt(np.mean(dist**2))),
        objective=float(np.sum(alg**2)),
        marker_ids=tuple(tr.marker_id for tr in traces),
        n_points=tuple(len(b) for b in blocks),
    )


def algebraic_circle_fit(points) -> tuple[np.ndarray, float]:
    """Linear least-squares circle fit ``2 x cx + 2 y cy + c = x^2 + y^2``."""
    p = np.asarray(points, dtype=float)[:, :2]
    o = p.mean(axis=0)
    d = p - o
    A = np.column_stack([2 * d, np.ones(len(d))])
    rhs = np.sum(d * d, axis=1)
    (cx, cy, c), *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return o + np.array([cx, cy]), float(math.sqrt(c + cx * cx + cy * cy))


def _multisets(n: int, size: int) -> np.ndarray:
    """All non-decreasing index tuples of length ``size`` drawn from ``range(n)``."""
    idx = np.arange(n, dtype=np.int64)[:, None]
    for _ in range(size - 1):
        last = idx[:, -1]
        counts = n - last
        rows = np.repeat(idx, counts, axis=0)
        starts = np.repeat(last, counts)
        offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        idx = np.column_stack([rows, starts + offsets])
    return idx


def oracle_grid_trig_minimum(
    m: int, q_min: float, q_max: float, step: float = math.radians(1.0), max_combos: int = 5_000_000
) -> tuple[float, np.ndarray]:
    """Exhaustive minimum of ``(sum cos)^2 + (sum sin)^2`` over grid multisets.

    The grid is ``q_min, q_min + step, ...`` up to ``q_max``.  The search is
    exact: all multisets are split into two halves whose vector sums are
    matched by nearest-neighbour lookup.
    """
    n = int(math.floor((q_max - q_min) / step + 1e-9)) + 1
    grid = q_min + step * np.arange(n)
    m1 = m // 2
    m2 = m - m1
    if math.comb(n + m2 - 1, m2) > max_combos:
        raise DataError("grid search too large")
    u = np.column_stack([np.cos(grid), np.sin(grid)])
    i2 = _multisets(n, m2)
    s2 = u[i2].sum(axis=1)
    i1 = i2 if m1 == m2 else _multisets(n, m1)
    s1 = s2 if m1 == m2 else u[i1].sum(axis=1)
    tree = cKDTree(s2)
    # an achieved pair distance bounds the optimum and prunes the full pass
    probe = np.random.default_rng(0).choice(len(s1), size=min(len(s1), 2000), replace=False)
    bound = float(tree.query(-s1[probe])[0].min())
    dist, j = tree.query(-s1, distance_upper_bound=bound * (1.0 + 1e-9) + 1e-12)
    best = int(np.argmin(dist))
    angles = np.sort(grid[np.concatenate([i1[best], i2[j[best]]])])
    F = float(np.sum(np.cos(angles)) ** 2 + np.sum(np.sin(angles)) ** 2)
    return F, angles
