"""Design of calibration experiments.

Predicted variances of the arc radius and center under i.i.d. coordinate
noise, and selection of joint angles / marker angles that minimise
``F = (sum cos)^2 + (sum sin)^2``, i.e. the squared length of the sum of the
unit vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize

from ._validation import as_angles
from .exceptions import DataError, PlanningError

__all__ = [
    "ExperimentPlan",
    "CenterCovariance",
    "trig_objective",
    "centered_unit_sum",
    "variance_mu",
    "variance_mu_simplified",
    "cov_center",
    "plan_joint_angles",
    "plan_marker_angles",
    "make_plan",
    "plan_to_dict",
]

DEFAULT_STARTS = 32
DEFAULT_TOL = 1e-10

_TWO_PI = 2.0 * math.pi


def trig_objective(angles) -> float:
    """``(sum cos)^2 + (sum sin)^2``."""
    a = np.asarray(angles, dtype=float)
    return float(np.sum(np.cos(a)) ** 2 + np.sum(np.sin(a)) ** 2)


def centered_unit_sum(angles) -> float:
    """Sum of squared norms of the centered unit vectors, ``m (1 - |mean u|^2)``."""
    a = as_angles(angles)
    u = np.column_stack([np.cos(a), np.sin(a)])
    uh = u - u.mean(axis=0)
    return float(np.sum(uh * uh))


def _checked_denominator(angles) -> float:
    a = as_angles(angles, min_len=3)
    den = centered_unit_sum(a)
    if den <= 1e-12 * a.size:
        raise DataError("angle set has no spread; the variance is infinite")
    return den


def variance_mu(angles, sigma: float) -> float:
    """Variance of the fitted arc radius for the given joint angles.

    Uses the exact centered denominator; it reduces to ``sigma^2 / m`` only
    for balanced angle sets (``sum u_i = 0``).
    """
    return sigma**2 / _checked_denominator(angles)


def variance_mu_simplified(m: int, sigma: float) -> float:
    """``sigma^2 / m``: the balanced-design value of :func:`variance_mu`."""
    if m < 1:
        raise DataError("m must be positive")
    return sigma**2 / m


class CenterCovariance(NamedTuple):
    cov: np.ndarray
    trace: float


def cov_center(
    angles,
    sigma: float,
    form: Literal["exact", "simplified"] = "exact",
    rotation: np.ndarray | None = None,
) -> CenterCovariance:
    """Covariance of the fitted arc center.

    ``form="exact"`` is the first-order covariance of the full fit (center,
    radius and rotation all estimated), which is isotropic:
    ``sigma^2 / sum|u_hat|^2 * I``.  ``form="simplified"`` is
    ``sigma^2/m (I + m^-2 R S S^T R^T)`` with ``S = sum u_i``; it neglects the
    rotation error and assumes ``var(mu) = sigma^2/m``, so it agrees with the
    exact form only for balanced sets.
    """
    a = as_angles(angles, min_len=3)
    m = a.size
    if form == "exact":
        var = sigma**2 / _checked_denominator(a)
        cov = var * np.eye(2)
    elif form == "simplified":
        S = np.array([np.sum(np.cos(a)), np.sum(np.sin(a))])
        if rotation is not None:
            S = np.asarray(rotation, dtype=float)[:2, :2] @ S
        cov = sigma**2 / m * (np.eye(2) + np.outer(S, S) / m**2)
    else:
        raise ValueError(f"unknown form {form!r}")
    return CenterCovariance(cov, float(np.trace(cov)))


def _objective_and_grad(x: np.ndarray):
    c, s = np.cos(x), np.sin(x)
    C, S = c.sum(), s.sum()
    return C * C + S * S, 2.0 * (S * c - C * s)


def plan_joint_angles(
    m: int,
    q_min: float,
    q_max: float,
    n_starts: int = DEFAULT_STARTS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> np.ndarray:
    """Joint angles in ``[q_min, q_max]`` minimising the trigonometric objective.

    When the range covers ``2 pi (1 - 1/m)`` the equally spaced set (objective
    zero) is returned.  Otherwise the best of ``n_starts`` bound-constrained
    quasi-Newton descents from random starts is returned, sorted ascending.
    """
    if m < 3:
        raise DataError(f"at least 3 joint angles are required, got m={m}")
    if not q_max > q_min:
        raise DataError("q_max must exceed q_min")
    if n_starts < 1:
        raise DataError("n_starts must be positive")

    if q_max - q_min >= _TWO_PI * (1.0 - 1.0 / m):
        return q_min + _TWO_PI * np.arange(m) / m

    rng = np.random.default_rng(seed)
    bounds = [(q_min, q_max)] * m
    best_x, best_f = None, math.inf
    for _ in range(n_starts):
        x0 = rng.uniform(q_min, q_max, size=m)
        res = minimize(
            _objective_and_grad,
            x0,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"ftol": tol, "gtol": 1e-12, "maxiter": 2000},
        )
        x = np.clip(res.x, q_min, q_max)
        f = trig_objective(x)
        if f < best_f:
            best_x, best_f = x, f
    return np.sort(best_x)


def _in_sector(angle: float, lo: float, hi: float) -> bool:
    width = (hi - lo) % _TWO_PI
    return (angle - lo) % _TWO_PI <= width


def plan_marker_angles(
    k: int,
    forbidden: Sequence[tuple[float, float]] | None = None,
    resolution: int = 3600,
) -> np.ndarray:
    """Marker angles around P0 with zero trigonometric objective.

    The equally spaced set is used (for ``k = 2`` an antipodal pair).  With
    ``forbidden`` sectors ``(lo, hi)`` (rad, counter-clockwise from ``lo``),
    the common shift keeping the largest clearance from every sector is
    chosen.
    """
    if k < 2:
        raise DataError(f"at least 2 markers are required, got k={k}")
    base = _TWO_PI * np.arange(k) / k
    if not forbidden:
        return base

    sectors = [(float(lo) % _TWO_PI, float(hi) % _TWO_PI) for lo, hi in forbidden]
    best_shift, best_clearance = None, -1.0
    for shift in np.linspace(0.0, _TWO_PI / k, resolution, endpoint=False):
        angles = (base + shift) % _TWO_PI
        if any(_in_sector(a, lo, hi) for a in angles for lo, hi in sectors):
            continue
        clearance = min(
            min(abs(math.remainder(a - lo, _TWO_PI)), abs(math.remainder(a - hi, _TWO_PI)))
            for a in angles
            for lo, hi in sectors
        )
        if clearance > best_clearance:
            best_shift, best_clearance = shift, clearance
    if best_shift is None:
        raise PlanningError("no balanced marker placement avoids the forbidden sectors")
    return base + best_shift


@dataclass(frozen=True)
class ExperimentPlan:
    q2_angles: np.ndarray
    beta_angles: np.ndarray
    objective_value: float
    predicted_var_mu: float
    predicted_cov_center_trace: float
    sigma: float

    @property
    def m(self) -> int:
        return len(self.q2_angles)

    @property
    def k(self) -> int:
        return len(self.beta_angles)


def make_plan(
    m: int,
    k: int,
    q_min: float,
    q_max: float,
    sigma: float = 0.01,
    n_starts: int = DEFAULT_STARTS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    forbidden: Sequence[tuple[float, float]] | None = None,
) -> ExperimentPlan:
    """Joint-angle and marker-angle plan with predicted radius/center variances."""
    q2 = plan_joint_angles(m, q_min, q_max, n_starts=n_starts, tol=tol, seed=seed)
    beta = plan_marker_angles(k, forbidden=forbidden)
    return ExperimentPlan(
        q2_angles=q2,
        beta_angles=beta,
        objective_value=trig_objective(q2),
        predicted_var_mu=variance_mu(q2, sigma),
        predicted_cov_center_trace=cov_center(q2, sigma).trace,
        sigma=sigma,
    )


def plan_to_dict(plan: ExperimentPlan) -> dict:
    return {
        "q2_deg": [math.degrees(q) for q in plan.q2_angles],
        "beta_deg": [math.degrees(b) for b in plan.beta_angles],
        "objective": plan.objective_value,
        "beta_objective": trig_objective(plan.beta_angles),
        "predicted_var": {
            "mu_mm2": plan.predicted_var_mu,
            "center_trace_mm2": plan.predicted_cov_center_trace,
        },
        "sigma_mm": plan.sigma,
    }
