"""Error bars for identified parameters by parametric bootstrap.

Every trial adds i.i.d. Gaussian noise to the x/y coordinates of all markers
and reruns the identification.  Trial ``i`` draws from its own stream
``SeedSequence(seed, spawn_key=(i,))`` so results do not depend on the order
or grouping in which trials are evaluated.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import CalibrationWarning, DataError, GravCompError, NumericalError
from .pipeline import CalibrationInput, CalibrationReport, calibrate

__all__ = [
    "UncertaintyConfig",
    "ParameterBounds",
    "PARAMETERS",
    "parameter_vector",
    "monte_carlo_bounds",
    "linearized_covariance",
    "residual_sigma",
    "bound_report",
    "bound_table",
]

PARAMETERS = ("L", "a_x", "a_y", "p2_x", "p2_y", "p0_x", "p0_y")
TABLE_PARAMETERS = ("L", "a_x", "a_y")
MAX_FAILURE_RATE = 0.01


@dataclass(frozen=True)
class UncertaintyConfig:
    """Tracker noise ``sigma`` (mm per coordinate), trial count and seed.

    ``coverage`` is the multiple of the standard deviation reported as the
    +/- bound.
    """

    sigma: float = 0.010
    trials: int = 10_000
    seed: int = 0
    coverage: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise DataError(f"sigma must be non-negative, got {self.sigma}")
        if self.trials < 1:
            raise DataError(f"trials must be >= 1, got {self.trials}")
        if not self.coverage > 0:
            raise DataError("coverage must be positive")


@dataclass(frozen=True)
class ParameterBounds:
    """Per-parameter Monte-Carlo statistics; ``samples`` holds one row per successful trial."""

    names: tuple[str, ...]
    nominal: np.ndarray
    samples: np.ndarray
    failures: int
    config: UncertaintyConfig

    @property
    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)

    @property
    def std(self) -> np.ndarray:
        ddof = 1 if self.samples.shape[0] > 1 else 0
        return self.samples.std(axis=0, ddof=ddof)

    @property
    def bound(self) -> np.ndarray:
        return self.config.coverage * self.std

    def __getitem__(self, name: str) -> dict[str, float]:
        i = self.names.index(name)
        return {
            "value": float(self.nominal[i]),
            "mean": float(self.mean[i]),
            "std": float(self.std[i]),
            "bound": float(self.bound[i]),
        }

    def to_dict(self) -> dict:
        return {
            "method": "monte_carlo",
            "sigma_mm": self.config.sigma,
            "trials": self.config.trials,
            "seed": self.config.seed,
            "coverage_std": self.config.coverage,
            "failures": self.failures,
            "parameters": {n: self[n] for n in self.names},
        }


def parameter_vector(report: CalibrationReport) -> np.ndarray:
    return np.array([report.L, report.a_x, report.a_y, *report.p2, *report.p0])


def _quiet_calibrate(inp: CalibrationInput) -> CalibrationReport:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CalibrationWarning)
        return calibrate(inp)


def monte_carlo_bounds(inp: CalibrationInput, cfg: UncertaintyConfig) -> ParameterBounds:
    """Bootstrap standard deviations of ``L, a_x, a_y`` (and of ``p2``, ``p0``).

    The joint-angle sense found for the unperturbed data is kept fixed in all
    trials.  Trials whose fit raises are counted; more than 1 % failures is an
    error.
    """
    nominal = _quiet_calibrate(inp)
    base = [np.array(tr.points, dtype=float) for tr in inp.traces]
    root = np.random.SeedSequence(cfg.seed)
    rows = []
    failures = 0
    for i in range(cfg.trials):
        rng = np.random.default_rng(np.random.SeedSequence(root.entropy, spawn_key=(i,)))
        points = []
        for p in base:
            noisy = p.copy()
            noisy[:, :2] += rng.normal(0.0, cfg.sigma, size=(p.shape[0], 2))
            points.append(noisy)
        try:
            rep = _quiet_calibrate(inp.with_points(points, q2_sense=nominal.q2_sense))
        except GravCompError:
            failures += 1
            continue
        rows.append(parameter_vector(rep))
    if failures > MAX_FAILURE_RATE * cfg.trials:
        raise NumericalError(f"{failures} of {cfg.trials} perturbed calibrations failed")
    return ParameterBounds(
        names=PARAMETERS,
        nominal=parameter_vector(nominal),
        samples=np.array(rows),
        failures=failures,
        config=cfg,
    )


def linearized_covariance(inp: CalibrationInput, sigma: float, step: float = 1e-4) -> np.ndarray:
    """First-order covariance of :data:`PARAMETERS` under i.i.d. x/y noise.

    The sensitivity of the whole identification to every measured coordinate
    is taken by central differences.
    """
    nominal = _quiet_calibrate(inp)
    base = [np.array(tr.points, dtype=float) for tr in inp.traces]
    columns = []
    for t, p in enumerate(base):
        for i in range(p.shape[0]):
            for c in range(2):
                out = []
                for h in (step, -step):
                    pts = [b.copy() for b in base]
                    pts[t][i, c] += h
                    out.append(parameter_vector(_quiet_calibrate(inp.with_points(pts, q2_sense=nominal.q2_sense))))
                columns.append((out[0] - out[1]) / (2 * step))
    G = np.column_stack(columns)
    return sigma**2 * G @ G.T


def residual_sigma(report: CalibrationReport) -> float:
    """Per-coordinate noise level implied by the fit residuals of both steps.

    Pools the 2-D residuals of the P1 arc (``2m - 4`` degrees of freedom) and
    the radial residuals of the concentric fit (``N - 2 - k``).
    """
    m = report.arc.n_points
    n = sum(report.axis.n_points)
    k = len(report.axis.n_points)
    ssr = m * report.arc.rms_residual**2 + n * report.axis.rms_residual**2
    return math.sqrt(ssr / (2 * m - 4 + n - 2 - k))


def bound_table(bounds: ParameterBounds, decimals: int = 2) -> dict[str, dict[str, float]]:
    """Value and accuracy rows, rounded as displayed by :func:`bound_report`."""
    return {
        "value": {n: round(bounds[n]["value"], decimals) for n in TABLE_PARAMETERS},
        "accuracy": {n: round(bounds[n]["bound"], decimals) for n in TABLE_PARAMETERS},
    }


def bound_report(bounds: ParameterBounds, fmt: str = "text", decimals: int = 2) -> str:
    """Two-row table of identified values and their +/- accuracy.

    ``fmt="json"`` returns the same rounded numbers as a JSON object.
    """
    table = bound_table(bounds, decimals)
    if fmt == "json":
        return json.dumps(table, indent=2)
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    width = 12
    head = "".ljust(10) + "".join(f"{n + ', [mm]':>{width}}" for n in TABLE_PARAMETERS)
    value = "value".ljust(10) + "".join(f"{table['value'][n]:>{width}.{decimals}f}" for n in TABLE_PARAMETERS)
    acc = "accuracy".ljust(10) + "".join(
        f"{'± ' + format(table['accuracy'][n], f'.{decimals}f'):>{width}}" for n in TABLE_PARAMETERS
    )
    return "\n".join([head, value, acc])
