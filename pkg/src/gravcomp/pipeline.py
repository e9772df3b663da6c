"""Two-step identification of the compensator geometry from marker traces.

Step 1 fits the crank marker P1 (known joint angles) to get ``L`` and the
joint-2 center ``p2``.  Step 2 fits the markers rotating about P0 to
concentric arcs to get ``p0``.  ``(a_x, a_y)`` is the in-plane difference
``p2 - p0`` in the tracker frame, whose Y/Z axes are assumed aligned with
joints 1 and 2.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import IO, Any, Sequence

import numpy as np

from .arcfit import ArcFitResult, MarkerTrace, fit_arc, winding_sense
from .axisfit import AxisFitResult, fit_concentric
from .exceptions import CalibrationWarning, DataError
from .model import CompensatorGeometry

__all__ = [
    "CalibrationInput",
    "CalibrationReport",
    "calibrate",
    "ingest_measurements",
    "write_measurements",
    "report_to_dict",
    "report_to_json",
    "DEFAULT_SIGMA_MM",
    "INPUT_COLUMNS",
]

# Laser-tracker accuracy used for residual sanity checks.
DEFAULT_SIGMA_MM = 0.010
RESIDUAL_WARN_FACTOR = 5.0

INPUT_COLUMNS = ("q2_deg", "marker", "x_mm", "y_mm")


@dataclass(frozen=True)
class CalibrationInput:
    """Marker traces for one calibration run.

    ``q2_sense`` relates the joint angle to the tracker's XY orientation:
    +1 if P1 moves counter-clockwise for increasing q2, -1 if clockwise, and
    ``None`` to detect it from the P1 trace.
    """

    p1_trace: MarkerTrace
    p0_traces: tuple[MarkerTrace, ...]
    frame_note: str = ""
    q2_sense: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "p0_traces", tuple(self.p0_traces))
        if not self.p0_traces:
            raise DataError("at least one P0-side marker trace is required")
        if self.q2_sense not in (None, 1, -1):
            raise DataError(f"q2_sense must be +1, -1 or None, got {self.q2_sense!r}")

    @property
    def traces(self) -> tuple[MarkerTrace, ...]:
        return (self.p1_trace, *self.p0_traces)

    def with_points(self, points: Sequence[np.ndarray], q2_sense: int | None = None) -> "CalibrationInput":
        """Copy with every trace's points replaced (P1 first), e.g. for perturbation."""
        traces = [tr.with_points(p) for tr, p in zip(self.traces, points)]
        sense = self.q2_sense if q2_sense is None else q2_sense
        return CalibrationInput(traces[0], tuple(traces[1:]), self.frame_note, sense)


@dataclass(frozen=True)
class CalibrationReport:
    geometry: CompensatorGeometry
    p2: np.ndarray
    p0: np.ndarray
    residuals: dict[str, float]
    q2_sense: int
    arc: ArcFitResult
    axis: AxisFitResult
    z_spread_mm: float | None = None
    warnings: tuple[str, ...] = ()
    uncertainty: Any = field(default=None)

    @property
    def L(self) -> float:
        return self.geometry.L

    @property
    def a_x(self) -> float:
        return self.geometry.a_x

    @property
    def a_y(self) -> float:
        return self.geometry.a_y


def calibrate(inp: CalibrationInput, sigma_mm: float = DEFAULT_SIGMA_MM) -> CalibrationReport:
    """Identify ``L``, ``a_x``, ``a_y`` from the measured traces.

    A :class:`CalibrationWarning` is emitted (and recorded in the report) when
    a step's RMS residual exceeds five times ``sigma_mm``.
    """
    p1 = inp.p1_trace
    sense = inp.q2_sense if inp.q2_sense is not None else winding_sense(p1)
    arc = fit_arc(MarkerTrace(p1.marker_id, sense * p1.q, p1.points), mode="planar")
    axis = fit_concentric(inp.p0_traces, mode="planar")

    p2 = arc.t
    p0 = axis.p_c
    a = p2 - p0
    geometry = CompensatorGeometry(a_x=float(a[0]), a_y=float(a[1]), L=arc.mu)

    residuals = {"p1_arc": arc.rms_residual, "p0_concentric": axis.rms_residual}
    notes = []
    for step, value in residuals.items():
        if value > RESIDUAL_WARN_FACTOR * sigma_mm:
            msg = f"{step} residual {value:.4g} mm exceeds {RESIDUAL_WARN_FACTOR:g} x sigma ({sigma_mm:g} mm)"
            warnings.warn(msg, CalibrationWarning, stacklevel=2)
            notes.append(msg)

    z = [tr.points[:, 2] for tr in inp.traces if tr.dim == 3]
    z_spread = float(max(np.ptp(v) for v in z)) if z else None

    return CalibrationReport(
        geometry=geometry,
        p2=p2,
        p0=p0,
        residuals=residuals,
        q2_sense=sense,
        arc=arc,
        axis=axis,
        z_spread_mm=z_spread,
        warnings=tuple(notes),
    )


def _open_text(source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8-sig"), True
    return source, False


def ingest_measurements(source, p1_marker: str = "P1", q2_sense: int | None = None) -> CalibrationInput:
    """Read a measurement CSV into a :class:`CalibrationInput`.

    The file has the header ``q2_deg,marker,x_mm,y_mm[,z_mm]`` and one row per
    (configuration, marker).  Angles are converted to radians.  The trace
    whose marker label equals ``p1_marker`` (case-insensitive) is the P1
    trace; every other marker is treated as rotating about P0.

    Raises
    ------
    DataError
        Empty file, missing columns, non-numeric cells, duplicated
        (marker, q2) pairs or a missing P1 trace.  Messages carry the line
        number.
    """
    fh, owned = _open_text(source)
    try:
        text = fh.read()
    finally:
        if owned:
            fh.close()
    if text.startswith("\ufeff"):
        text = text[1:]
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("no data rows") from None
    missing = [c for c in INPUT_COLUMNS if c not in header]
    if missing:
        raise DataError(f"line 1: missing column(s) {', '.join(missing)}")
    col = {name: header.index(name) for name in header}
    has_z = "z_mm" in col
    coord_cols = ["x_mm", "y_mm"] + (["z_mm"] if has_z else [])

    samples: dict[str, list[tuple[float, list[float]]]] = {}
    seen: dict[tuple[str, float], int] = {}
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        marker = row[col["marker"]].strip()
        if not marker:
            raise DataError(f"line {line}: empty marker label")
        try:
            q2 = float(row[col["q2_deg"]])
            xyz = [float(row[col[c]]) for c in coord_cols]
        except ValueError as exc:
            raise DataError(f"line {line}: non-numeric cell ({exc})") from None
        if not all(math.isfinite(v) for v in [q2, *xyz]):
            raise DataError(f"line {line}: non-finite value")
        key = (marker, q2)
        if key in seen:
            raise DataError(f"line {line}: duplicate sample for marker {marker} at q2={q2:g} deg (first on line {seen[key]})")
        seen[key] = line
        samples.setdefault(marker, []).append((q2, xyz))

    if not samples:
        raise DataError("no data rows")

    traces = {}
    for marker, rows in samples.items():
        q = np.radians([r[0] for r in rows])
        traces[marker] = MarkerTrace(marker, q, np.array([r[1] for r in rows]))

    p1_key = next((m for m in traces if m.lower() == p1_marker.lower()), None)
    if p1_key is None:
        raise DataError(f"no trace for P1 marker {p1_marker!r}; markers: {', '.join(traces)}")
    p0_traces = tuple(tr for m, tr in traces.items() if m != p1_key)
    if not p0_traces:
        raise DataError("no P0-side marker traces found")
    name = source if isinstance(source, (str, os.PathLike)) else getattr(source, "name", "<stream>")
    return CalibrationInput(traces[p1_key], p0_traces, frame_note=f"ingested from {name}", q2_sense=q2_sense)


def write_measurements(inp: CalibrationInput, fh: IO[str]) -> None:
    """Write traces in the ingestion CSV format (rows ordered by q2, then marker)."""
    dim = max(tr.dim for tr in inp.traces)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(list(INPUT_COLUMNS) + (["z_mm"] if dim == 3 else []))
    rows = []
    for order, tr in enumerate(inp.traces):
        for q, p in zip(tr.q, tr.points):
            coords = list(p) + ([0.0] if dim == 3 and tr.dim == 2 else [])
            rows.append((-q, order, tr.marker_id, coords, q))
    rows.sort(key=lambda r: (r[0], r[1]))
    for _, _, marker, coords, q in rows:
        writer.writerow([repr(math.degrees(q)), marker, *(repr(float(c)) for c in coords)])


def report_to_dict(report: CalibrationReport) -> dict[str, Any]:
    out: dict[str, Any] = {
        "L_mm": report.L,
        "a_x_mm": report.a_x,
        "a_y_mm": report.a_y,
        "p2_mm": [float(v) for v in report.p2],
        "p0_mm": [float(v) for v in report.p0],
        "residuals_mm": dict(report.residuals),
        "q2_sense": report.q2_sense,
        "marker_radii_mm": {m: float(r) for m, r in zip(report.axis.marker_ids, report.axis.radii)},
    }
    if report.z_spread_mm is not None:
        out["z_spread_mm"] = report.z_spread_mm
    if report.warnings:
        out["warnings"] = list(report.warnings)
    if report.uncertainty is not None:
        out["uncertainty"] = report.uncertainty.to_dict()
    return out


def report_to_json(report: CalibrationReport, indent: int | None = 2) -> str:
    return json.dumps(report_to_dict(report), indent=indent)
