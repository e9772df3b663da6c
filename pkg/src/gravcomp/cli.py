"""Command-line interface.

Angles on the command line are in degrees and lengths in mm.  Exit codes:
0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
import warnings
from importlib import resources
from pathlib import Path

from . import __version__, reference_measurements_path
from .doe import DEFAULT_STARTS, DEFAULT_TOL, make_plan, plan_to_dict
from .exceptions import CalibrationWarning, DataError, NumericalError
from .model import (
    REFERENCE_GEOMETRY,
    REFERENCE_JOINT,
    REFERENCE_SPRING,
    CompensatorGeometry,
    JointStiffnessConfig,
    SpringParameters,
    compliance_curve,
    write_curve_csv,
)
from .pipeline import DEFAULT_SIGMA_MM, CalibrationInput, calibrate, ingest_measurements, report_to_dict, write_measurements
from .synth import GroundTruth, generate_traces
from .uncertainty import UncertaintyConfig, bound_report, bound_table, monte_carlo_bounds, residual_sigma

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

TABLE1_Q2_DEG = (-0.01, -30.0, -60.0, -90.0, -120.0, -145.0)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _sense(text: str) -> int | None:
    if text == "auto":
        return None
    if text in ("1", "+1"):
        return 1
    if text == "-1":
        return -1
    raise argparse.ArgumentTypeError("expected auto, +1 or -1")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gravcomp", description="Gravity-compensator identification, planning and curves.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("calibrate", help="identify L, a_x, a_y from a measurement CSV")
    c.add_argument("--input", help="measurement CSV (q2_deg,marker,x_mm,y_mm[,z_mm]); default: bundled reference data")
    c.add_argument("--output", help="report JSON path (default: stdout)")
    c.add_argument("--sigma-mm", type=float, default=DEFAULT_SIGMA_MM, help="tracker noise std per coordinate, mm (default: %(default)s)")
    c.add_argument("--p1-marker", default="P1", help="label of the crank marker P1 (default: %(default)s)")
    c.add_argument("--q2-sense", type=_sense, default=None, help="joint-angle orientation in tracker XY: auto, +1 or -1 (default: auto)")
    c.add_argument("--trials", type=int, default=0, help="Monte-Carlo trials for error bars; 0 disables (default: %(default)s)")
    c.add_argument("--seed", type=int, default=0, help="random seed for error bars (default: %(default)s)")

    pl = sub.add_parser("plan", help="choose joint angles and marker angles for a calibration run")
    pl.add_argument("--m", type=int, default=6, help="number of joint configurations (default: %(default)s)")
    pl.add_argument("--k", type=int, default=2, help="number of P0-side markers (default: %(default)s)")
    pl.add_argument("--qmin", type=float, default=-145.0, help="lower joint limit, deg (default: %(default)s)")
    pl.add_argument("--qmax", type=float, default=0.0, help="upper joint limit, deg (default: %(default)s)")
    pl.add_argument("--sigma-mm", type=float, default=DEFAULT_SIGMA_MM, help="tracker noise std per coordinate, mm (default: %(default)s)")
    pl.add_argument("--starts", type=int, default=DEFAULT_STARTS, help="multi-start count (default: %(default)s)")
    pl.add_argument("--tol", type=float, default=DEFAULT_TOL, help="descent tolerance on the objective, dimensionless (default: %(default)s)")
    pl.add_argument("--seed", type=int, default=0, help="random seed for start points (default: %(default)s)")
    pl.add_argument("--forbid", action="append", default=[], metavar="LO:HI", help="forbidden marker sector, deg, counter-clockwise from LO (repeatable; write --forbid=-10:10 for negative LO)")
    pl.add_argument("--output", help="plan JSON path (default: stdout)")

    cu = sub.add_parser("curves", help="tabulate eta, joint-2 stiffness and compliance over q2")
    cu.add_argument("--ax", type=float, default=REFERENCE_GEOMETRY.a_x, help="a_x, mm (default: %(default)s)")
    cu.add_argument("--ay", type=float, default=REFERENCE_GEOMETRY.a_y, help="a_y, mm (default: %(default)s)")
    cu.add_argument("--L", type=float, default=REFERENCE_GEOMETRY.L, help="crank length L, mm (default: %(default)s)")
    kc = cu.add_mutually_exclusive_group()
    kc.add_argument("--kc", type=float, help=f"spring rate K_c, N/mm (default: {REFERENCE_SPRING.K_c:.6g})")
    kc.add_argument("--kc-compliance", type=float, help="spring compliance, um/N (K_c = 1000 / value)")
    k2 = cu.add_mutually_exclusive_group()
    k2.add_argument("--k2", type=float, help=f"joint-2 stiffness without compensator, N*mm/rad (default: {REFERENCE_JOINT.K_theta2_0:.6g})")
    k2.add_argument("--k2-compliance", type=float, help="joint-2 compliance, urad/(N*m) (K = 1e9 / value N*mm/rad)")
    cu.add_argument("--s0", type=_float_list, default=[REFERENCE_SPRING.s0], help="comma-separated spring free lengths, mm (default: 458)")
    cu.add_argument("--qmin", type=float, default=-145.0, help="grid start, deg (default: %(default)s)")
    cu.add_argument("--qmax", type=float, default=0.0, help="grid end, deg (default: %(default)s)")
    cu.add_argument("--n", type=int, default=146, help="number of grid points (default: %(default)s)")
    cu.add_argument("--output", help="CSV path (default: stdout)")

    u = sub.add_parser("uncertainty", help="Monte-Carlo error bars for L, a_x, a_y")
    u.add_argument("--input", help="measurement CSV; default: bundled reference data")
    u.add_argument("--sigma-mm", default=str(DEFAULT_SIGMA_MM), help="noise std per coordinate, mm, or 'residual' to estimate it from the fit (default: %(default)s)")
    u.add_argument("--trials", type=int, default=10_000, help="number of trials (default: %(default)s)")
    u.add_argument("--seed", type=int, default=0, help="random seed (default: %(default)s)")
    u.add_argument("--coverage", type=float, default=1.0, help="bound = coverage x std, dimensionless (default: %(default)s)")
    u.add_argument("--p1-marker", default="P1", help="label of the crank marker P1 (default: %(default)s)")
    u.add_argument("--format", choices=("text", "json"), default="text", help="output format (default: %(default)s)")
    u.add_argument("--output", help="output path (default: stdout)")

    s = sub.add_parser("synth", help="write a synthetic measurement CSV from known geometry")
    s.add_argument("--output", help="CSV path (default: stdout)")
    s.add_argument("--ax", type=float, default=REFERENCE_GEOMETRY.a_x, help="a_x, mm (default: %(default)s)")
    s.add_argument("--ay", type=float, default=REFERENCE_GEOMETRY.a_y, help="a_y, mm (default: %(default)s)")
    s.add_argument("--L", type=float, default=REFERENCE_GEOMETRY.L, help="crank length L, mm (default: %(default)s)")
    s.add_argument("--q2", type=_float_list, default=list(TABLE1_Q2_DEG), help="comma-separated joint angles, deg (default: six angles from -0.01 to -145)")
    s.add_argument("--marker-radii", type=_float_list, default=[186.7, 188.3], help="P0-side marker radii, mm (default: 186.7,188.3)")
    s.add_argument("--marker-phases", type=_float_list, default=[157.7, -157.5], help="marker angles from the spring direction, deg (default: 157.7,-157.5)")
    s.add_argument("--p1-phase", type=float, default=99.8, help="direction of P2->P1 at q2 = 0, deg (default: %(default)s)")
    s.add_argument("--q2-sense", type=_sense, default=-1, help="+1 or -1 (default: -1)")
    s.add_argument("--sigma-mm", type=float, default=0.0, help="noise std per coordinate, mm (default: %(default)s)")
    s.add_argument("--seed", type=int, default=0, help="random seed (default: %(default)s)")
    s.add_argument("--z", type=float, default=None, help="constant z coordinate, mm; omit for 2-D output")
    return p


def _config_hash(args: argparse.Namespace) -> str:
    payload = json.dumps({k: v for k, v in sorted(vars(args).items())}, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _check_paths(args: argparse.Namespace) -> None:
    inp = getattr(args, "input", None)
    if inp is not None and not Path(inp).is_file():
        raise DataError(f"input file not found: {inp}")
    out = getattr(args, "output", None)
    if out is not None and not Path(out).resolve().parent.is_dir():
        raise UsageError(f"output directory does not exist: {Path(out).parent}")


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")


def _load(args) -> CalibrationInput:
    sense = getattr(args, "q2_sense", None)
    if args.input is None:
        with resources.as_file(reference_measurements_path()) as path:
            return ingest_measurements(path, p1_marker=args.p1_marker, q2_sense=sense)
    return ingest_measurements(args.input, p1_marker=args.p1_marker, q2_sense=sense)


def _run_calibrate(args, say) -> None:
    inp = _load(args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CalibrationWarning)
        report = calibrate(inp, sigma_mm=args.sigma_mm)
    out = report_to_dict(report)
    if args.trials > 0:
        bounds = monte_carlo_bounds(inp, UncertaintyConfig(args.sigma_mm, args.trials, args.seed))
        out["uncertainty"] = bounds.to_dict()
    _emit(json.dumps(out, indent=2), args.output)
    say(f"L = {report.L:.4f} mm, a_x = {report.a_x:.4f} mm, a_y = {report.a_y:.4f} mm (q2 sense {report.q2_sense:+d})")
    for w in report.warnings:
        say(f"warning: {w}")


def _run_plan(args, say) -> None:
    if args.m < 3:
        raise UsageError("--m must be at least 3")
    if args.k < 2:
        raise UsageError("--k must be at least 2")
    if not args.qmax > args.qmin:
        raise UsageError("--qmax must exceed --qmin")
    forbidden = []
    for item in args.forbid:
        try:
            lo, hi = (math.radians(float(v)) for v in item.split(":"))
        except ValueError:
            raise UsageError(f"--forbid expects LO:HI in degrees, got {item!r}") from None
        forbidden.append((lo, hi))
    plan = make_plan(
        args.m,
        args.k,
        math.radians(args.qmin),
        math.radians(args.qmax),
        sigma=args.sigma_mm,
        n_starts=args.starts,
        tol=args.tol,
        seed=args.seed,
        forbidden=forbidden or None,
    )
    _emit(json.dumps(plan_to_dict(plan), indent=2), args.output)
    say(f"q2 = {', '.join(f'{math.degrees(q):.2f}' for q in plan.q2_angles)} deg; objective {plan.objective_value:.6g}")


def _run_curves(args, say) -> None:
    if args.n < 1:
        raise UsageError("--n must be positive")
    geom = CompensatorGeometry(args.ax, args.ay, args.L)
    if args.kc is not None:
        K_c = args.kc
    elif args.kc_compliance is not None:
        K_c = SpringParameters.from_compliance(args.kc_compliance, 0.0, unit_scale=1e3).K_c
    else:
        K_c = REFERENCE_SPRING.K_c
    if args.k2 is not None:
        cfg = JointStiffnessConfig(args.k2)
    elif args.k2_compliance is not None:
        cfg = JointStiffnessConfig.from_compliance(args.k2_compliance, unit_scale=1e9)
    else:
        cfg = REFERENCE_JOINT
    spring = SpringParameters(K_c, args.s0[0] if args.s0 else 0.0)
    if args.n == 1:
        grid = [math.radians(args.qmin)]
    else:
        step = (args.qmax - args.qmin) / (args.n - 1)
        grid = [math.radians(args.qmin + i * step) for i in range(args.n)]
    rows = compliance_curve(geom, spring, cfg, grid, args.s0)
    buf = io.StringIO()
    write_curve_csv(rows, buf)
    _emit(buf.getvalue(), args.output)
    unstable = sum(r.unstable for r in rows)
    say(f"{len(rows)} rows; {unstable} with non-positive joint stiffness")


def _run_uncertainty(args, say) -> None:
    inp = _load(args)
    if args.sigma_mm == "residual":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CalibrationWarning)
            sigma = residual_sigma(calibrate(inp))
        say(f"sigma estimated from residuals: {sigma:.5f} mm")
    else:
        try:
            sigma = float(args.sigma_mm)
        except ValueError:
            raise UsageError(f"--sigma-mm expects a number or 'residual', got {args.sigma_mm!r}") from None
    bounds = monte_carlo_bounds(inp, UncertaintyConfig(sigma, args.trials, args.seed, args.coverage))
    if args.format == "json":
        payload = bounds.to_dict()
        payload["table"] = bound_table(bounds)
        text = json.dumps(payload, indent=2)
    else:
        text = bound_report(bounds)
    _emit(text, args.output)
    if bounds.failures:
        say(f"{bounds.failures} trials failed and were skipped")


def _run_synth(args, say) -> None:
    if len(args.marker_radii) != len(args.marker_phases):
        raise UsageError("--marker-radii and --marker-phases need the same length")
    truth = GroundTruth.from_geometry(
        CompensatorGeometry(args.ax, args.ay, args.L),
        marker_radii=args.marker_radii,
        marker_phases=[math.radians(b) for b in args.marker_phases],
        p1_phase=math.radians(args.p1_phase),
        q2_sense=args.q2_sense if args.q2_sense is not None else 1,
    )
    inp = generate_traces(truth, [math.radians(q) for q in args.q2], sigma=args.sigma_mm, seed=args.seed, z=args.z)
    buf = io.StringIO()
    write_measurements(inp, buf)
    _emit(buf.getvalue(), args.output)
    say(f"{len(inp.traces)} traces x {len(args.q2)} samples")


_COMMANDS = {
    "calibrate": _run_calibrate,
    "plan": _run_plan,
    "curves": _run_curves,
    "uncertainty": _run_uncertainty,
    "synth": _run_synth,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # keep stdout clean for artifacts when no output file is given
    stream = sys.stdout if getattr(args, "output", None) else sys.stderr

    def say(msg: str) -> None:
        print(msg, file=stream)

    try:
        _check_paths(args)
        say(f"gravcomp {args.command}: seed={getattr(args, 'seed', None)} config={_config_hash(args)}")
        _COMMANDS[args.command](args, say)
    except UsageError as exc:
        print(f"gravcomp: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"gravcomp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"gravcomp: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"gravcomp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
