"""Command-line interface tying the toolkit into reproducible runs.

Every subcommand writes a manifest (command, config snapshot, seed,
input digests, tool version) next to its outputs, so any run can be
reproduced bit-identically. Seeds are mandatory for stochastic
commands; there is no wall-clock fallback.

Exit codes: 0 success, 2 validation/schema error, 3 infeasibility.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import __version__, controller, fileio, freqmodel, junction, lattice, yieldmc
from .errors import (
    ControllerError,
    FitError,
    InfeasibleError,
    SchemaError,
    ValidationError,
)

DEFAULT_QUBITS = 221
DEFAULT_DESIGN_RESISTANCE = 4587.8


def _parse_pair(text: str, sep: str, what: str) -> tuple[float, float]:
    parts = text.split(sep)
    if len(parts) != 2:
        raise ValidationError(f"{what} must look like 'a{sep}b', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ValidationError(f"{what} must be numeric: {text!r}") from exc


def _parse_cells(text: str) -> tuple[int, int]:
    m, n = _parse_pair(text, "x", "--cells")
    if m != int(m) or n != int(n) or m < 1 or n < 1:
        raise ValidationError(f"--cells must be positive integers like '1x2', got {text!r}")
    return int(m), int(n)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate_tuning(args) -> int:
    out = _out_dir(args)
    fab = junction.FabricationModel(design_resistance=args.design_resistance)
    config = controller.CampaignConfig(
        master_seed=args.seed,
        measurement=junction.MeasurementModel(noise_sigma=args.noise),
    )
    target_r = args.design_resistance * (1.0 - args.aging_budget)
    qubits, targets = [], []
    for i in range(args.qubits):
        qid = f"Q{i:03d}"
        qubits.append(
            junction.sample_fabricated(fab, controller.qubit_rng(args.seed, f"fab:{qid}"))
        )
        targets.append(
            controller.TuningTarget(
                qubit_id=qid,
                target_resistance=target_r,
                relaxation_reserve=args.reserve,
            )
        )
    result = controller.run_campaign(qubits, targets, config)
    fileio.save_campaign(out / "campaign.json", result, targets, config)

    prec = controller.precision_stats(result, targets)
    over = controller.overshoot_stats(result)
    reserve = controller.calibrate_reserve(result.records)
    fileio.write_csv(
        out / "precision_report.csv",
        ["metric", "value"],
        [
            ("precision_mean_frac", prec.mean_frac),
            ("precision_sigma_frac", prec.sigma_frac),
            ("precision_min_frac", prec.min_frac),
            ("precision_max_frac", prec.max_frac),
            ("overshoot_mean_ohm", over.mean),
            ("overshoot_sigma_ohm", over.sigma),
            ("reserve_mean", reserve.mean),
            ("reserve_sigma", reserve.sigma),
        ],
        formats={"value": ".6f"},
    )
    fileio.write_manifest(
        out,
        "simulate-tuning",
        {
            "qubits": args.qubits,
            "design_resistance": args.design_resistance,
            "aging_budget": args.aging_budget,
            "reserve": args.reserve,
            "noise": args.noise,
        },
        args.seed,
    )
    print(f"tuned {len(result)} qubits to target {target_r:.1f} Ohm")
    print(
        f"precision: mean {100 * prec.mean_frac:+.3f}%  sigma {100 * prec.sigma_frac:.3f}%"
    )
    print(f"overshoot: mean {over.mean:.2f} Ohm  sigma {over.sigma:.2f} Ohm")
    print(f"reserve:   mean {100 * reserve.mean:.3f}%  sigma {100 * reserve.sigma:.3f}%")
    return 0


def cmd_calibrate_freq(args) -> int:
    out = _out_dir(args)
    points = _read_points_csv(args.data, "resistance_ohm", "f01max_mhz")
    model = freqmodel.fit_power_law(points)
    fileio.save_calibration(out / "calibration.json", model)
    fileio.write_manifest(out, "calibrate-freq", {"data": str(args.data)}, None, [args.data])
    print(
        f"alpha {model.alpha:.4f}  beta {model.beta:.4f}  "
        f"residual sigma {model.residual_sigma:.2f} MHz  "
        f"domain [{model.r_min:.1f}, {model.r_max:.1f}] Ohm"
    )
    return 0


def cmd_assign_targets(args) -> int:
    out = _out_dir(args)
    model = fileio.load_calibration(args.calibration)
    lat, _window = fileio.load_design(args.design)
    rows = []
    for i, f_design in enumerate(lat.design_f01max):
        rt = freqmodel.assign_target_R(model, f_design, args.aging_budget)
        rows.append((f"Q{i:03d}", f_design, rt))
    fileio.write_csv(
        out / "targets.csv",
        ["qubit_id", "design_f_mhz", "target_resistance_ohm"],
        rows,
        formats={"design_f_mhz": ".4f", "target_resistance_ohm": ".4f"},
    )
    fileio.write_manifest(
        out,
        "assign-targets",
        {"aging_budget": args.aging_budget},
        None,
        [args.calibration, args.design],
    )
    print(f"assigned {len(rows)} targets (aging budget {100 * args.aging_budget:.1f}%)")
    return 0


def cmd_fit_relaxation(args) -> int:
    out = _out_dir(args)
    points = _read_points_csv(args.data, "t_hr", "delta_r_ohm")
    t = [p[0] for p in points]
    dr = [p[1] for p in points]
    breakpoints = None
    if args.breakpoints:
        breakpoints = [float(b) for b in args.breakpoints.split(",")]
    fit = freqmodel.fit_segmented_power_law(t, dr, breakpoints=breakpoints)
    fileio.dump_json(
        out / "relaxation_fit.json",
        {
            "breakpoints_hr": list(fit.breakpoints),
            "exponents": list(fit.exponents),
            "amplitudes": list(fit.amplitudes),
            "continuity_residual": fit.continuity_residual,
        },
    )
    fileio.write_manifest(
        out, "fit-relaxation", {"breakpoints": args.breakpoints}, None, [args.data]
    )
    exps = "  ".join(f"{e:.3f}" for e in fit.exponents)
    bps = "  ".join(f"{b:.3f}" for b in fit.breakpoints)
    print(f"exponents: {exps}")
    print(f"breakpoints (hr): {bps}")
    return 0


def cmd_analyze_lattice(args) -> int:
    out = _out_dir(args)
    lat, design_window = fileio.load_design(args.design)
    window = _parse_pair(args.window, ",", "--window") if args.window else None
    report = lattice.edge_detunings(lat, window=window)
    assign = lattice.modulation_assignment(report)
    fileio.write_csv(
        out / "detunings.csv",
        ["node_a", "node_b", "signed_mhz", "abs_mhz", "modulated_qubit", "in_window"],
        [
            (e.edge[0], e.edge[1], e.signed_mhz, e.abs_mhz, e.modulated_qubit,
             "" if e.in_window is None else str(e.in_window).lower())
            for e in report.edges
        ],
        formats={"signed_mhz": ".4f", "abs_mhz": ".4f"},
    )
    summary = report.summary()
    summary["modulation_max_count"] = assign.max_count
    summary["modulation_valid"] = assign.valid
    fileio.dump_json(out / "lattice_summary.json", summary)
    fileio.write_manifest(
        out, "analyze-lattice", {"window": args.window}, None, [args.design]
    )
    print(
        f"{summary['edges']} edges: min {summary['min_mhz']:.1f}  "
        f"median {summary['median_mhz']:.1f}  max {summary['max_mhz']:.1f} MHz"
    )
    print(
        f"modulation assignment: max {assign.max_count} edges per qubit "
        f"({'valid' if assign.valid else 'INVALID'})"
    )
    return 0


def cmd_park(args) -> int:
    out = _out_dir(args)
    lat, _ = fileio.load_design(args.design)
    window = _parse_pair(args.window, ",", "--window")
    plan = lattice.optimize_parking(
        lat, window, max_park_mhz=args.max_park, step_mhz=args.step,
        symmetric=args.symmetric,
    )
    fileio.dump_json(
        out / "parking.json",
        {
            "offsets_mhz": list(plan.offsets_mhz),
            "parked_count": plan.parked_count,
            "max_abs_offset_mhz": plan.max_abs_offset,
            "sum_abs_offset_mhz": plan.sum_abs_offset,
        },
    )
    fileio.write_manifest(
        out,
        "park",
        {"window": args.window, "max_park": args.max_park, "step": args.step,
         "symmetric": args.symmetric},
        None,
        [args.design],
    )
    print(
        f"parked {plan.parked_count} qubit(s), max offset {plan.max_abs_offset:.1f} MHz"
    )
    return 0


def cmd_yield(args) -> int:
    out = _out_dir(args)
    window = _parse_pair(args.window, ",", "--window")
    inputs = []
    if args.design:
        lat3, design_window = fileio.load_design(args.design)
        if (lat3.rows, lat3.cols) != (3, 3):
            raise ValidationError("--design must describe a 3x3 unit cell")
        offsets = [
            [lat3.design_f01max[r * 3 + c] - min(lat3.design_f01max) for c in range(3)]
            for r in range(3)
        ]
        cell = yieldmc.UnitCellDesign(
            offsets_mhz=tuple(tuple(row) for row in offsets),
            design_window_mhz=tuple(design_window),
        )
        inputs.append(args.design)
    else:
        cell = yieldmc.generate_unit_cell(seed=args.seed)
    m, n = _parse_cells(args.cells)
    lat = yieldmc.tile(cell, m, n)
    config = yieldmc.YieldConfig(
        sigma_f_mhz=args.sigma,
        master_seed=args.seed,
        window_mhz=window,
        trials=args.trials,
        n_threads=args.threads,
    )
    result = yieldmc.mc_chip_yield(lat, config)
    wafer = yieldmc.wafer_projection(result, dice=args.dice)
    fileio.save_design(out / "unit_cell.json", cell)
    fileio.write_csv(
        out / "yield.csv",
        ["qubits", "sigma_mhz", "yield", "ci_lo", "ci_hi"],
        [(result.qubit_count, args.sigma, result.yield_estimate, result.ci_low,
          result.ci_high)],
        formats={"sigma_mhz": ".4f", "yield": ".6f", "ci_lo": ".6f", "ci_hi": ".6f"},
    )
    fileio.write_manifest(
        out,
        "yield",
        {"sigma": args.sigma, "cells": args.cells, "trials": args.trials,
         "window": args.window, "dice": args.dice, "design": args.design},
        args.seed,
        inputs,
    )
    print(
        f"yield {result.yield_estimate:.4f} "
        f"[{result.ci_low:.4f}, {result.ci_high:.4f}] on {result.qubit_count} qubits"
    )
    print(f"wafer: {wafer.chips} chips, {wafer.qubits} qubits per {wafer.dice} dice")
    return 0


def cmd_report(args) -> int:
    out = _out_dir(args)
    result, targets, _config = fileio.load_campaign(args.campaign)
    prec = controller.precision_stats(result, targets)
    over = controller.overshoot_stats(result)
    reserve = controller.calibrate_reserve(result.records)
    fileio.write_csv(
        out / "report.csv",
        ["metric", "value"],
        [
            ("qubits", len(result)),
            ("precision_mean_frac", prec.mean_frac),
            ("precision_sigma_frac", prec.sigma_frac),
            ("overshoot_mean_ohm", over.mean),
            ("overshoot_sigma_ohm", over.sigma),
            ("reserve_mean", reserve.mean),
            ("reserve_sigma", reserve.sigma),
        ],
    )
    fileio.write_manifest(out, "report", {}, None, [args.campaign])
    print(
        f"{len(result)} qubits  precision sigma {100 * prec.sigma_frac:.3f}%  "
        f"mean {100 * prec.mean_frac:+.3f}%"
    )
    return 0


def _read_points_csv(path, col_x, col_y) -> list[tuple[float, float]]:
    points = []
    problems = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or col_x not in reader.fieldnames or col_y not in reader.fieldnames:
            raise SchemaError(
                f"{path}: expected columns {col_x!r} and {col_y!r}, got {reader.fieldnames}"
            )
        for lineno, rec in enumerate(reader, start=2):
            try:
                points.append((float(rec[col_x]), float(rec[col_y])))
            except (TypeError, ValueError):
                problems.append(f"line {lineno}: non-numeric {col_x}/{col_y}")
    if problems:
        raise SchemaError(f"{path}: {len(problems)} invalid rows", details=problems)
    return points


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jjtrim",
        description="Junction resistance trimming: simulation, calibration, "
        "lattice targeting, and yield projection.",
    )
    parser.add_argument("--version", action="version", version=f"jjtrim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-tuning", help="run a simulated tuning campaign")
    p.add_argument("--qubits", type=int, default=DEFAULT_QUBITS)
    p.add_argument("--design-resistance", type=float, default=DEFAULT_DESIGN_RESISTANCE)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--reserve", type=float, default=0.0289)
    p.add_argument("--aging-budget", type=float, default=0.02)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate_tuning)

    p = sub.add_parser("calibrate-freq", help="fit the resistance-frequency power law")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate_freq)

    p = sub.add_parser("assign-targets", help="map design frequencies to target resistances")
    p.add_argument("--calibration", required=True)
    p.add_argument("--design", required=True)
    p.add_argument("--aging-budget", type=float, default=0.02)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_assign_targets)

    p = sub.add_parser("fit-relaxation", help="fit a segmented power law to a relaxation trace")
    p.add_argument("--data", required=True)
    p.add_argument("--breakpoints", default=None, help="comma-separated hours; omit for auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit_relaxation)

    p = sub.add_parser("analyze-lattice", help="edge detunings and modulation assignment")
    p.add_argument("--design", required=True)
    p.add_argument("--window", default=None, help="lo,hi in MHz")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze_lattice)

    p = sub.add_parser("park", help="find minimal parking offsets for a detuning window")
    p.add_argument("--design", required=True)
    p.add_argument("--window", required=True, help="lo,hi in MHz")
    p.add_argument("--max-park", type=float, default=50.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--symmetric", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_park)

    p = sub.add_parser("yield", help="Monte Carlo detuning-edge yield")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--cells", default="1x1", help="unit-cell tiling, e.g. 2x6")
    p.add_argument("--trials", type=int, default=10**5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--window", default="20,130", help="lo,hi in MHz")
    p.add_argument("--design", default=None, help="optional 3x3 unit-cell design JSON")
    p.add_argument("--dice", type=int, default=yieldmc.DEFAULT_DICE_PER_WAFER)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_yield)

    p = sub.add_parser("report", help="aggregate statistics from a saved campaign")
    p.add_argument("--campaign", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for line in exc.details:
            print(f"  {line}", file=sys.stderr)
        return 2
    except (ValidationError, FitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InfeasibleError, ControllerError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
