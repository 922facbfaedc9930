"""File formats and run manifests.

CSV for tabular logs and reports (mandatory header, UTF-8, '.' decimal,
fixed per-column formatting), JSON for designs, calibrations, campaigns,
and manifests. Parsing is strict: every schema violation is reported
with its line and field, nothing is silently skipped.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__
from .controller import CampaignConfig, CampaignResult, QubitTuneRecord, TuningTarget
from .errors import SchemaError, ValidationError
from .freqmodel import PowerLawModel
from .junction import MeasurementModel, RelaxationProfile, StepKind, StepModel
from .lattice import QubitLattice
from .yieldmc import UnitCellDesign

RESISTANCE_LOG_HEADER = ["qubit_id", "t_hr", "resistance_ohm", "phase"]
_PHASES = ("untuned", "pulse", "probe")


@dataclass(frozen=True)
class ResistanceLogRow:
    qubit_id: str
    t_hr: float
    resistance_ohm: float
    phase: str

    def __post_init__(self):
        if self.t_hr < 0:
            raise ValidationError(f"t_hr must be >= 0, got {self.t_hr}")
        if not self.resistance_ohm > 0:
            raise ValidationError(f"resistance must be > 0, got {self.resistance_ohm}")
        if self.phase not in _PHASES:
            raise ValidationError(f"phase must be one of {_PHASES}, got {self.phase!r}")


def parse_resistance_log(path) -> list[ResistanceLogRow]:
    rows = []
    problems = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RESISTANCE_LOG_HEADER:
            raise SchemaError(
                f"{path}: expected header {RESISTANCE_LOG_HEADER}, got {header}"
            )
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != 4:
                problems.append(f"line {lineno}: expected 4 fields, got {len(rec)}")
                continue
            qid, t_s, r_s, phase = rec
            try:
                t = float(t_s)
            except ValueError:
                problems.append(f"line {lineno}: t_hr {t_s!r} is not a number")
                continue
            try:
                r = float(r_s)
            except ValueError:
                problems.append(f"line {lineno}: resistance_ohm {r_s!r} is not a number")
                continue
            try:
                rows.append(ResistanceLogRow(qid, t, r, phase))
            except ValidationError as exc:
                problems.append(f"line {lineno}: {exc}")
    if problems:
        raise SchemaError(f"{path}: {len(problems)} invalid rows", details=problems)
    return rows


def serialize_resistance_log(rows) -> str:
    """Canonical form: 6-decimal t_hr, 4-decimal resistance, LF endings."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESISTANCE_LOG_HEADER)
    for row in rows:
        writer.writerow(
            [row.qubit_id, f"{row.t_hr:.6f}", f"{row.resistance_ohm:.4f}", row.phase]
        )
    return buf.getvalue()


def save_resistance_log(path, rows) -> None:
    Path(path).write_text(serialize_resistance_log(rows), encoding="utf-8")


def load_design(path) -> tuple[QubitLattice, tuple[float, float]]:
    """Design JSON -> (lattice, design window).

    Schema: {rows, cols, base_frequency_mhz, offsets_mhz: [[...]],
    design_window_mhz: [lo, hi]} with optional measured_mhz: [[...]].
    A null offset is an error naming the node.
    """
    data = load_json(path)
    for key in ("rows", "cols", "base_frequency_mhz", "offsets_mhz", "design_window_mhz"):
        if key not in data:
            raise SchemaError(f"{path}: missing key {key!r}")
    rows, cols = int(data["rows"]), int(data["cols"])
    base = float(data["base_frequency_mhz"])
    offsets = data["offsets_mhz"]
    if len(offsets) != rows or any(len(r) != cols for r in offsets):
        raise SchemaError(f"{path}: offsets_mhz must be a {rows}x{cols} grid")
    missing = [
        f"({r},{c})"
        for r in range(rows)
        for c in range(cols)
        if offsets[r][c] is None
    ]
    if missing:
        raise SchemaError(f"{path}: missing frequency offset at nodes {', '.join(missing)}")
    design = tuple(base + float(offsets[r][c]) for r in range(rows) for c in range(cols))
    measured = None
    if data.get("measured_mhz") is not None:
        meas = data["measured_mhz"]
        if len(meas) != rows or any(len(r) != cols for r in meas):
            raise SchemaError(f"{path}: measured_mhz must be a {rows}x{cols} grid")
        missing = [
            f"({r},{c})" for r in range(rows) for c in range(cols) if meas[r][c] is None
        ]
        if missing:
            raise SchemaError(
                f"{path}: missing measured frequency at nodes {', '.join(missing)}"
            )
        measured = tuple(float(meas[r][c]) for r in range(rows) for c in range(cols))
    window = tuple(float(w) for w in data["design_window_mhz"])
    if len(window) != 2:
        raise SchemaError(f"{path}: design_window_mhz must be [lo, hi]")
    lattice = QubitLattice(rows=rows, cols=cols, design_f01max=design, measured_f01max=measured)
    return lattice, window


def save_design(path, cell: UnitCellDesign) -> None:
    data = {
        "rows": 3,
        "cols": 3,
        "base_frequency_mhz": cell.base_frequency_mhz,
        "offsets_mhz": [list(row) for row in cell.offsets_mhz],
        "design_window_mhz": list(cell.design_window_mhz),
    }
    dump_json(path, data)


def load_calibration(path) -> PowerLawModel:
    data = load_json(path)
    for key in ("beta", "alpha", "residual_sigma_mhz", "r_min", "r_max"):
        if key not in data:
            raise SchemaError(f"{path}: missing key {key!r}")
    return PowerLawModel(
        beta=float(data["beta"]),
        alpha=float(data["alpha"]),
        residual_sigma=float(data["residual_sigma_mhz"]),
        r_min=float(data["r_min"]),
        r_max=float(data["r_max"]),
    )


def save_calibration(path, model: PowerLawModel) -> None:
    dump_json(
        path,
        {
            "beta": model.beta,
            "alpha": model.alpha,
            "residual_sigma_mhz": model.residual_sigma,
            "r_min": model.r_min,
            "r_max": model.r_max,
        },
    )


def save_campaign(path, result: CampaignResult, targets, config: CampaignConfig) -> None:
    data = {
        "config": {
            "master_seed": config.master_seed,
            "step": {
                "kind": config.step.kind.value,
                "mean_step": config.step.mean_step,
                "low": config.step.low,
                "high": config.step.high,
            },
            "noise_sigma": config.measurement.noise_sigma,
            "relaxation": {
                "breakpoints_hr": list(config.relaxation.breakpoints_hr),
                "exponents": list(config.relaxation.exponents),
                "probe_delay_hr": config.relaxation.probe_delay_hr,
            },
            "probe_delay_hr": config.probe_delay_hr,
            "max_pulses": config.max_pulses,
        },
        "targets": [
            {
                "qubit_id": t.qubit_id,
                "target_resistance": t.target_resistance,
                "relaxation_reserve": t.relaxation_reserve,
            }
            for t in targets
        ],
        "records": [asdict(r) for r in result.records],
    }
    dump_json(path, data)


def load_campaign(path) -> tuple[CampaignResult, list[TuningTarget], CampaignConfig]:
    data = load_json(path)
    for key in ("config", "targets", "records"):
        if key not in data:
            raise SchemaError(f"{path}: missing key {key!r}")
    cfg = data["config"]
    config = CampaignConfig(
        master_seed=int(cfg["master_seed"]),
        step=StepModel(
            kind=StepKind(cfg["step"]["kind"]),
            mean_step=float(cfg["step"]["mean_step"]),
            low=cfg["step"]["low"],
            high=cfg["step"]["high"],
        ),
        measurement=MeasurementModel(noise_sigma=float(cfg["noise_sigma"])),
        relaxation=RelaxationProfile(
            breakpoints_hr=tuple(cfg["relaxation"]["breakpoints_hr"]),
            exponents=tuple(cfg["relaxation"]["exponents"]),
            probe_delay_hr=float(cfg["relaxation"]["probe_delay_hr"]),
        ),
        probe_delay_hr=float(cfg["probe_delay_hr"]),
        max_pulses=int(cfg["max_pulses"]),
    )
    targets = [
        TuningTarget(
            qubit_id=t["qubit_id"],
            target_resistance=float(t["target_resistance"]),
            relaxation_reserve=float(t["relaxation_reserve"]),
        )
        for t in data["targets"]
    ]
    records = tuple(QubitTuneRecord(**r) for r in data["records"])
    return CampaignResult(records=records), targets, config


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    command: str
    config: dict
    master_seed: int | None
    input_digests: dict
    tool_version: str = __version__


def write_manifest(out_dir, command: str, config: dict, master_seed, inputs=()) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        command=command,
        config=config,
        master_seed=master_seed,
        input_digests={str(p): sha256_file(p) for p in inputs},
    )
    path = out_dir / "manifest.json"
    dump_json(path, asdict(manifest))
    return path


def write_csv(path, header, rows, formats=None) -> None:
    """Fixed-format CSV emission; ``formats`` maps column -> format spec."""
    formats = formats or {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            out = []
            for col, val in zip(header, row):
                if col in formats and val is not None:
                    out.append(format(val, formats[col]))
                else:
                    out.append(val)
            writer.writerow(out)


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def dump_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
