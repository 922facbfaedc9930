"""Closed-loop resistance trimming: threshold targeting and batch statistics.

The controller pulses each qubit until its monitored resistance crosses a
stop threshold set below the target by the relaxation reserve, waits the
probe delay while relaxation carries the resistance the rest of the way,
and records per-qubit and aggregate precision statistics.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ControllerError, ValidationError
from .junction import (
    JunctionState,
    MeasurementModel,
    RelaxationProfile,
    StepModel,
    advance_time,
    measure_resistance,
)

_STEP_BATCH = 512


@dataclass(frozen=True)
class TuningTarget:
    """Target resistance and the relaxation reserve used to derive the
    pulse-stop threshold for one qubit."""

    qubit_id: str
    target_resistance: float
    relaxation_reserve: float = 0.0289

    def __post_init__(self):
        if not self.target_resistance > 0:
            raise ValidationError(
                f"target_resistance must be > 0, got {self.target_resistance}"
            )
        if not 0 <= self.relaxation_reserve < 1:
            raise ValidationError(
                f"relaxation_reserve must be in [0, 1), got {self.relaxation_reserve}"
            )

    @property
    def threshold(self) -> float:
        return self.target_resistance / (1.0 + self.relaxation_reserve)


def compute_threshold(target: TuningTarget) -> float:
    """Stop threshold: the target deflated by the relaxation reserve."""
    return target.threshold


@dataclass(frozen=True)
class CampaignConfig:
    """Everything a tuning campaign needs besides the qubits themselves."""

    master_seed: int
    step: StepModel = field(default_factory=StepModel)
    measurement: MeasurementModel = field(default_factory=MeasurementModel)
    relaxation: RelaxationProfile = field(default_factory=RelaxationProfile)
    probe_delay_hr: float = 5.0
    max_pulses: int = 10**6

    def __post_init__(self):
        if self.probe_delay_hr < 0:
            raise ValidationError(f"probe_delay_hr must be >= 0, got {self.probe_delay_hr}")
        if not self.max_pulses > 0:
            raise ValidationError(f"max_pulses must be > 0, got {self.max_pulses}")


@dataclass(frozen=True)
class QubitTuneRecord:
    qubit_id: str
    r_untuned: float
    threshold: float
    r_last_pulse: float
    r_tuned: float
    pulses: int
    already_above_target: bool = False


@dataclass(frozen=True)
class CampaignResult:
    records: tuple[QubitTuneRecord, ...]

    def __len__(self):
        return len(self.records)

    def summary(self) -> dict:
        if not self.records:
            return {"qubits": 0}
        tuned = np.array([r.r_tuned for r in self.records])
        pulses = np.array([r.pulses for r in self.records])
        return {
            "qubits": len(self.records),
            "r_tuned_mean": float(tuned.mean()),
            "r_tuned_sigma": float(tuned.std()),
            "r_tuned_min": float(tuned.min()),
            "r_tuned_max": float(tuned.max()),
            "pulses_total": int(pulses.sum()),
        }


def qubit_rng(master_seed: int, qubit_id: str) -> np.random.Generator:
    """Per-qubit stream keyed by (campaign seed, qubit id), not position,
    so aggregate statistics are invariant under tuning order."""
    digest = hashlib.sha256(str(qubit_id).encode("utf-8")).digest()
    qhash = int.from_bytes(digest[:8], "big")
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), qhash]))


def tune_qubit(
    state: JunctionState,
    target: TuningTarget,
    config: CampaignConfig,
    rng: np.random.Generator | None = None,
) -> QubitTuneRecord:
    """Pulse until the monitored resistance crosses the stop threshold,
    then probe after the configured delay.

    ``r_last_pulse`` is the first monitored value at or above the
    threshold. Qubits already above threshold are recorded with zero
    pulses and flagged, never pulsed downward.
    """
    if rng is None:
        rng = qubit_rng(config.master_seed, target.qubit_id)
    threshold = target.threshold
    r_untuned = state.resistance
    noise = config.measurement.noise_sigma

    first_read = measure_resistance(state, config.measurement, rng)
    if first_read >= threshold:
        settled = advance_time(state, config.relaxation, config.probe_delay_hr)
        r_tuned = measure_resistance(settled, config.measurement, rng)
        return QubitTuneRecord(
            qubit_id=target.qubit_id,
            r_untuned=r_untuned,
            threshold=threshold,
            r_last_pulse=first_read,
            r_tuned=r_tuned,
            pulses=0,
            already_above_target=True,
        )

    if noise == 0:
        r, pulses, r_a = _pulse_to_threshold_noiseless(
            state.resistance, threshold, config, rng, target.qubit_id
        )
    else:
        r, pulses, r_a = _pulse_to_threshold_noisy(
            state.resistance, threshold, config, rng, target.qubit_id
        )

    stopped = JunctionState(
        resistance=r,
        relax_fraction=state.relax_fraction,
        resistance_at_last_pulse=r,
        hours_since_last_pulse=0.0,
        pulse_count=state.pulse_count + pulses,
    )
    settled = advance_time(stopped, config.relaxation, config.probe_delay_hr)
    r_tuned = measure_resistance(settled, config.measurement, rng)
    return QubitTuneRecord(
        qubit_id=target.qubit_id,
        r_untuned=r_untuned,
        threshold=threshold,
        r_last_pulse=r_a,
        r_tuned=r_tuned,
        pulses=pulses,
    )


def _pulse_to_threshold_noiseless(r0, threshold, config, rng, qubit_id):
    # Noiseless monitoring lets steps be drawn in batches: the crossing
    # pulse index depends only on the cumulative sum.
    r = r0
    pulses = 0
    while r < threshold:
        n = min(_STEP_BATCH, config.max_pulses - pulses)
        if n <= 0:
            raise ControllerError(
                f"qubit {qubit_id}: max_pulses={config.max_pulses} exceeded",
                partial_record=QubitTuneRecord(
                    qubit_id=qubit_id,
                    r_untuned=r0,
                    threshold=threshold,
                    r_last_pulse=r,
                    r_tuned=r,
                    pulses=pulses,
                ),
            )
        cum = r + np.cumsum(config.step.sample_batch(rng, n))
        hit = np.searchsorted(cum, threshold, side="left")
        if hit < n:
            pulses += int(hit) + 1
            r = float(cum[hit])
        else:
            pulses += n
            r = float(cum[-1])
    return r, pulses, r


def _pulse_to_threshold_noisy(r0, threshold, config, rng, qubit_id):
    from .junction import apply_pulse  # local to avoid cycle at module load

    state = JunctionState(resistance=r0, relax_fraction=0.0, resistance_at_last_pulse=r0)
    pulses = 0
    while True:
        read = measure_resistance(state, config.measurement, rng)
        if read >= threshold:
            return state.resistance, pulses, read
        if pulses >= config.max_pulses:
            raise ControllerError(
                f"qubit {qubit_id}: max_pulses={config.max_pulses} exceeded",
                partial_record=QubitTuneRecord(
                    qubit_id=qubit_id,
                    r_untuned=r0,
                    threshold=threshold,
                    r_last_pulse=state.resistance,
                    r_tuned=state.resistance,
                    pulses=pulses,
                ),
            )
        state = apply_pulse(state, config.step, rng)
        pulses += 1


def run_campaign(
    qubits: list[JunctionState],
    targets: list[TuningTarget],
    config: CampaignConfig,
) -> CampaignResult:
    """Tune qubits one at a time; each qubit's probe happens the probe
    delay after its own last pulse."""
    if len(qubits) != len(targets):
        raise ValidationError(
            f"qubit/target length mismatch: {len(qubits)} vs {len(targets)}"
        )
    records = []
    for state, target in zip(qubits, targets):
        records.append(tune_qubit(state, target, config))
    return CampaignResult(records=tuple(records))


def _tuned_records(records, include_untuned: bool):
    records = list(records)
    if not include_untuned:
        records = [r for r in records if not r.already_above_target]
    if not records:
        raise ValidationError("no tuned records to aggregate")
    return records


@dataclass(frozen=True)
class ReserveCalibration:
    mean: float
    sigma: float
    count: int


def calibrate_reserve(records, include_untuned: bool = False) -> ReserveCalibration:
    """Relaxation fraction realized between last pulse and probe:
    statistics of (r_tuned - r_last_pulse) / r_last_pulse.

    Qubits flagged already-above-target were never pulsed and are
    excluded unless ``include_untuned`` is set.
    """
    records = _tuned_records(records, include_untuned)
    fracs = np.array(
        [(r.r_tuned - r.r_last_pulse) / r.r_last_pulse for r in records]
    )
    return ReserveCalibration(
        mean=float(fracs.mean()), sigma=float(fracs.std()), count=len(records)
    )


@dataclass(frozen=True)
class PrecisionStats:
    mean_frac: float
    sigma_frac: float
    min_frac: float
    max_frac: float


def precision_stats(
    result: CampaignResult, targets, include_untuned: bool = False
) -> PrecisionStats:
    """Tuned-resistance error relative to target, (r_tuned - R_T)/R_T.

    Records flagged already-above-target are excluded unless
    ``include_untuned`` is set; they were never tuned.
    """
    targets = list(targets)
    if not targets:
        raise ValidationError("precision_stats needs a non-empty target list")
    records = _tuned_records(result.records, include_untuned)
    by_id = {t.qubit_id: t for t in targets}
    fracs = []
    for rec in records:
        if rec.qubit_id not in by_id:
            raise ValidationError(f"no target for qubit {rec.qubit_id}")
        rt = by_id[rec.qubit_id].target_resistance
        fracs.append((rec.r_tuned - rt) / rt)
    fracs = np.array(fracs)
    return PrecisionStats(
        mean_frac=float(fracs.mean()),
        sigma_frac=float(fracs.std()),
        min_frac=float(fracs.min()),
        max_frac=float(fracs.max()),
    )


@dataclass(frozen=True)
class OvershootStats:
    mean: float
    sigma: float


def overshoot_stats(result: CampaignResult, include_untuned: bool = False) -> OvershootStats:
    """Last-pulse excess above the stop threshold, set by step size."""
    records = _tuned_records(result.records, include_untuned)
    over = np.array([r.r_last_pulse - r.threshold for r in records])
    return OvershootStats(mean=float(over.mean()), sigma=float(over.std()))
