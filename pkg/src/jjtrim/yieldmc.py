"""Detuning-edge yield: unit-cell search, tiling, and Monte Carlo.

A 3x3 unit cell of frequency offsets is tiled by translation into larger
chips; yield is the probability that every nearest-neighbor edge keeps
its |detuning| inside the acceptance window when each qubit frequency is
perturbed by independent Gaussian spread.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, ValidationError
from .lattice import QubitLattice

DESIGN_WINDOW_MHZ = (40.0, 110.0)
YIELD_WINDOW_MHZ = (20.0, 130.0)
DEFAULT_DICE_PER_WAFER = 212


def unit_cell_violations(offsets, window=DESIGN_WINDOW_MHZ) -> list[str]:
    """Independent checker: enumerate all 12 internal nearest-neighbor
    detunings and the 6 translation-stitching detunings (wraparound per
    row and per column) and list every window violation."""
    f = np.asarray(offsets, dtype=float)
    if f.shape != (3, 3):
        raise ValidationError(f"unit cell must be 3x3, got shape {f.shape}")
    lo, hi = window
    bad = []

    def check(label, d):
        if not lo <= abs(d) <= hi:
            bad.append(f"{label}: |{d:.1f}| MHz outside [{lo}, {hi}]")

    for r in range(3):
        for c in range(3):
            if c + 1 < 3:
                check(f"internal ({r},{c})-({r},{c+1})", f[r, c + 1] - f[r, c])
            if r + 1 < 3:
                check(f"internal ({r},{c})-({r+1},{c})", f[r + 1, c] - f[r, c])
    for r in range(3):
        check(f"row stitch ({r},2)-({r},0)", f[r, 2] - f[r, 0])
    for c in range(3):
        check(f"col stitch (2,{c})-(0,{c})", f[2, c] - f[0, c])
    return bad


@dataclass(frozen=True)
class UnitCellDesign:
    """3x3 frequency offsets (MHz from a base frequency) whose internal
    and stitching detunings all sit inside the design window."""

    offsets_mhz: tuple[tuple[float, ...], ...]
    base_frequency_mhz: float = 4500.0
    design_window_mhz: tuple[float, float] = DESIGN_WINDOW_MHZ

    def __post_init__(self):
        offs = tuple(tuple(float(v) for v in row) for row in self.offsets_mhz)
        object.__setattr__(self, "offsets_mhz", offs)
        bad = unit_cell_violations(offs, self.design_window_mhz)
        if bad:
            raise ValidationError(
                "unit cell violates its design window: " + "; ".join(bad)
            )


def generate_unit_cell(
    window=DESIGN_WINDOW_MHZ,
    seed=0,
    grid_step_mhz: float = 10.0,
    grid_max_mhz: float = 250.0,
    base_frequency_mhz: float = 4500.0,
    max_restarts: int = 200,
    node_budget: int = 200_000,
) -> UnitCellDesign:
    """Backtracking search for a valid cell on a grid of offsets.

    Candidate orderings are reshuffled per restart from the seeded rng,
    so the result is deterministic under a fixed seed.
    """
    lo, hi = window
    if lo > hi:
        raise ValidationError(f"window must satisfy lo <= hi, got {window}")
    rng = np.random.default_rng(seed)
    values = np.arange(0.0, grid_max_mhz + 0.5 * grid_step_mhz, grid_step_mhz)

    for _ in range(max_restarts):
        order = values[rng.permutation(len(values))]
        cell = np.zeros((3, 3))
        nodes = [0]

        def ok(r, c, v):
            if c > 0 and not lo <= abs(v - cell[r, c - 1]) <= hi:
                return False
            if r > 0 and not lo <= abs(v - cell[r - 1, c]) <= hi:
                return False
            if c == 2 and not lo <= abs(v - cell[r, 0]) <= hi:
                return False
            if r == 2 and not lo <= abs(v - cell[0, c]) <= hi:
                return False
            return True

        def place(idx):
            if nodes[0] > node_budget:
                return False
            nodes[0] += 1
            if idx == 9:
                return True
            r, c = divmod(idx, 3)
            for v in order:
                if ok(r, c, v):
                    cell[r, c] = v
                    if place(idx + 1):
                        return True
            return False

        if place(0):
            return UnitCellDesign(
                offsets_mhz=tuple(tuple(row) for row in cell),
                base_frequency_mhz=base_frequency_mhz,
                design_window_mhz=(lo, hi),
            )
    raise InfeasibleError(
        f"no unit cell found for window {window} on a {grid_step_mhz} MHz "
        f"grid within {max_restarts} restarts"
    )


def tile(cell: UnitCellDesign, m: int, n: int) -> QubitLattice:
    """(3m)x(3n) lattice of identical translated copies of the cell."""
    if m < 1 or n < 1:
        raise ValidationError(f"tiling counts must be >= 1, got {m}x{n}")
    rows, cols = 3 * m, 3 * n
    offs = cell.offsets_mhz
    freqs = [
        cell.base_frequency_mhz + offs[r % 3][c % 3]
        for r in range(rows)
        for c in range(cols)
    ]
    return QubitLattice(rows=rows, cols=cols, design_f01max=tuple(freqs))


@dataclass(frozen=True)
class YieldConfig:
    sigma_f_mhz: float
    master_seed: int
    window_mhz: tuple[float, float] = YIELD_WINDOW_MHZ
    trials: int = 10**5
    chunk_trials: int = 4096
    n_threads: int = 1

    def __post_init__(self):
        if self.sigma_f_mhz < 0:
            raise ValidationError("sigma_f must be >= 0")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.window_mhz[0] >= self.window_mhz[1]:
            raise ValidationError(f"window must satisfy lo < hi, got {self.window_mhz}")
        if self.chunk_trials < 1 or self.n_threads < 1:
            raise ValidationError("chunk_trials and n_threads must be >= 1")


@dataclass(frozen=True)
class YieldResult:
    yield_estimate: float
    ci_low: float
    ci_high: float
    passes: int
    trials: int
    qubit_count: int


def wilson_interval(passes: int, trials: int, z: float = 1.959964) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    p = passes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def mc_chip_yield(lattice: QubitLattice, config: YieldConfig) -> YieldResult:
    """Monte Carlo estimate of the all-edges-in-window probability.

    Perturbations for chunk c of trials come from a stream seeded by
    (master_seed, c) with a fixed chunk size, so every trial's draw is a
    pure function of the master seed and its trial index: results are
    bit-identical regardless of thread count or execution order.
    """
    freqs = np.array(lattice.design_f01max)
    edges = lattice.edges()
    ia = np.array([a for a, _ in edges])
    ib = np.array([b for _, b in edges])
    lo, hi = config.window_mhz

    n_chunks = -(-config.trials // config.chunk_trials)

    def run_chunk(c: int) -> int:
        nt = min(config.chunk_trials, config.trials - c * config.chunk_trials)
        rng = np.random.default_rng(
            np.random.SeedSequence([int(config.master_seed), c])
        )
        pert = rng.normal(0.0, config.sigma_f_mhz, size=(nt, freqs.size)) if config.sigma_f_mhz > 0 else np.zeros((nt, freqs.size))
        f = freqs[None, :] + pert
        d = np.abs(f[:, ia] - f[:, ib])
        ok = np.all((d >= lo) & (d <= hi), axis=1)
        return int(ok.sum())

    if config.n_threads == 1:
        passes = sum(run_chunk(c) for c in range(n_chunks))
    else:
        with ThreadPoolExecutor(max_workers=config.n_threads) as pool:
            passes = sum(pool.map(run_chunk, range(n_chunks)))

    y = passes / config.trials
    ci_low, ci_high = wilson_interval(passes, config.trials)
    return YieldResult(
        yield_estimate=y,
        ci_low=ci_low,
        ci_high=ci_high,
        passes=passes,
        trials=config.trials,
        qubit_count=lattice.n_qubits,
    )


def yield_curve(
    cell: UnitCellDesign,
    sigmas_mhz,
    sizes,
    master_seed: int,
    trials: int = 10**5,
    window_mhz=YIELD_WINDOW_MHZ,
) -> list[dict]:
    """Yield table over chip sizes and frequency spreads.

    Rows carry (qubits, sigma_mhz, yield, ci_lo, ci_hi), ready for CSV
    plot-data emission.
    """
    rows = []
    for m, n in sizes:
        lat = tile(cell, m, n)
        for sigma in sigmas_mhz:
            cfg = YieldConfig(
                sigma_f_mhz=sigma,
                master_seed=master_seed,
                window_mhz=tuple(window_mhz),
                trials=trials,
            )
            res = mc_chip_yield(lat, cfg)
            rows.append(
                {
                    "qubits": lat.n_qubits,
                    "sigma_mhz": sigma,
                    "yield": res.yield_estimate,
                    "ci_lo": res.ci_low,
                    "ci_hi": res.ci_high,
                }
            )
    return rows


@dataclass(frozen=True)
class WaferProjection:
    chips: int
    qubits: int
    dice: int


def wafer_projection(result: YieldResult, dice: int = DEFAULT_DICE_PER_WAFER) -> WaferProjection:
    """Expected yielded chips (and their qubits) per wafer."""
    if dice < 0:
        raise ValidationError("dice must be >= 0")
    chips = round(result.yield_estimate * dice)
    return WaferProjection(chips=chips, qubits=chips * result.qubit_count, dice=dice)
