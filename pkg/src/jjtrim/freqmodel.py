"""Resistance-to-frequency calibration and small closed-form utilities.

The core object is the empirical power law f = beta * R**(-alpha) fitted
in log-log space, used for prediction, inversion, target assignment with
an aging budget, and propagation of resistance spread into frequency
spread. Segmented power-law fitting (for relaxation-trace analysis) and
Gaussian fitting live here too.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import FitError, ValidationError

# Residual term for deviations introduced between tuning and cooldown
# (chip cleaning, packaging). Chosen so that composing it with the
# resistance-tuning, prediction, and measurement terms reproduces the
# empirically observed on-chip frequency spread.
DEFAULT_PRECOOLDOWN_SIGMA_MHZ = 10.5


@dataclass(frozen=True)
class PowerLawModel:
    """f = beta * R**(-alpha), with the fit's residual spread in MHz."""

    beta: float
    alpha: float
    residual_sigma: float
    r_min: float
    r_max: float

    def __post_init__(self):
        if not self.beta > 0 or not self.alpha > 0:
            raise ValidationError(
                f"beta and alpha must be > 0, got beta={self.beta}, alpha={self.alpha}"
            )


@dataclass(frozen=True)
class SegmentedPowerLaw:
    """Piecewise y = amp_k * t**exp_k between breakpoints.

    ``continuity_residual`` is the largest relative jump between
    adjacent segment fits evaluated at their shared breakpoint.
    """

    breakpoints: tuple[float, ...]
    exponents: tuple[float, ...]
    amplitudes: tuple[float, ...]
    continuity_residual: float


@dataclass(frozen=True)
class GaussianFit:
    mu: float
    sigma: float
    sample_count: int


def fit_power_law(points) -> PowerLawModel:
    """Least-squares fit of log f against log R.

    Two exact points determine the law exactly; the residual spread is
    reported in linear MHz against the fitted curve.
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise FitError(f"need at least 2 (R, f) points, got shape {pts.shape}")
    r, f = pts[:, 0], pts[:, 1]
    if np.any(r <= 0) or np.any(f <= 0):
        raise FitError("all resistances and frequencies must be positive")
    slope, intercept = np.polyfit(np.log(r), np.log(f), 1)
    alpha = -float(slope)
    beta = float(np.exp(intercept))
    if alpha <= 0:
        raise FitError(f"fitted exponent is not positive (alpha={alpha})")
    residuals = f - beta * r**(-alpha)
    return PowerLawModel(
        beta=beta,
        alpha=alpha,
        residual_sigma=float(np.std(residuals)),
        r_min=float(r.min()),
        r_max=float(r.max()),
    )


def predict_f(model: PowerLawModel, r):
    """Predicted frequency (MHz) at resistance r (Ohm)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValidationError("resistance must be positive")
    out = model.beta * r**(-model.alpha)
    return float(out) if out.ndim == 0 else out


def invert_R(model: PowerLawModel, f):
    """Resistance (Ohm) whose predicted frequency is f (MHz)."""
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValidationError("frequency must be positive")
    out = (model.beta / f) ** (1.0 / model.alpha)
    return float(out) if out.ndim == 0 else out


def assign_target_R(model: PowerLawModel, f_design: float, aging_budget: float = 0.02) -> float:
    """Target resistance for a design frequency, deflated by the aging
    budget so post-tuning drift lands the qubit on frequency."""
    r = invert_R(model, f_design)
    if not model.r_min <= r <= model.r_max:
        warnings.warn(
            f"inverted resistance {r:.1f} Ohm is outside the calibrated "
            f"domain [{model.r_min:.1f}, {model.r_max:.1f}]",
            stacklevel=2,
        )
    return r * (1.0 - aging_budget)


def freq_equiv_sigma(model: PowerLawModel, f_pred: float, sigma_r_rel: float) -> float:
    """Frequency spread equivalent to a relative resistance spread.

    Analytic derivative of the power law: |df/dR| * sigma_R =
    alpha * f * sigma_R/R.
    """
    if f_pred <= 0 or sigma_r_rel < 0:
        raise ValidationError("f_pred must be > 0 and sigma_r_rel >= 0")
    return model.alpha * f_pred * sigma_r_rel


def _fit_loglog_segment(t, y):
    slope, intercept = np.polyfit(np.log(t), np.log(y), 1)
    return float(slope), float(np.exp(intercept))


def fit_segmented_power_law(
    t_hr,
    delta_r,
    breakpoints=None,
    n_candidates: int = 50,
    min_points: int = 3,
) -> SegmentedPowerLaw:
    """Per-segment log-log least squares on a relaxation trace.

    With ``breakpoints=None`` a two-changepoint search runs exhaustively
    over a log-spaced candidate grid, minimizing the total squared
    log-residual; the series are short, so exactness beats speed.
    """
    t = np.asarray(t_hr, dtype=float)
    y = np.asarray(delta_r, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise FitError("t_hr and delta_r must be 1-D arrays of equal length")
    if np.any(t <= 0) or np.any(y <= 0):
        raise FitError("times and resistance changes must be positive")
    order = np.argsort(t)
    t, y = t[order], y[order]

    if breakpoints is not None:
        bps = tuple(float(b) for b in breakpoints)
        return _fit_with_breakpoints(t, y, bps, min_points)

    grid = np.geomspace(t[0], t[-1], n_candidates + 2)[1:-1]
    best = None
    for i in range(len(grid)):
        for j in range(i + 1, len(grid)):
            bps = (float(grid[i]), float(grid[j]))
            try:
                fit = _fit_with_breakpoints(t, y, bps, min_points)
            except FitError:
                continue
            sse = _segmented_log_sse(t, y, fit)
            if best is None or sse < best[0]:
                best = (sse, fit)
    if best is None:
        raise FitError("no breakpoint pair leaves enough points per segment")
    return best[1]


def _fit_with_breakpoints(t, y, bps, min_points) -> SegmentedPowerLaw:
    if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
        raise FitError(f"breakpoints must be increasing: {bps}")
    edges = (-np.inf, *bps, np.inf)
    exponents, amplitudes = [], []
    for lo, hi in zip(edges, edges[1:]):
        mask = (t > lo) & (t <= hi)
        if mask.sum() < min_points:
            raise FitError(
                f"segment ({lo}, {hi}] has {int(mask.sum())} points, need {min_points}"
            )
        slope, amp = _fit_loglog_segment(t[mask], y[mask])
        exponents.append(slope)
        amplitudes.append(amp)
    jumps = []
    for k, b in enumerate(bps):
        left = amplitudes[k] * b ** exponents[k]
        right = amplitudes[k + 1] * b ** exponents[k + 1]
        jumps.append(abs(left - right) / max(left, right))
    return SegmentedPowerLaw(
        breakpoints=tuple(bps),
        exponents=tuple(exponents),
        amplitudes=tuple(amplitudes),
        continuity_residual=max(jumps) if jumps else 0.0,
    )


def _segmented_log_sse(t, y, fit: SegmentedPowerLaw) -> float:
    edges = (-np.inf, *fit.breakpoints, np.inf)
    sse = 0.0
    for k, (lo, hi) in enumerate(zip(edges, edges[1:])):
        mask = (t > lo) & (t <= hi)
        pred = np.log(fit.amplitudes[k]) + fit.exponents[k] * np.log(t[mask])
        sse += float(np.sum((np.log(y[mask]) - pred) ** 2))
    return sse


def fit_gaussian(samples) -> GaussianFit:
    """Maximum-likelihood Gaussian fit (population sigma)."""
    x = np.asarray(list(samples), dtype=float)
    if x.size < 2:
        raise FitError(f"need at least 2 samples, got {x.size}")
    return GaussianFit(mu=float(x.mean()), sigma=float(x.std()), sample_count=int(x.size))


def compose_sigma(components) -> float:
    """Root-sum-square of independent spread components."""
    c = np.asarray(list(components), dtype=float)
    if np.any(c < 0):
        raise ValidationError("sigma components must be non-negative")
    return float(np.sqrt(np.sum(c**2)))


def loss_tangent(t1_us: float, f_ghz: float) -> float:
    """Frequency-normalized loss tangent 1/(T1 * 2*pi*f)."""
    if t1_us <= 0 or f_ghz <= 0:
        raise ValidationError("T1 and frequency must be positive")
    return 1.0 / (t1_us * 1e-6 * 2.0 * math.pi * f_ghz * 1e9)


def tunability(f_max_mhz: float, f_min_mhz: float) -> float:
    """Frequency excursion range f01max - f01min."""
    if f_max_mhz < f_min_mhz:
        raise ValidationError(
            f"f_max ({f_max_mhz}) must be >= f_min ({f_min_mhz})"
        )
    return f_max_mhz - f_min_mhz
