"""Detuning calibration: state-comb power versus comb detuning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .combgen import CombSpec
from .errors import ConfigurationError, PNPError, TargetOutOfRange
from .integrator import default_grid
from .measure import LineReadout, measure_lines
from .model import DriveConfig, LaserParams
from .parallel import annotate, ordered_map

__all__ = ["CalibrationSweep", "detuning_grid", "calibration_sweep", "select_operating_point"]

# How far outside the swept power range a target may lie before it is refused.
TARGET_MARGIN_DB = 3.0


@dataclass(frozen=True, eq=False)
class CalibrationSweep:
    detunings: np.ndarray
    state_power_db: np.ndarray
    state_index: int = 0

    def __post_init__(self):
        d = np.asarray(self.detunings, dtype=float)
        p = np.asarray(self.state_power_db, dtype=float)
        if d.shape != p.shape:
            raise ConfigurationError("detunings and powers must have equal length")
        order = np.argsort(d, kind="stable")
        if np.any(np.diff(d[order]) <= 0):
            raise ConfigurationError("detunings must be distinct")
        object.__setattr__(self, "detunings", d[order])
        object.__setattr__(self, "state_power_db", p[order])

    def __len__(self):
        return self.detunings.size


def detuning_grid(detuning_range, detuning_step) -> np.ndarray:
    """Ascending detunings covering ``detuning_range`` in either order."""
    if not detuning_step > 0:
        raise ConfigurationError("detuning_step must be > 0")
    lo, hi = sorted(float(x) for x in detuning_range)
    n = int(np.floor((hi - lo) / detuning_step + 1e-9)) + 1
    return lo + detuning_step * np.arange(n)


def calibration_sweep(params: LaserParams, comb_template: CombSpec, bias_ratio, detuning_range,
                      detuning_step=50e6, grid=None, resolution=5e6,
                      readout: LineReadout | None = None, threads=None) -> CalibrationSweep:
    """Move the whole comb so its state line sits at each detuning and read that line.

    The state comb is the line nearest the free-running laser frequency;
    the other lines keep their positions relative to it.
    """
    dets = detuning_grid(detuning_range, detuning_step)
    if comb_template is None or len(comb_template) == 0:
        raise ConfigurationError("calibration needs a non-empty comb")
    index = comb_template.state_index
    anchor = comb_template.offsets[index]
    drive = DriveConfig(bias_ratio)
    readout = readout or LineReadout()
    if len(comb_template) == 1 and readout.search_halfwidth is None:
        readout = LineReadout(readout.window, 4 * resolution, readout.integrated)

    def shifted(det):
        return CombSpec([(off - anchor + det, a, ph) for off, a, ph in comb_template.lines])

    if grid is None:
        widest = max((shifted(d) for d in dets), key=lambda c: c.max_abs_offset)
        grid = default_grid(widest, drive, resolution, params)

    def point(det):
        comb = shifted(det)
        try:
            return measure_lines(params, comb, drive, grid, comb.offsets, readout)[comb.state_index]
        except PNPError as exc:
            raise annotate(exc, f"detuning {det:.6g} Hz") from exc

    powers = np.array(ordered_map(point, dets, threads))
    return CalibrationSweep(dets, powers, index)


def select_operating_point(sweep: CalibrationSweep, target_power_db) -> float:
    """Detuning (Hz) whose state-comb power matches ``target_power_db``.

    Scans from the smallest detuning, so the first exact hit or bracketing
    pair wins; inside a bracket the detuning is linearly interpolated. A
    target outside the swept range by more than ``TARGET_MARGIN_DB`` raises
    ``TargetOutOfRange``; otherwise the nearest sweep point is returned.
    """
    d, p = sweep.detunings, sweep.state_power_db
    if d.size == 0:
        raise ConfigurationError("empty calibration sweep")
    target = float(target_power_db)
    lo, hi = float(p.min()), float(p.max())
    if target < lo - TARGET_MARGIN_DB or target > hi + TARGET_MARGIN_DB:
        raise TargetOutOfRange(
            f"target {target:.3f} dB lies outside the swept range [{lo:.3f}, {hi:.3f}] dB"
        )
    for i in range(d.size):
        if p[i] == target:
            return float(d[i])
        if i + 1 < d.size:
            a, b = p[i], p[i + 1]
            if min(a, b) < target < max(a, b):
                return float(d[i] + (target - a) / (b - a) * (d[i + 1] - d[i]))
    # argmin keeps the first (smallest-detuning) point on ties.
    return float(d[int(np.argmin(np.abs(p - target)))])
