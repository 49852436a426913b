"""Photonic tuning curves: comb-line power versus input RF frequency."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError, PNPError
from .integrator import default_grid, integrate
from .measure import LineReadout, measure_lines
from .model import DriveConfig, LaserParams, steady_state
from .parallel import annotate, ordered_map
from .spectrum import WindowKind, _periodogram

__all__ = [
    "Shape",
    "TuningCurve",
    "CurveMetrics",
    "ModulationResponse",
    "scan_frequencies",
    "default_scan_range",
    "tuning_curve",
    "curve_metrics",
    "classify_shape",
    "modulation_response",
]

DEFAULT_STEP = 50e6
DEFAULT_THRESHOLD_DB = 1.0


class Shape(str, Enum):
    INVERSE_BELL = "InverseBell"
    DUAL_PEAK = "DualPeak"
    FLAT = "Flat"


@dataclass(frozen=True, eq=False)
class TuningCurve:
    """``responses[c, i]`` is comb ``c``'s power change (dB) at ``input_frequencies[i]``."""

    input_frequencies: np.ndarray
    responses: np.ndarray
    baseline_powers: np.ndarray
    tracked_offsets: np.ndarray
    depth: float = 0.0

    def __post_init__(self):
        f = np.asarray(self.input_frequencies, dtype=float)
        r = np.atleast_2d(np.asarray(self.responses, dtype=float))
        if r.size == 0:
            r = r.reshape(len(np.atleast_1d(self.tracked_offsets)), 0)
        if r.shape[1] != f.size:
            raise ConfigurationError("each response sequence must match input_frequencies")
        object.__setattr__(self, "input_frequencies", f)
        object.__setattr__(self, "responses", r)
        object.__setattr__(self, "baseline_powers", np.asarray(self.baseline_powers, dtype=float))
        object.__setattr__(self, "tracked_offsets", np.asarray(self.tracked_offsets, dtype=float))

    @property
    def n_combs(self) -> int:
        return self.responses.shape[0]

    def __len__(self):
        return self.input_frequencies.size


@dataclass(frozen=True)
class CurveMetrics:
    amplitude: float
    width: float
    shape: Shape
    extremum_frequency: float
    positive_peak: float = 0.0
    negative_peak: float = 0.0


@dataclass(frozen=True, eq=False)
class ModulationResponse:
    frequencies: np.ndarray
    response_db: np.ndarray

    @property
    def peak_frequency(self) -> float:
        return float(self.frequencies[int(np.argmax(self.response_db))])


def scan_frequencies(f_start, f_stop, f_step=DEFAULT_STEP) -> np.ndarray:
    if not f_step > 0:
        raise ConfigurationError("f_step must be > 0")
    if not f_start < f_stop:
        raise ConfigurationError("f_start must be below f_stop")
    if not f_start > 0:
        raise ConfigurationError("scan frequencies must be > 0")
    n = int(math.floor((f_stop - f_start) / f_step + 1e-9)) + 1
    return f_start + f_step * np.arange(n)


def default_scan_range(spacing, multiple=1) -> tuple[float, float]:
    """One comb spacing centred on ``multiple * spacing``."""
    center = multiple * spacing
    return center - spacing / 2, center + spacing / 2


def tuning_curve(params: LaserParams, comb, bias_ratio, m, f_start, f_stop,
                 f_step=DEFAULT_STEP, tracked_offsets=None, grid=None, resolution=5e6,
                 readout: LineReadout | None = None, threads=None) -> TuningCurve:
    """Scan a single RF tone of depth ``m`` and record each tracked line.

    Every scan point is an independent run from the free-running steady
    state on the same grid as the no-input baseline. Points can run in
    parallel; the result is ordered by frequency regardless.
    """
    freqs = scan_frequencies(f_start, f_stop, f_step)
    offsets = comb.offsets if tracked_offsets is None else np.asarray(tracked_offsets, dtype=float)
    base_drive = DriveConfig(bias_ratio)
    if grid is None:
        grid = default_grid(comb, base_drive.with_tones([(freqs[-1], m, 0.0)]), resolution, params)
    baseline = measure_lines(params, comb, base_drive, grid, offsets, readout)

    def point(f):
        try:
            return measure_lines(params, comb, base_drive.with_tones([(f, m, 0.0)]), grid,
                                 offsets, readout)
        except PNPError as exc:
            raise annotate(exc, f"scan frequency {f:.6g} Hz") from exc

    powers = np.array(ordered_map(point, freqs, threads)).reshape(freqs.size, offsets.size)
    return TuningCurve(freqs, (powers - baseline).T, baseline, offsets, float(m))


def classify_shape(responses, threshold=DEFAULT_THRESHOLD_DB) -> Shape:
    """Flat / InverseBell / DualPeak by comparing the extremes with ``threshold``.

    A curve that only rises above ``threshold`` counts as DualPeak with zero
    negative depth.
    """
    if not threshold > 0:
        raise ConfigurationError("threshold must be > 0")
    r = np.asarray(responses, dtype=float)
    if r.size == 0 or np.max(np.abs(r)) < threshold:
        return Shape.FLAT
    hi, lo = r.max(), r.min()
    if lo < -threshold and hi <= threshold:
        return Shape.INVERSE_BELL
    return Shape.DUAL_PEAK


def _half_crossing(f, a, start, step, half):
    i = start
    while 0 <= i + step < a.size and a[i + step] >= half:
        i += step
    j = i + step
    if not 0 <= j < a.size:
        return f[i]
    # Linear interpolation between the last point above and the first below half.
    frac = (a[i] - half) / (a[i] - a[j])
    return f[i] + frac * (f[j] - f[i])


def curve_metrics(curve: TuningCurve, comb_index=0, threshold=DEFAULT_THRESHOLD_DB) -> CurveMetrics:
    r = curve.responses[comb_index]
    f = curve.input_frequencies
    if r.size == 0:
        raise ConfigurationError("empty tuning curve")
    a = np.abs(r)
    k = int(np.argmax(a))
    amplitude = float(a[k])
    shape = classify_shape(r, threshold)
    if amplitude == 0:
        width = 0.0
    else:
        half = amplitude / 2
        width = float(_half_crossing(f, a, k, +1, half) - _half_crossing(f, a, k, -1, half))
    return CurveMetrics(
        amplitude=amplitude,
        width=width,
        shape=shape,
        extremum_frequency=float(f[k]),
        positive_peak=float(max(r.max(), 0.0)),
        negative_peak=float(min(r.min(), 0.0)),
    )


def modulation_response(params: LaserParams, bias_ratio, depth, frequencies, resolution=10e6,
                        threads=None) -> ModulationResponse:
    """Small-signal intensity response of the uninjected laser.

    For each frequency, the amplitude of the ``|E|^2`` oscillation at that
    frequency divided by ``depth * S0``, in dB.
    """
    freqs = np.asarray(frequencies, dtype=float)
    _, s0 = steady_state(params, bias_ratio)
    drive = DriveConfig(bias_ratio)
    grid = default_grid(None, drive.with_tones([(freqs.max(), depth, 0.0)]), resolution, params)

    def point(f):
        record = integrate(params, None, drive.with_tones([(f, depth, 0.0)]), grid)
        power = record.photon_density
        bins, psd, _, _ = _periodogram(power - power.mean(), record.sample_interval,
                                       WindowKind.HANN, two_sided=False)
        near = np.abs(bins - f) <= 2 * (bins[1] - bins[0])
        amplitude = 2 * math.sqrt(psd[near].max())
        return 20 * math.log10(amplitude / (depth * s0))

    return ModulationResponse(freqs, np.array(ordered_map(point, freqs, threads)))
