"""Periodograms, comb-line power extraction and dual-comb beat readout.

Powers are relative: spectra are in units of ``|E|^2`` (m^-3) and dB values
are ``10*log10`` of those numbers unless a reference is passed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .combgen import CombSpec
from .errors import (
    BandwidthExceeded,
    ConfigurationError,
    EmptyRecord,
    EmptyWindow,
    WindowOverlap,
)
from .integrator import FieldRecord

__all__ = [
    "WindowKind",
    "SpectrumResult",
    "BeatReadout",
    "power_spectrum",
    "comb_powers",
    "beat_readout",
    "lo_field",
]

_TINY = 1e-300


class WindowKind(str, Enum):
    RECTANGULAR = "rectangular"
    HANN = "hann"


def _window(kind, n):
    kind = WindowKind(kind)
    if kind is WindowKind.RECTANGULAR:
        return np.ones(n)
    # Periodic Hann: exact for bin-aligned tones, coherent gain 1/2.
    return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    bin_frequencies: np.ndarray
    psd: np.ndarray
    window_kind: WindowKind
    coherent_gain: float
    enbw_bins: float = 1.0

    @property
    def resolution(self) -> float:
        f = self.bin_frequencies
        return float(f[1] - f[0]) if f.size > 1 else float("inf")

    def psd_db(self, reference: float = 1.0) -> np.ndarray:
        return 10 * np.log10(np.maximum(self.psd, _TINY) / reference)


@dataclass(frozen=True)
class BeatReadout:
    """Beat-note powers; ``harmonics`` holds ``(h, frequency_hz, power_db)``."""

    harmonics: tuple
    f0: float
    delta_f: float

    def power(self, h: int) -> float:
        for index, _, power in self.harmonics:
            if index == h:
                return power
        raise KeyError(h)

    @property
    def indices(self) -> list:
        return [h for h, _, _ in self.harmonics]


def _periodogram(x, sample_interval, window_kind, two_sided=True):
    n = x.size
    w = _window(window_kind, n)
    gain = w.sum() / n
    spec = np.fft.fft(x * w) / w.sum()
    psd = spec.real**2 + spec.imag**2
    freqs = np.fft.fftfreq(n, sample_interval)
    enbw = n * np.sum(w**2) / w.sum() ** 2
    if two_sided:
        return np.fft.fftshift(freqs), np.fft.fftshift(psd), gain, enbw
    return freqs, psd, gain, enbw


def power_spectrum(record: FieldRecord, window_kind=WindowKind.HANN) -> SpectrumResult:
    """Two-sided periodogram of the complex field record.

    Normalized by the window sum, so a pure tone of amplitude ``A`` on a bin
    reads ``A**2`` at its peak for either window. With the rectangular window
    the bins sum to the mean of ``|E|^2`` (Parseval).
    """
    if len(record) == 0:
        raise EmptyRecord("cannot take the spectrum of an empty record")
    freqs, psd, gain, enbw = _periodogram(record.samples, record.sample_interval, window_kind)
    return SpectrumResult(freqs, psd, WindowKind(window_kind), float(gain), float(enbw))


def _line_windows(freqs, offsets, halfwidth):
    offsets = np.asarray(offsets, dtype=float)
    order = np.argsort(offsets)
    sorted_offsets = offsets[order]
    if np.any(np.diff(sorted_offsets) <= 2 * halfwidth):
        raise WindowOverlap(
            f"search windows of half-width {halfwidth:.6g} Hz overlap for offsets {offsets.tolist()}"
        )
    masks = []
    for offset in offsets:
        mask = (freqs >= offset - halfwidth) & (freqs <= offset + halfwidth)
        if not mask.any():
            raise EmptyWindow(f"no spectral bins within {halfwidth:.6g} Hz of {offset:.6g} Hz")
        masks.append(mask)
    return masks


def default_halfwidth(offsets) -> float:
    """A quarter of the smallest line separation."""
    offsets = np.sort(np.asarray(offsets, dtype=float))
    if offsets.size < 2:
        raise ConfigurationError("a single offset needs an explicit search_halfwidth")
    return float(np.min(np.diff(offsets)) / 4)


def comb_powers(spec: SpectrumResult, offsets, search_halfwidth=None, integrated=False,
                reference: float = 1.0) -> np.ndarray:
    """Line powers in dB at each expected offset.

    Peak bin within +/- ``search_halfwidth`` by default; with
    ``integrated=True`` the window sum divided by the window's noise
    bandwidth, which reads the same for an isolated line.
    """
    if search_halfwidth is None:
        search_halfwidth = default_halfwidth(offsets)
    masks = _line_windows(spec.bin_frequencies, offsets, search_halfwidth)
    values = []
    for mask in masks:
        if integrated:
            values.append(spec.psd[mask].sum() / spec.enbw_bins)
        else:
            values.append(spec.psd[mask].max())
    return 10 * np.log10(np.maximum(np.array(values), _TINY) / reference)


def lo_field(lo_comb: CombSpec, times, reference_amplitude=1.0) -> np.ndarray:
    """Local-oscillator field sampled at ``times``."""
    field = np.zeros(np.shape(times), dtype=complex)
    for offset, amp, phase in lo_comb.lines:
        field += (reference_amplitude * amp) * np.exp(1j * (2 * np.pi * offset * times + phase))
    return field


def beat_readout(record: FieldRecord, lo_comb: CombSpec, f0, delta_f, h_max, pd_bandwidth,
                 reference_amplitude=1.0, window_kind=WindowKind.HANN,
                 search_halfwidth=None, return_spectrum=False):
    """Heterodyne the record with a local-oscillator comb on a square-law detector.

    The photocurrent ``|E + E_LO|^2`` is low-passed at ``pd_bandwidth``
    (brick wall) and its powers at ``f0 + h*delta_f`` for
    ``h = -h_max..h_max`` are reported in dB relative to
    ``reference_amplitude**4``. A LO line ``f0 + h*delta_f`` below an
    injected line beats with it at exactly that frequency.
    """
    if len(record) == 0:
        raise EmptyRecord("cannot read out an empty record")
    h_max = int(h_max)
    if h_max < 0:
        raise ConfigurationError("h_max must be >= 0")
    top = f0 + h_max * abs(delta_f)
    if top > pd_bandwidth:
        raise BandwidthExceeded(
            f"f0 + h_max*delta_f = {top:.6g} Hz exceeds the detector bandwidth {pd_bandwidth:.6g} Hz"
        )
    current = np.abs(record.samples + lo_field(lo_comb, record.times, reference_amplitude)) ** 2
    freqs, psd, gain, enbw = _periodogram(current, record.sample_interval, window_kind, two_sided=False)
    in_band = (freqs >= 0) & (freqs <= pd_bandwidth)
    freqs, psd = freqs[in_band], psd[in_band]
    order = np.argsort(freqs)
    freqs, psd = freqs[order], psd[order]

    hs = [h for h in range(-h_max, h_max + 1) if f0 + h * delta_f > 0]
    targets = [f0 + h * delta_f for h in hs]
    if search_halfwidth is None:
        search_halfwidth = abs(delta_f) / 4 if delta_f else pd_bandwidth / 4
    filtered = SpectrumResult(freqs, psd, WindowKind(window_kind), float(gain), float(enbw))
    if delta_f == 0:
        powers = comb_powers(filtered, [f0], search_halfwidth, reference=reference_amplitude**4)
        harmonics = tuple((h, float(f0), float(powers[0])) for h in hs)
    else:
        powers = comb_powers(filtered, targets, search_halfwidth, reference=reference_amplitude**4)
        harmonics = tuple(
            sorted(((h, float(f), float(p)) for h, f, p in zip(hs, targets, powers)),
                   key=lambda item: (abs(item[0]), item[0]))
        )
    result = BeatReadout(harmonics, float(f0), float(delta_f))
    if return_spectrum:
        return result, filtered
    return result
