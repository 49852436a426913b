"""Injected and local-oscillator comb specifications."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ConfigurationError, InvalidCount, ShiftCollision

__all__ = ["CombSpec", "uniform_comb", "pm_comb", "shift_comb", "merge_combs"]


@dataclass(frozen=True)
class CombSpec:
    """Comb lines ``(offset_hz, amplitude, phase_rad)`` in ascending offset order.

    Offsets are relative to the free-running laser frequency, amplitudes are
    relative to the free-running steady field amplitude.
    """

    lines: tuple = ()

    def __post_init__(self):
        lines = []
        for line in self.lines:
            if len(line) == 2:
                offset, amp = line
                phase = 0.0
            else:
                offset, amp, phase = line
            offset, amp, phase = float(offset), float(amp), float(phase)
            if not (math.isfinite(offset) and math.isfinite(amp) and math.isfinite(phase)):
                raise ConfigurationError("comb line values must be finite")
            if amp < 0:
                raise ConfigurationError(f"comb amplitude must be >= 0, got {amp!r}")
            lines.append((offset, amp, phase))
        lines.sort(key=lambda line: line[0])
        for a, b in zip(lines, lines[1:]):
            if a[0] == b[0]:
                raise ConfigurationError(f"duplicate comb offset {a[0]!r} Hz")
        object.__setattr__(self, "lines", tuple(lines))

    def __len__(self):
        return len(self.lines)

    @property
    def offsets(self) -> np.ndarray:
        return np.array([line[0] for line in self.lines], dtype=float)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([line[1] for line in self.lines], dtype=float)

    @property
    def phases(self) -> np.ndarray:
        return np.array([line[2] for line in self.lines], dtype=float)

    @property
    def max_abs_offset(self) -> float:
        return max((abs(line[0]) for line in self.lines), default=0.0)

    @property
    def state_index(self) -> int:
        """Index of the line nearest the free-running laser (the state comb)."""
        if not self.lines:
            raise ConfigurationError("empty comb has no state line")
        return int(np.argmin(np.abs(self.offsets)))

    @property
    def spacing(self) -> float | None:
        """Common line spacing, or None if the lines are not equally spaced."""
        if len(self.lines) < 2:
            return None
        d = np.diff(self.offsets)
        if np.allclose(d, d[0], rtol=1e-9, atol=0):
            return float(d[0])
        return None

    def total_power(self) -> float:
        return float(np.sum(self.amplitudes**2))

    def to_list(self) -> list:
        return [list(line) for line in self.lines]


def uniform_comb(f_detu, spacing, count, amplitude, placement="center") -> CombSpec:
    """Equal-amplitude comb with ``count`` lines separated by ``spacing``.

    With ``placement="center"`` the line at ``f_detu`` is the middle one
    (for even counts it sits just below the middle). With ``"edge"`` it is
    the first line and the others follow at ``f_detu + k*spacing``.
    """
    if int(count) != count or count < 1:
        raise InvalidCount(f"count must be a positive integer, got {count!r}")
    count = int(count)
    if not spacing > 0:
        raise ConfigurationError(f"spacing must be > 0, got {spacing!r}")
    if placement == "center":
        ks = range(-((count - 1) // 2), count // 2 + 1)
    elif placement == "edge":
        ks = range(count)
    else:
        raise ConfigurationError(f"unknown placement {placement!r}")
    return CombSpec(tuple((f_detu + k * spacing, float(amplitude), 0.0) for k in ks))


def pm_comb(beta, spacing, n_sidebands, center_offset=0.0) -> CombSpec:
    """Phase-modulation comb with Jacobi-Anger line amplitudes ``|J_k(beta)|``.

    Negative Bessel values are folded into a phase of pi.
    """
    if int(n_sidebands) != n_sidebands or n_sidebands < 0:
        raise InvalidCount(f"n_sidebands must be a non-negative integer, got {n_sidebands!r}")
    ks = np.arange(-int(n_sidebands), int(n_sidebands) + 1)
    j = special.jv(ks, beta)
    lines = []
    for k, value in zip(ks, j):
        phase = math.pi if value < 0 else 0.0
        lines.append((center_offset + int(k) * spacing, abs(float(value)), phase))
    return CombSpec(tuple(lines))


def shift_comb(comb: CombSpec, f0, merge_with: CombSpec | None = None) -> CombSpec:
    """Shift every offset by ``f0``; optionally merge into another comb."""
    shifted = CombSpec(tuple((o + f0, a, p) for o, a, p in comb.lines))
    if merge_with is None:
        return shifted
    return merge_combs(merge_with, shifted)


def merge_combs(a: CombSpec, b: CombSpec) -> CombSpec:
    existing = set(a.offsets.tolist())
    clash = [o for o in b.offsets.tolist() if o in existing]
    if clash:
        raise ShiftCollision(f"lines coincide at offsets {clash}")
    return CombSpec(a.lines + b.lines)
