"""One simulation run reduced to comb-line powers."""

from __future__ import annotations

from dataclasses import dataclass

from .integrator import integrate
from .model import steady_state
from .spectrum import WindowKind, comb_powers, power_spectrum


@dataclass(frozen=True)
class LineReadout:
    """How line powers are read from a spectrum.

    ``search_halfwidth=None`` means a quarter of the smallest line spacing.
    """

    window: WindowKind = WindowKind.HANN
    search_halfwidth: float | None = None
    integrated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "window", WindowKind(self.window))


def measure_lines(params, comb, drive, grid, offsets, readout: LineReadout | None = None):
    """Line powers in dB relative to the free-running photon density S0."""
    readout = readout or LineReadout()
    record = integrate(params, comb, drive, grid)
    spec = power_spectrum(record, readout.window)
    _, s0 = steady_state(params, drive.bias_ratio)
    return comb_powers(spec, offsets, readout.search_halfwidth, readout.integrated, reference=s0)
