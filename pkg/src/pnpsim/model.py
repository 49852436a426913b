"""Single-mode rate equations of an injected, directly modulated laser.

The field is written in a frame rotating at the free-running laser
frequency, normalized so that ``|E|**2`` is the photon density in m^-3::

    dE/dt = (1 + i*alpha)/2 * G_N*(N - N_th)*E
            + kappa * sum_k a_k*E0*exp(i*(2*pi*f_k*t + phi_k))
    dN/dt = R_p(t) - N/tau_s - (1/tau_p + G_N*(N - N_th))*|E|**2

with ``E0`` the free-running steady amplitude at the configured bias and
``R_p(t) = R_b + sum_i m_i*(R_b - R_th)*sin(2*pi*f_i*t + phi_i)``.

``R_th`` only scales the pump; the lasing threshold of these equations is
``N_th / tau_s`` (see :func:`steady_state`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import BelowThreshold, ConfigurationError

__all__ = [
    "LaserParams",
    "DriveConfig",
    "LaserState",
    "StateDerivative",
    "pump_rate",
    "derivative",
    "steady_state",
    "relaxation_frequency",
    "injection_scale",
]

# Injection coupling rate used when none is given. The literature value of
# order 1e10 s^-1 drives the 0.1-0.3 injection ratios of the tuning-curve
# experiments into chaotic dynamics with alpha = 5.
DEFAULT_KAPPA = 1.0e9


@dataclass(frozen=True)
class LaserParams:
    """Physical constants of the slave laser (SI units)."""

    tau_s: float = 2e-9
    G_N: float = 7.9e-13
    N_th: float = 2.91924e24
    tau_p: float = 2e-12
    alpha: float = 5.0
    R_th: float = 1.8e33
    kappa: float = DEFAULT_KAPPA

    def __post_init__(self):
        for name in ("tau_s", "G_N", "N_th", "tau_p", "R_th", "kappa"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be finite and > 0, got {value!r}")
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ConfigurationError(f"alpha must be finite and >= 0, got {self.alpha!r}")

    @property
    def lasing_threshold(self) -> float:
        """Pump rate at which the carrier saturates at N_th (m^-3 s^-1)."""
        return self.N_th / self.tau_s


@dataclass(frozen=True)
class DriveConfig:
    """Pump bias (in units of R_th) and RF tones ``(freq_hz, depth, phase_rad)``."""

    bias_ratio: float = 1.2
    tones: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not (math.isfinite(self.bias_ratio) and self.bias_ratio > 1):
            raise ConfigurationError(f"bias_ratio must be > 1, got {self.bias_ratio!r}")
        tones = tuple(_tone(t) for t in self.tones)
        object.__setattr__(self, "tones", tones)

    def with_tones(self, tones) -> "DriveConfig":
        return DriveConfig(self.bias_ratio, tuple(tones))

    @property
    def max_frequency(self) -> float:
        return max((t[0] for t in self.tones), default=0.0)


def _tone(t):
    if len(t) == 2:
        f, m = t
        phase = 0.0
    else:
        f, m, phase = t
    f, m, phase = float(f), float(m), float(phase)
    if not (math.isfinite(f) and f > 0):
        raise ConfigurationError(f"tone frequency must be > 0, got {f!r}")
    if not (0.0 <= m <= 1.0):
        raise ConfigurationError(f"modulation depth must lie in [0, 1], got {m!r}")
    if not math.isfinite(phase):
        raise ConfigurationError("tone phase must be finite")
    return (f, m, phase)


@dataclass(frozen=True)
class LaserState:
    field: complex
    carrier: float

    def __post_init__(self):
        object.__setattr__(self, "field", complex(self.field))
        object.__setattr__(self, "carrier", float(self.carrier))
        if not (np.isfinite(self.field) and math.isfinite(self.carrier)):
            raise ConfigurationError("laser state must be finite")
        if self.carrier < 0:
            raise ConfigurationError("carrier density must be >= 0")

    @property
    def photon_density(self) -> float:
        return abs(self.field) ** 2


class StateDerivative(NamedTuple):
    field: complex
    carrier: float


def pump_rate(drive: DriveConfig, params: LaserParams, t):
    """Pump rate R_p(t) in m^-3 s^-1. ``t`` may be a scalar or an array."""
    r_b = drive.bias_ratio * params.R_th
    if not drive.tones:
        return r_b + np.zeros_like(t, dtype=float) if np.ndim(t) else r_b
    swing = r_b - params.R_th
    total = 0.0
    for f, m, phase in drive.tones:
        total = total + m * swing * np.sin(2 * np.pi * f * t + phase)
    return r_b + total


def steady_state(params: LaserParams, bias_ratio: float) -> tuple[float, float]:
    """Free-running fixed point ``(N_th, S0)`` with ``S0 = tau_p*(R_b - N_th/tau_s)``.

    Raises
    ------
    BelowThreshold
        If ``R_b <= N_th / tau_s``.
    """
    r_b = bias_ratio * params.R_th
    excess = r_b - params.lasing_threshold
    if not excess > 0:
        raise BelowThreshold(
            f"R_b = {r_b:.6g} does not exceed N_th/tau_s = {params.lasing_threshold:.6g}"
        )
    return params.N_th, params.tau_p * excess


def relaxation_frequency(params: LaserParams, bias_ratio: float) -> float:
    """Small-signal resonance ``sqrt(G_N*S0/tau_p) / (2*pi)`` in Hz."""
    _, s0 = steady_state(params, bias_ratio)
    return math.sqrt(params.G_N * s0 / params.tau_p) / (2 * math.pi)


def injection_scale(params: LaserParams, bias_ratio: float) -> float:
    """Prefactor ``kappa * E0`` multiplying the relative line amplitudes."""
    _, s0 = steady_state(params, bias_ratio)
    return params.kappa * math.sqrt(s0)


def derivative(state: LaserState, params: LaserParams, comb, drive: DriveConfig, t: float):
    """Right-hand side of the rate equations at time ``t``."""
    E = state.field
    N = state.carrier
    gain = params.G_N * (N - params.N_th)
    injection = 0j
    if comb is not None and len(comb.lines):
        scale = injection_scale(params, drive.bias_ratio)
        for offset, amp, phase in comb.lines:
            injection += scale * amp * np.exp(1j * (2 * np.pi * offset * t + phase))
    dE = 0.5 * (1 + 1j * params.alpha) * gain * E + injection
    dN = (
        pump_rate(drive, params, t)
        - N / params.tau_s
        - (1 / params.tau_p + gain) * (E.real**2 + E.imag**2)
    )
    return StateDerivative(complex(dE), float(dN))
