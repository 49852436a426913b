"""Fixed-step RK4 integration of the rate equations.

Injection and pump forcing are tabulated on the half-step grid before the loop
(the RK4 stages need t, t+dt/2 and t+dt), so the compiled kernel only does
arithmetic on the state. Identical inputs give bit-identical records.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numba
import numpy as np

from .combgen import CombSpec
from .errors import ConfigurationError, NumericalBlowup, NyquistViolation
from .model import DriveConfig, LaserParams, LaserState, injection_scale, pump_rate, steady_state

__all__ = ["SimGrid", "FieldRecord", "integrate", "default_grid", "forcing_max_frequency"]

log = logging.getLogger(__name__)

NYQUIST_GUARD = 1.0 / 20.0
BLOWUP_FACTOR = 1e6


@dataclass(frozen=True)
class SimGrid:
    dt: float
    t_transient: float
    t_record: float
    record_stride: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError(f"dt must be > 0, got {self.dt!r}")
        if not (math.isfinite(self.t_transient) and self.t_transient >= 0):
            raise ConfigurationError("t_transient must be >= 0")
        if not (math.isfinite(self.t_record) and self.t_record > 0):
            raise ConfigurationError("t_record must be > 0")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ConfigurationError("record_stride must be an integer >= 1")
        object.__setattr__(self, "record_stride", int(self.record_stride))
        steps = self.t_record / self.dt
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise ConfigurationError("t_record must be an integer number of steps dt")
        steps = self.t_transient / self.dt
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise ConfigurationError("t_transient must be an integer number of steps dt")

    @property
    def sample_interval(self) -> float:
        return self.dt * self.record_stride

    @property
    def n_transient_steps(self) -> int:
        return int(round(self.t_transient / self.dt))

    @property
    def n_samples(self) -> int:
        steps = int(round(self.t_record / self.dt))
        return steps // self.record_stride

    @property
    def n_steps(self) -> int:
        """Steps integrated in total (the last sample lands on the last step)."""
        return self.n_transient_steps + (self.n_samples - 1) * self.record_stride

    def halved(self) -> "SimGrid":
        """Same time window and sample instants with half the step size."""
        return SimGrid(self.dt / 2, self.t_transient, self.t_record, self.record_stride * 2)


@dataclass(frozen=True, eq=False)
class FieldRecord:
    """Uniformly sampled complex field (units: sqrt(m^-3))."""

    samples: np.ndarray
    sample_interval: float
    start_time: float = 0.0
    carrier_trace: np.ndarray | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.ndim != 1:
            raise ConfigurationError("samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise ConfigurationError("field samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        if self.carrier_trace is not None:
            carrier = np.asarray(self.carrier_trace, dtype=float)
            if carrier.shape != samples.shape:
                raise ConfigurationError("carrier trace must match the field samples")
            carrier.setflags(write=False)
            object.__setattr__(self, "carrier_trace", carrier)

    def __len__(self):
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.start_time + self.sample_interval * np.arange(self.samples.size)

    @property
    def duration(self) -> float:
        return self.samples.size * self.sample_interval

    @property
    def photon_density(self) -> np.ndarray:
        return self.samples.real**2 + self.samples.imag**2


def forcing_max_frequency(comb: CombSpec | None, drive: DriveConfig) -> float:
    comb_max = comb.max_abs_offset if comb is not None else 0.0
    return max(comb_max, drive.max_frequency)


def default_grid(comb, drive, freq_resolution, params: LaserParams | None = None) -> SimGrid:
    """Grid resolving the run's fastest forcing with ``freq_resolution`` bins.

    The step is ``1/(40*f_max)`` rounded down to ``1 ns / 2**n``, samples are
    kept at a rate of at least ``4*f_max``, and the warm-up is at least
    200 ns and 100 carrier lifetimes.
    """
    if not freq_resolution > 0:
        raise ConfigurationError("freq_resolution must be > 0")
    params = params or LaserParams()
    # Floor keeps the step short enough for the relaxation dynamics of unforced runs.
    f_max = max(forcing_max_frequency(comb, drive), 1e9)
    n = max(0, math.ceil(math.log2(40.0 * f_max * 1e-9) - 1e-12))
    dt = 1e-9 / 2**n
    stride = max(1, int(math.floor(1.0 / (4.0 * f_max * dt) + 1e-9)))
    interval = dt * stride
    n_samples = max(1, math.ceil((1.0 / freq_resolution) / interval - 1e-9))
    t_transient_target = max(200e-9, 100 * params.tau_s)
    n_transient = math.ceil(t_transient_target / dt - 1e-9)
    return SimGrid(dt, n_transient * dt, n_samples * interval, stride)


@numba.njit(cache=True, nogil=True)
def _rk4_kernel(E, N, inj, pump, dt, n_skip, n_samples, stride,
                G, N_th, tau_s, tau_p, alpha, s_limit, n_limit, out, carrier):
    c = 0.5 * (1.0 + 1j * alpha)
    inv_ts = 1.0 / tau_s
    inv_tp = 1.0 / tau_p
    half = 0.5 * dt
    sixth = dt / 6.0
    j = 0
    if n_skip == 0:
        out[0] = E
        carrier[0] = N
        j = 1
    n_steps = n_skip + (n_samples - 1) * stride
    for n in range(n_steps):
        i0 = 2 * n
        a0 = inj[i0]
        a1 = inj[i0 + 1]
        a2 = inj[i0 + 2]
        p0 = pump[i0]
        p1 = pump[i0 + 1]
        p2 = pump[i0 + 2]

        g = G * (N - N_th)
        k1e = c * g * E + a0
        k1n = p0 - N * inv_ts - (inv_tp + g) * (E.real * E.real + E.imag * E.imag)
        E2 = E + half * k1e
        N2 = N + half * k1n

        g = G * (N2 - N_th)
        k2e = c * g * E2 + a1
        k2n = p1 - N2 * inv_ts - (inv_tp + g) * (E2.real * E2.real + E2.imag * E2.imag)
        E3 = E + half * k2e
        N3 = N + half * k2n

        g = G * (N3 - N_th)
        k3e = c * g * E3 + a1
        k3n = p1 - N3 * inv_ts - (inv_tp + g) * (E3.real * E3.real + E3.imag * E3.imag)
        E4 = E + dt * k3e
        N4 = N + dt * k3n

        g = G * (N4 - N_th)
        k4e = c * g * E4 + a2
        k4n = p2 - N4 * inv_ts - (inv_tp + g) * (E4.real * E4.real + E4.imag * E4.imag)

        E = E + sixth * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
        N = N + sixth * (k1n + 2.0 * k2n + 2.0 * k3n + k4n)

        s = E.real * E.real + E.imag * E.imag
        if not (s <= s_limit and abs(N) <= n_limit):
            return n + 1
        done = n + 1 - n_skip
        if done >= 0 and done % stride == 0:
            out[j] = E
            carrier[j] = N
            j += 1
    return 0


def _forcing(params, comb, drive, dt, n_steps):
    t = np.arange(2 * n_steps + 1) * (0.5 * dt)
    inj = np.zeros(t.size, dtype=complex)
    if comb is not None and len(comb):
        scale = injection_scale(params, drive.bias_ratio)
        for offset, amp, phase in comb.lines:
            if amp:
                inj += (scale * amp) * np.exp(1j * (2 * np.pi * offset * t + phase))
    pump = np.asarray(pump_rate(drive, params, t), dtype=float)
    if pump.ndim == 0:
        pump = np.full(t.size, float(pump))
    return inj, pump


def integrate(params: LaserParams, comb: CombSpec | None, drive: DriveConfig, grid: SimGrid,
              initial: LaserState | None = None, store_carrier: bool = False) -> FieldRecord:
    """Integrate from ``initial`` and return the samples after the warm-up.

    The first sample is the state at ``t = grid.t_transient``; time zero is the
    start of integration, which is also the phase reference of comb lines and
    RF tones. ``initial`` defaults to the free-running steady state.

    Raises
    ------
    NyquistViolation
        If ``dt * f_max > 1/20`` for the fastest comb offset or tone.
    NumericalBlowup
        If ``|E|^2`` or ``N`` exceed 1e6 times their steady values or become
        non-finite.
    """
    f_max = forcing_max_frequency(comb, drive)
    if grid.dt * f_max > NYQUIST_GUARD:
        raise NyquistViolation(
            f"dt*f_max = {grid.dt * f_max:.4g} exceeds {NYQUIST_GUARD} (f_max = {f_max:.6g} Hz)"
        )
    n_th, s0 = steady_state(params, drive.bias_ratio)
    if initial is None:
        initial = LaserState(math.sqrt(s0), n_th)
    n_samples = grid.n_samples
    if n_samples < 1:
        raise ConfigurationError("grid records no samples")
    n_steps = grid.n_steps
    inj, pump = _forcing(params, comb, drive, grid.dt, n_steps)
    out = np.empty(n_samples, dtype=np.complex128)
    carrier = np.empty(n_samples, dtype=np.float64)
    status = _rk4_kernel(
        complex(initial.field), float(initial.carrier), inj, pump, float(grid.dt),
        grid.n_transient_steps, n_samples, grid.record_stride,
        params.G_N, params.N_th, params.tau_s, params.tau_p, params.alpha,
        BLOWUP_FACTOR * s0, BLOWUP_FACTOR * n_th, out, carrier,
    )
    if status:
        raise NumericalBlowup(
            f"state left the physical range at t = {status * grid.dt:.6g} s "
            f"(dt = {grid.dt:.4g} s); reduce dt or check parameters"
        )
    return FieldRecord(
        samples=out,
        sample_interval=grid.sample_interval,
        start_time=grid.n_transient_steps * grid.dt,
        carrier_trace=carrier if store_carrier else None,
    )
