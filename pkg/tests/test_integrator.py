import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from pnpsim.combgen import uniform_comb
from pnpsim.errors import ConfigurationError, NumericalBlowup, NyquistViolation
from pnpsim.integrator import SimGrid, default_grid, integrate
from pnpsim.model import DriveConfig, LaserState, derivative, steady_state


def reference_solution(params, comb, drive, initial, times):
    """Adaptive high-order solution of the same equations through the Python derivative."""

    def rhs(t, y):
        d = derivative(LaserState(y[0] + 1j * y[1], y[2]), params, comb, drive, t)
        return [d.field.real, d.field.imag, d.carrier]

    y0 = [initial.field.real, initial.field.imag, initial.carrier]
    sol = solve_ivp(rhs, (0.0, times[-1]), y0, method="DOP853", t_eval=times,
                    rtol=1e-11, atol=1e-30 + 1e-12 * abs(initial.field))
    return sol.y[0] + 1j * sol.y[1]


def perturbed(params, bias=1.2):
    n, s = steady_state(params, bias)
    return LaserState(1.1 * math.sqrt(s), 1.001 * n)


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        SimGrid(0.0, 0.0, 1e-9)
    with pytest.raises(ConfigurationError):
        SimGrid(1e-12, 0.0, 1.5e-12)
    with pytest.raises(ConfigurationError):
        SimGrid(1e-12, 0.0, 1e-9, record_stride=0)


def test_halved_grid_keeps_sample_instants():
    g = SimGrid(4e-12, 2e-9, 1e-9, 4)
    h = g.halved()
    assert h.dt == 2e-12 and h.record_stride == 8
    assert h.n_samples == g.n_samples and h.sample_interval == g.sample_interval


def test_default_grid_properties(params):
    comb = uniform_comb(0.1e9, 2e9, 3, 0.3)
    drive = DriveConfig(1.2, ((4e9, 0.05, 0.0),))
    g = default_grid(comb, drive, 2.5e6, params)
    f_max = 4e9
    assert g.dt * f_max <= 1 / 40
    assert 1 / g.sample_interval >= 4 * f_max * (1 - 1e-12)
    assert 1 / (g.n_samples * g.sample_interval) <= 2.5e6 * (1 + 1e-12)
    assert g.t_transient >= 200e-9


def test_matches_adaptive_reference(params):
    comb = uniform_comb(0.1e9, 2e9, 3, 0.3)
    drive = DriveConfig(1.2, ((3.0e9, 0.05, 0.3),))
    init = perturbed(params)
    grid = SimGrid(1e-9 / 2048, 0.0, 2e-9, 64)
    rec = integrate(params, comb, drive, grid, initial=init)
    ref = reference_solution(params, comb, drive, init, rec.times)
    err = np.max(np.abs(rec.samples - ref)) / np.max(np.abs(ref))
    assert err < 2e-8


def test_fourth_order_convergence(params):
    comb = uniform_comb(0.1e9, 2e9, 3, 0.3)
    drive = DriveConfig(1.2, ((3.0e9, 0.05, 0.0),))
    init = perturbed(params)
    errors = []
    fine = integrate(params, comb, drive, SimGrid(1e-9 / 2048, 0.0, 1e-9, 256), initial=init).samples
    for dt, stride in [(1e-9 / 64, 8), (1e-9 / 128, 16)]:
        rec = integrate(params, comb, drive, SimGrid(dt, 0.0, 1e-9, stride), initial=init)
        errors.append(np.max(np.abs(rec.samples - fine)))
    ratio = errors[0] / errors[1]
    assert 12 < ratio < 20


def test_first_sample_is_initial_state_without_warmup(params):
    init = perturbed(params)
    rec = integrate(params, None, DriveConfig(1.2), SimGrid(1e-12, 0.0, 1e-10, 10),
                    initial=init, store_carrier=True)
    assert rec.samples[0] == init.field
    assert rec.carrier_trace[0] == init.carrier
    assert rec.start_time == 0.0
    assert len(rec) == 10


def test_record_starts_after_warmup(params):
    rec = integrate(params, None, DriveConfig(1.2), SimGrid(1e-12, 5e-10, 1e-10, 10))
    assert rec.start_time == pytest.approx(5e-10)
    assert rec.times[1] - rec.times[0] == pytest.approx(1e-11)
    assert rec.carrier_trace is None


def test_free_running_stays_at_fixed_point(params):
    n, s = steady_state(params, 4.0)
    rec = integrate(params, None, DriveConfig(4.0), SimGrid(1e-12, 1e-9, 1e-9, 10))
    assert np.allclose(rec.photon_density, s, rtol=1e-12)


def test_nyquist_guard(params):
    comb = uniform_comb(0.0, 1e9, 3, 0.1)
    with pytest.raises(NyquistViolation):
        integrate(params, comb, DriveConfig(1.2), SimGrid(1e-10, 0.0, 1e-8))
    with pytest.raises(NyquistViolation):
        integrate(params, None, DriveConfig(1.2, ((1e9, 0.1),)), SimGrid(1e-10, 0.0, 1e-8))


def test_blowup_is_reported(params):
    n, s = steady_state(params, 1.2)
    with pytest.raises(NumericalBlowup):
        integrate(params, None, DriveConfig(1.2), SimGrid(1e-12, 0.0, 1e-10),
                  initial=LaserState(1e4 * math.sqrt(s), n))


def test_records_are_read_only(params):
    rec = integrate(params, None, DriveConfig(1.2), SimGrid(1e-12, 0.0, 1e-10, 10))
    with pytest.raises(ValueError):
        rec.samples[0] = 0
