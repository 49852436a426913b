import numpy as np
import pytest

from pnpsim.calibration import CalibrationSweep, calibration_sweep, detuning_grid, select_operating_point
from pnpsim.combgen import uniform_comb
from pnpsim.errors import ConfigurationError, TargetOutOfRange
from pnpsim.measure import LineReadout, measure_lines
from pnpsim.model import DriveConfig
from pnpsim.integrator import default_grid

READOUT = LineReadout(search_halfwidth=20e6)


def synthetic():
    return CalibrationSweep([300e6, 200e6, 100e6], [-10.0, -8.0, -6.0], 1)


def test_sweep_is_sorted():
    s = synthetic()
    assert s.detunings.tolist() == [100e6, 200e6, 300e6]
    assert s.state_power_db.tolist() == [-6.0, -8.0, -10.0]


def test_interpolated_operating_point():
    assert select_operating_point(synthetic(), -7.0) == pytest.approx(150e6)


def test_exact_operating_point():
    assert select_operating_point(synthetic(), -8.0) == 200e6


def test_tie_break_prefers_smaller_detuning():
    s = CalibrationSweep([100e6, 200e6, 300e6], [-6.0, -8.0, -6.0])
    assert select_operating_point(s, -7.0) == pytest.approx(150e6)
    assert select_operating_point(s, -6.0) == 100e6


def test_target_out_of_range():
    with pytest.raises(TargetOutOfRange):
        select_operating_point(synthetic(), 4.0)
    # Within the 3 dB margin: nearest point.
    assert select_operating_point(synthetic(), -5.0) == 100e6


def test_detuning_grid_order_does_not_matter():
    assert np.array_equal(detuning_grid((500e6, 50e6), 50e6), detuning_grid((50e6, 500e6), 50e6))
    with pytest.raises(ConfigurationError):
        detuning_grid((0, 1), 0)


def test_single_point_equals_direct_run(params):
    comb = uniform_comb(0.2e9, 2e9, 3, 0.3)
    s = calibration_sweep(params, comb, 1.2, (0.2e9, 0.2e9), 50e6, resolution=10e6, readout=READOUT)
    grid = default_grid(comb, DriveConfig(1.2), 10e6, params)
    direct = measure_lines(params, comb, DriveConfig(1.2), grid, comb.offsets, READOUT)
    assert len(s) == 1
    assert s.state_power_db[0] == direct[1]


def test_round_trip_select_after_sweep(params):
    comb = uniform_comb(0.1e9, 2e9, 3, 0.3)
    s = calibration_sweep(params, comb, 1.2, (100e6, 400e6), 100e6, resolution=10e6, readout=READOUT)
    for d, p in zip(s.detunings, s.state_power_db):
        assert abs(select_operating_point(s, p) - d) <= 100e6


def test_template_is_not_mutated(params):
    comb = uniform_comb(0.1e9, 2e9, 3, 0.3)
    before = comb.lines
    calibration_sweep(params, comb, 1.2, (300e6, 300e6), 50e6, resolution=10e6, readout=READOUT)
    assert comb.lines == before
