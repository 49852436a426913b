import pytest

from pnpsim.config import (
    PRESETS,
    Experiment,
    parse_config,
    parse_si,
    preset,
    serialize_config,
)
from pnpsim.errors import ParseError, SchemaError, UnitError
from pnpsim.model import LaserParams


def test_minimal_config_is_fully_defaulted():
    cfg = parse_config('experiment = "SteadyState"\n[drive]\nbias_ratio = 1.2\n')
    assert cfg.experiment is Experiment.STEADY_STATE
    assert cfg.laser == LaserParams()
    assert cfg.seed == 0


@pytest.mark.parametrize("name", ["steady-state", "SteadyState", "BeatReadout", "beat_readout"])
def test_experiment_names(name):
    assert parse_config(f'experiment = "{name}"').experiment.value in ("steady-state", "beat-readout")


def test_unknown_key_is_named():
    with pytest.raises(SchemaError) as err:
        parse_config("[laser]\ntau_ss = 2e-9\n")
    assert err.value.key == "tau_ss"
    with pytest.raises(SchemaError) as err:
        parse_config("colour = 1\n")
    assert err.value.key == "colour"


def test_depth_above_one_is_a_unit_error():
    with pytest.raises(UnitError):
        parse_config("[sweep]\nm = 1.5\n")
    with pytest.raises(UnitError):
        parse_config("[drive]\ntones = [[2e9, 1.5, 0.0]]\n")
    with pytest.raises(UnitError):
        parse_config("[drive]\nbias_ratio = 0.5\n")


def test_parse_error_has_position():
    with pytest.raises(ParseError) as err:
        parse_config("seed = 1\n[drive\n")
    assert err.value.line == 2


@pytest.mark.parametrize("text, unit, value", [
    ("2.01GHz", "Hz", 2.01e9),
    ("150 MHz", "Hz", 150e6),
    ("500M", "Hz", 500e6),
    ("200ns", "s", 200e-9),
    (3.5e9, "Hz", 3.5e9),
])
def test_si_suffixes(text, unit, value):
    assert parse_si(text, unit) == value


@pytest.mark.parametrize("text", ["2 GHzz", "fast", "3 s"])
def test_bad_units(text):
    with pytest.raises(UnitError):
        parse_si(text, "Hz")


def test_units_in_sections():
    cfg = parse_config('[comb]\nf_detu = "2.01GHz"\nlines = [["1GHz", 0.1], [2e9, 0.2, 0.5]]\n')
    assert cfg.comb.f_detu == 2.01e9
    assert cfg.comb.lines == ((1e9, 0.1, 0.0), (2e9, 0.2, 0.5))


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_round_trip(name):
    cfg = preset(name)
    assert parse_config(serialize_config(cfg)) == cfg


def test_custom_config_round_trips():
    text = """
experiment = "classify"
seed = 12345
[comb]
kind = "lines"
lines = [[1e9, 0.1, 0.0], [2e9, 0.2, 1.0]]
[classify]
scenario = "custom"
n_bands = 2
f_lo = "1GHz"
f_hi = "3GHz"
labels = ["x", "y"]
patterns = [[1, 0], [0, 1]]
[grid]
dt = "1ps"
t_transient = "1ns"
t_record = "10ns"
record_stride = 4
"""
    cfg = parse_config(text)
    assert parse_config(serialize_config(cfg)) == cfg
    assert cfg.grid.explicit


def test_preset_with_overrides():
    cfg = parse_config('preset = "appendixB-b"\n[sweep]\nm = 0.2\n')
    assert cfg.sweep.m == 0.2
    assert cfg.drive.bias_ratio == 4.0
    assert cfg.comb.placement == "edge"
    with pytest.raises(SchemaError):
        parse_config('preset = "no-such"\n')


def test_preset_parameter_sets():
    a, b, c = preset("appendixB-a"), preset("appendixB-b"), preset("appendixB-c")
    assert (a.drive.bias_ratio, a.sweep.m, a.comb.amplitude, a.comb.f_detu) == (1.2, 0.05, 0.3, 100e6)
    assert (b.drive.bias_ratio, b.sweep.m, b.comb.amplitude, b.comb.f_detu) == (4.0, 0.1, 0.1, 2.01e9)
    assert c.sweep.m == 0.3 and c.comb == b.comb
    assert a.comb.count == 3 and a.comb.spacing == 2e9 and a.sweep.f_step == 50e6
    ac = preset("appendixC")
    assert (ac.comb.count, ac.comb.spacing, ac.comb.f_detu) == (15, 150e6, 2.01e9)
    assert (ac.classify.jitter_ratio, ac.classify.n_trials) == (0.01, 10)
