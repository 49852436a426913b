"""Experiment configuration: strict TOML schema, SI-suffix units and presets.

A config file has top-level ``experiment``, ``seed`` and optional
``preset`` keys plus the sections ``[laser]``, ``[drive]``, ``[comb]``,
``[grid]``, ``[spectrum]``, ``[sweep]``, ``[classify]``, ``[calibrate]``,
``[beat]`` and ``[simulate]``. Unknown keys are errors. Frequencies and
times accept plain numbers (Hz, s) or strings such as ``"2.01GHz"`` and
``"200ns"``.
"""

from __future__ import annotations

import dataclasses
import re
import sys
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .combgen import CombSpec, pm_comb, uniform_comb
from .errors import ConfigurationError, ParseError, SchemaError, UnitError
from .integrator import SimGrid, default_grid
from .measure import LineReadout
from .model import DriveConfig, LaserParams
from .population import PatternSet, fifteen_band_patterns, dual_tone_patterns, make_bands
from .spectrum import WindowKind

__all__ = [
    "Experiment",
    "CombRecipe",
    "GridConfig",
    "SpectrumConfig",
    "SweepConfig",
    "ClassifyConfig",
    "CalibrateConfig",
    "BeatConfig",
    "SimulateConfig",
    "ExperimentConfig",
    "PRESETS",
    "parse_si",
    "parse_config",
    "load_config",
    "serialize_config",
    "config_to_dict",
    "preset",
]


class Experiment(str, Enum):
    STEADY_STATE = "steady-state"
    SIMULATE = "simulate"
    SWEEP = "sweep"
    CLASSIFY = "classify"
    CALIBRATE = "calibrate"
    BEAT_READOUT = "beat-readout"

    @classmethod
    def parse(cls, value) -> "Experiment":
        if isinstance(value, cls):
            return value
        text = str(value)
        # Accept CamelCase names such as "SteadyState" and "BeatReadout".
        kebab = re.sub(r"(?<=[a-z])(?=[A-Z])", "-", text).lower().replace("_", "-")
        try:
            return cls(kebab)
        except ValueError:
            raise SchemaError(f"unknown experiment {text!r}", "experiment") from None


# --- units ----------------------------------------------------------------------

_PREFIX = {"T": 12, "G": 9, "M": 6, "k": 3, "": 0, "m": -3, "u": -6, "µ": -6, "n": -9,
           "p": -12, "f": -15}
_SI = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([TGMkmuµnpf]?)(Hz|s)?\s*$")


def parse_si(value, unit="Hz", key=None) -> float:
    """``2.01e9``, ``"2.01GHz"`` or ``"2.01 G"`` to a float in base units."""
    if isinstance(value, bool):
        raise SchemaError(f"{key}: expected a number, got a boolean", key)
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise SchemaError(f"{key}: expected a number or unit string, got {value!r}", key)
    match = _SI.match(value)
    if not match or (match.group(3) and match.group(3) != unit):
        raise UnitError(f"{key}: cannot read {value!r} as a value in {unit}")
    number, prefix, _ = match.groups()
    if prefix == "m" and unit == "Hz" and not match.group(3):
        raise UnitError(f"{key}: ambiguous prefix in {value!r}; write mHz explicitly")
    # Decimal scaling so "2.01GHz" equals the literal 2.01e9 exactly.
    return float(Decimal(number).scaleb(_PREFIX[prefix]))


def _hz(**kw):
    return field(metadata={"unit": "Hz"}, **kw)


def _sec(**kw):
    return field(metadata={"unit": "s"}, **kw)


# --- sections ----------------------------------------------------------------------

@dataclass(frozen=True)
class CombRecipe:
    """How to build the injected comb: ``none``, ``uniform``, ``pm`` or ``lines``."""

    kind: str = "uniform"
    f_detu: float = _hz(default=0.1e9)
    spacing: float = _hz(default=2.0e9)
    count: int = 3
    amplitude: float = 0.3
    placement: str = "center"
    beta: float = 1.0
    n_sidebands: int = 2
    lines: tuple = ()

    def build(self) -> CombSpec | None:
        if self.kind == "none":
            return None
        if self.kind == "uniform":
            return uniform_comb(self.f_detu, self.spacing, self.count, self.amplitude, self.placement)
        if self.kind == "pm":
            comb = pm_comb(self.beta, self.spacing, self.n_sidebands, self.f_detu)
            return CombSpec([(f, a * self.amplitude, ph) for f, a, ph in comb.lines])
        return CombSpec(self.lines)


@dataclass(frozen=True)
class GridConfig:
    """Either a target frequency ``resolution`` or an explicit time grid."""

    resolution: float = _hz(default=5e6)
    dt: float | None = _sec(default=None)
    t_transient: float | None = _sec(default=None)
    t_record: float | None = _sec(default=None)
    record_stride: int | None = None

    @property
    def explicit(self) -> bool:
        return self.dt is not None

    def build(self, comb, drive, params) -> SimGrid:
        if self.explicit:
            return SimGrid(self.dt, self.t_transient, self.t_record, self.record_stride or 1)
        return default_grid(comb, drive, self.resolution, params)


@dataclass(frozen=True)
class SpectrumConfig:
    window: str = "hann"
    search_halfwidth: float | None = _hz(default=None)
    integrated: bool = False

    def readout(self) -> LineReadout:
        return LineReadout(WindowKind(self.window), self.search_halfwidth, self.integrated)


@dataclass(frozen=True)
class SweepConfig:
    m: float = 0.05
    f_start: float | None = _hz(default=None)
    f_stop: float | None = _hz(default=None)
    f_step: float = _hz(default=50e6)
    multiple: int = 1
    threshold_db: float = 1.0


@dataclass(frozen=True)
class ClassifyConfig:
    """Pattern task; ``scenario`` is ``appendixC``, ``dualtone`` or ``custom``."""

    scenario: str = "appendixC"
    f_lo: float = _hz(default=1.855e9)
    f_hi: float = _hz(default=4.105e9)
    n_bands: int = 15
    jitter_ratio: float = 0.01
    tone_depth: float = 0.1
    n_trials: int = 10
    pad: str = "trailing"
    sign: str = "auto"
    labels: tuple = ()
    patterns: tuple = ()

    def pattern_set(self, comb: CombSpec | None) -> PatternSet:
        if self.scenario == "appendixC":
            return fifteen_band_patterns(self.f_lo, self.f_hi, self.n_bands, self.jitter_ratio,
                                       self.tone_depth, self.pad)
        if self.scenario == "dualtone":
            spacing = comb.spacing if comb is not None and comb.spacing else 3e9
            return dual_tone_patterns(spacing, jitter_ratio=self.jitter_ratio,
                                      tone_depth=self.tone_depth)
        labels = self.labels or tuple(f"pattern{i + 1}" for i in range(len(self.patterns)))
        if len(labels) != len(self.patterns):
            raise SchemaError("classify.labels must match classify.patterns", "labels")
        edges = tuple(make_bands(self.f_lo, self.f_hi, self.n_bands))
        return PatternSet(edges, tuple(zip(labels, self.patterns)), self.jitter_ratio, self.tone_depth)


@dataclass(frozen=True)
class CalibrateConfig:
    detuning_start: float = _hz(default=50e6)
    detuning_stop: float = _hz(default=500e6)
    detuning_step: float = _hz(default=50e6)
    target_power_db: float | None = None


@dataclass(frozen=True)
class BeatConfig:
    """Dual-comb readout.

    The LO comb has one line ``f0`` below each injected line ``k`` plus
    ``k*delta_f``, i.e. lines at ``f_k - f0 - k*delta_f`` with ``k``
    counted from the state comb, so comb ``k`` appears at ``f0 + k*delta_f``.
    """

    f0: float = _hz(default=100e6)
    delta_f: float = _hz(default=11e6)
    lo_amplitude: float = 1.0
    h_max: int = 1
    pd_bandwidth: float = _hz(default=500e6)
    tone_frequencies: tuple = ()

    def lo_comb(self, comb: CombSpec) -> CombSpec:
        state = comb.state_index
        return CombSpec([
            (f - self.f0 - (k - state) * self.delta_f, self.lo_amplitude, 0.0)
            for k, f in enumerate(comb.offsets)
        ])


@dataclass(frozen=True)
class SimulateConfig:
    store_carrier: bool = True
    export_csv: bool = True


_SECTIONS = {
    "comb": CombRecipe,
    "grid": GridConfig,
    "spectrum": SpectrumConfig,
    "sweep": SweepConfig,
    "classify": ClassifyConfig,
    "calibrate": CalibrateConfig,
    "beat": BeatConfig,
    "simulate": SimulateConfig,
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment = Experiment.STEADY_STATE
    seed: int = 0
    preset: str | None = None
    laser: LaserParams = field(default_factory=LaserParams)
    drive: DriveConfig = field(default_factory=DriveConfig)
    comb: CombRecipe = field(default_factory=CombRecipe)
    grid: GridConfig = field(default_factory=GridConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    classify: ClassifyConfig = field(default_factory=ClassifyConfig)
    calibrate: CalibrateConfig = field(default_factory=CalibrateConfig)
    beat: BeatConfig = field(default_factory=BeatConfig)
    simulate: SimulateConfig = field(default_factory=SimulateConfig)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def build_comb(self) -> CombSpec | None:
        return self.comb.build()

    def readout(self) -> LineReadout:
        return self.spectrum.readout()


# --- value coercion ---------------------------------------------------------------

def _check_keys(data, allowed, section):
    if not isinstance(data, dict):
        raise SchemaError(f"[{section}] must be a table", section)
    for key in data:
        if key not in allowed:
            where = f"[{section}]" if section else "top level"
            raise SchemaError(f"unknown key {key!r} in {where}", key)


def _number(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{key}: expected a number, got {value!r}", key)
    return float(value)


def _integer(value, key):
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise SchemaError(f"{key}: expected an integer, got {value!r}", key)
    return value


def _coerce(f: dataclasses.Field, value, section):
    key = f.name
    unit = f.metadata.get("unit")
    if value is None:
        return None
    if unit:
        return parse_si(value, unit, key)
    default = f.default if f.default is not dataclasses.MISSING else None
    if key == "lines":
        return tuple(_triple(v, key, unit="Hz") for v in _array(value, key))
    if key == "tone_frequencies":
        return tuple(parse_si(v, "Hz", key) for v in _array(value, key))
    if key == "patterns":
        return tuple(tuple(_integer(b, key) for b in _array(row, key)) for row in _array(value, key))
    if key == "labels":
        return tuple(str(v) for v in _array(value, key))
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise SchemaError(f"{key}: expected true or false", key)
        return value
    if isinstance(default, int) or key in ("record_stride",):
        return _integer(value, key)
    if isinstance(default, float) or key == "target_power_db":
        return _number(value, key)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise SchemaError(f"{key}: expected a string", key)
        return value
    raise SchemaError(f"{key}: unsupported value {value!r}", key)


def _array(value, key):
    if not isinstance(value, (list, tuple)):
        raise SchemaError(f"{key}: expected an array", key)
    return value


def _triple(value, key, unit="Hz"):
    row = _array(value, key)
    if len(row) not in (2, 3):
        raise SchemaError(f"{key}: entries must be [frequency, amplitude(, phase)]", key)
    phase = _number(row[2], key) if len(row) == 3 else 0.0
    return (parse_si(row[0], unit, key), _number(row[1], key), phase)


def _section(cls, data, name):
    names = {f.name: f for f in dataclasses.fields(cls)}
    _check_keys(data, names, name)
    values = {k: _coerce(names[k], v, name) for k, v in data.items()}
    return cls(**values)


_LASER_KEYS = [f.name for f in dataclasses.fields(LaserParams)]
_DRIVE_KEYS = ("bias_ratio", "tones")


def _laser(data):
    _check_keys(data, _LASER_KEYS, "laser")
    return LaserParams(**{k: _number(v, k) for k, v in data.items()})


def _drive(data):
    _check_keys(data, _DRIVE_KEYS, "drive")
    bias = _number(data.get("bias_ratio", DriveConfig().bias_ratio), "bias_ratio")
    tones = tuple(_triple(t, "tones") for t in _array(data.get("tones", []), "tones"))
    for f, m, _ in tones:
        if not 0 <= m <= 1:
            raise UnitError(f"tones: modulation depth must lie in [0, 1], got {m!r}")
    return DriveConfig(bias, tones)


def _validate(cfg: ExperimentConfig):
    c = cfg.comb
    if c.kind not in ("none", "uniform", "pm", "lines"):
        raise SchemaError(f"comb.kind must be none, uniform, pm or lines, got {c.kind!r}", "kind")
    if c.placement not in ("center", "edge"):
        raise SchemaError(f"comb.placement must be center or edge, got {c.placement!r}", "placement")
    if c.amplitude < 0:
        raise UnitError("comb.amplitude must be >= 0")
    if c.kind == "lines" and not c.lines:
        raise SchemaError("comb.kind = 'lines' needs comb.lines", "lines")
    if not 0 <= cfg.sweep.m <= 1:
        raise UnitError(f"sweep.m must lie in [0, 1], got {cfg.sweep.m!r}")
    if not 0 <= cfg.classify.tone_depth <= 1:
        raise UnitError(f"classify.tone_depth must lie in [0, 1], got {cfg.classify.tone_depth!r}")
    if not 0 <= cfg.classify.jitter_ratio < 1:
        raise UnitError("classify.jitter_ratio must lie in [0, 1)")
    if cfg.classify.scenario not in ("appendixC", "dualtone", "custom"):
        raise SchemaError(f"unknown classify.scenario {cfg.classify.scenario!r}", "scenario")
    if cfg.classify.sign not in ("auto", "excitatory", "inhibitory"):
        raise SchemaError(f"classify.sign must be auto, excitatory or inhibitory", "sign")
    if cfg.classify.n_trials < 1:
        raise UnitError("classify.n_trials must be >= 1")
    if cfg.spectrum.window not in ("hann", "rectangular"):
        raise SchemaError(f"spectrum.window must be hann or rectangular", "window")
    g = cfg.grid
    if g.explicit and (g.t_transient is None or g.t_record is None):
        raise SchemaError("an explicit grid needs dt, t_transient and t_record", "dt")
    if not g.resolution > 0:
        raise UnitError("grid.resolution must be > 0")
    for name in ("f_step", "f_start", "f_stop"):
        value = getattr(cfg.sweep, name)
        if value is not None and not value > 0:
            raise UnitError(f"sweep.{name} must be > 0")
    if not cfg.calibrate.detuning_step > 0:
        raise UnitError("calibrate.detuning_step must be > 0")
    if not 0 <= cfg.seed < 2**63:
        raise UnitError("seed must be an integer in [0, 2**63)")
    # Building the comb surfaces invalid recipes before any computation.
    cfg.build_comb()
    if cfg.classify.scenario == "custom":
        cfg.classify.pattern_set(None)


# --- parse / serialize ----------------------------------------------------------

_TOP = ("experiment", "seed", "preset")


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    _check_keys(data, set(_TOP) | {"laser", "drive"} | set(_SECTIONS), "")
    name = data.get("preset")
    if name is not None:
        data = _deep_merge(config_to_dict(preset(name)), data)
    kwargs = {}
    if "experiment" in data:
        kwargs["experiment"] = Experiment.parse(data["experiment"])
    if "seed" in data:
        kwargs["seed"] = _integer(data["seed"], "seed")
    if data.get("preset") is not None:
        kwargs["preset"] = str(data["preset"])
    try:
        if "laser" in data:
            kwargs["laser"] = _laser(data["laser"])
        if "drive" in data:
            kwargs["drive"] = _drive(data["drive"])
        for name, cls in _SECTIONS.items():
            if name in data:
                kwargs[name] = _section(cls, data[name], name)
        cfg = ExperimentConfig(**kwargs)
        _validate(cfg)
    except (SchemaError, ParseError, UnitError):
        raise
    except ConfigurationError as exc:
        # Constructors reject out-of-range physics; report those as unit errors.
        raise UnitError(str(exc)) from exc
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    """Strictly parse TOML ``text`` into a fully defaulted config."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line, col = _position(exc)
        raise ParseError(str(exc), line, col) from None
    return config_from_dict(data)


def _position(exc):
    line = getattr(exc, "lineno", None)
    col = getattr(exc, "colno", None)
    if line is None:
        match = re.search(r"line (\d+), column (\d+)", str(exc))
        if match:
            line, col = int(match.group(1)), int(match.group(2))
    return line, col


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _plain(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Resolved config as TOML-ready nested dicts; ``None`` values are dropped."""
    out = {"experiment": cfg.experiment.value, "seed": cfg.seed}
    if cfg.preset is not None:
        out["preset"] = cfg.preset
    out["laser"] = {f.name: getattr(cfg.laser, f.name) for f in dataclasses.fields(LaserParams)}
    out["drive"] = {"bias_ratio": cfg.drive.bias_ratio, "tones": _plain(cfg.drive.tones)}
    for name in _SECTIONS:
        section = getattr(cfg, name)
        out[name] = {
            f.name: _plain(getattr(section, f.name))
            for f in dataclasses.fields(section)
            if getattr(section, f.name) is not None
        }
    return out


def serialize_config(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def _deep_merge(base, override):
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


# --- presets ---------------------------------------------------------------------

def _case_a(**overrides):
    base = dict(
        drive=DriveConfig(1.2),
        comb=CombRecipe("uniform", 0.1e9, 2.0e9, 3, 0.3, "center"),
        grid=GridConfig(resolution=2.5e6),
        spectrum=SpectrumConfig(search_halfwidth=5e6),
        sweep=SweepConfig(m=0.05, f_start=0.05e9, f_stop=4.0e9, f_step=50e6),
    )
    base.update(overrides)
    return base


def _case_b(m, **overrides):
    base = dict(
        drive=DriveConfig(4.0),
        comb=CombRecipe("uniform", 2.01e9, 2.0e9, 3, 0.1, "edge"),
        grid=GridConfig(resolution=2.5e6),
        spectrum=SpectrumConfig(search_halfwidth=5e6),
        sweep=SweepConfig(m=m, f_start=0.05e9, f_stop=4.0e9, f_step=50e6),
    )
    base.update(overrides)
    return base


def _build_presets():
    return {
        "appendixB-a": ExperimentConfig(Experiment.SWEEP, preset="appendixB-a", **_case_a()),
        "appendixB-b": ExperimentConfig(Experiment.SWEEP, preset="appendixB-b", **_case_b(0.1)),
        "appendixB-c": ExperimentConfig(Experiment.SWEEP, preset="appendixB-c", **_case_b(0.3)),
        "appendixC": ExperimentConfig(
            Experiment.CLASSIFY,
            preset="appendixC",
            drive=DriveConfig(4.0),
            comb=CombRecipe("uniform", 2.01e9, 150e6, 15, 0.1, "edge"),
            grid=GridConfig(resolution=1e6),
            spectrum=SpectrumConfig(search_halfwidth=2e6),
            classify=ClassifyConfig(),
        ),
        "fig4": ExperimentConfig(
            Experiment.SWEEP,
            preset="fig4",
            **_case_a(
                comb=CombRecipe("uniform", 0.1e9, 3.0e9, 3, 0.3, "center"),
                sweep=SweepConfig(m=0.05, f_step=50e6, multiple=1),
            ),
        ),
        "calibration": ExperimentConfig(
            Experiment.CALIBRATE,
            preset="calibration",
            **_case_a(calibrate=CalibrateConfig(50e6, 500e6, 50e6)),
        ),
        "dual-comb": ExperimentConfig(
            Experiment.BEAT_READOUT,
            preset="dual-comb",
            **_case_a(
                comb=CombRecipe("uniform", 0.1e9, 3.0e9, 3, 0.3, "center"),
                beat=BeatConfig(tone_frequencies=(1.0e9, 1.7e9, 2.3e9, 3.7e9, 4.3e9)),
            ),
        ),
        "dualtone": ExperimentConfig(
            Experiment.CLASSIFY,
            preset="dualtone",
            **_case_a(
                comb=CombRecipe("uniform", 0.1e9, 3.0e9, 3, 0.3, "center"),
                classify=ClassifyConfig(scenario="dualtone", n_trials=10),
            ),
        ),
    }


PRESETS = _build_presets()


def preset(name) -> ExperimentConfig:
    try:
        return PRESETS[str(name)]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise SchemaError(f"unknown preset {name!r}; known presets: {known}", "preset") from None
