"""Comb-injected semiconductor laser simulator used as a photonic neural population."""

from importlib.metadata import PackageNotFoundError, version as _version

from .calibration import CalibrationSweep, calibration_sweep, select_operating_point
from .combgen import CombSpec, merge_combs, pm_comb, shift_comb, uniform_comb
from .errors import ConfigurationError, NumericalError, PNPError
from .integrator import FieldRecord, SimGrid, default_grid, integrate
from .measure import LineReadout, measure_lines
from .model import (
    DriveConfig,
    LaserParams,
    LaserState,
    derivative,
    injection_scale,
    pump_rate,
    relaxation_frequency,
    steady_state,
)
from .population import (
    ActivityVector,
    PatternSet,
    PopulationEncoder,
    PopulationReadout,
    activity_vector,
    binary_decode,
    classify,
    make_bands,
    pattern_tones,
    run_classification,
    train_readout,
)
from .spectrum import SpectrumResult, WindowKind, beat_readout, comb_powers, power_spectrum
from .sweep import Shape, TuningCurve, classify_shape, curve_metrics, modulation_response, tuning_curve

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.1.0"
