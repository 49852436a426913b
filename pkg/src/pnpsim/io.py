"""Plot-ready CSV emission, JSON summaries and atomically promoted run directories.

CSV files are UTF-8 with a header row and floats written with 17
significant digits, so re-reading them reproduces the exact doubles.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np

from .calibration import CalibrationSweep
from .errors import ConfigurationError, KindMismatch
from .population import ClassificationResult
from .spectrum import SpectrumResult
from .sweep import TuningCurve

__all__ = [
    "PLOT_KINDS",
    "format_float",
    "write_csv",
    "emit_plot_data",
    "write_json",
    "sha256_file",
    "RunDirectory",
]

MANIFEST = "manifest.json"
LOG = "run.log"


def format_float(x) -> str:
    return format(float(x), ".17g")


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


# --- plot data ----------------------------------------------------------------

def _tuning_curve(curve: TuningCurve):
    header = ["input_frequency_hz"] + [f"comb_{k}_delta_db" for k in range(curve.n_combs)]
    rows = [[f] + list(curve.responses[:, i]) for i, f in enumerate(curve.input_frequencies)]
    return header, rows


def _activity(result):
    if isinstance(result, ClassificationResult):
        items = list(zip(result.labels, result.seeds, result.activities))
    else:
        items = [(label, seed, np.asarray(d, dtype=float)) for label, seed, d in result]
    n = len(items[0][2]) if items else 0
    header = ["label", "seed"] + [f"delta_{k + 1}_db" for k in range(n)]
    rows = [[label, int(seed)] + list(map(float, deltas)) for label, seed, deltas in items]
    return header, rows


def _spectrum(spec: SpectrumResult):
    header = ["frequency_hz", "psd", "psd_db"]
    db = spec.psd_db()
    return header, [[f, p, d] for f, p, d in zip(spec.bin_frequencies, spec.psd, db)]


def _calibration(sweep: CalibrationSweep):
    header = ["detuning_hz", "state_comb_power_db"]
    return header, [[d, p] for d, p in zip(sweep.detunings, sweep.state_power_db)]


PLOT_KINDS = {
    "tuning-curve": (TuningCurve, _tuning_curve),
    "activity": ((ClassificationResult, list, tuple), _activity),
    "spectrum": (SpectrumResult, _spectrum),
    "calibration": (CalibrationSweep, _calibration),
}


def emit_plot_data(result, kind, path) -> Path:
    """Write ``result`` as the plot-ready CSV for ``kind``.

    Kinds and columns:

    * ``tuning-curve``: ``input_frequency_hz, comb_<k>_delta_db ...``
    * ``activity``: ``label, seed, delta_<k>_db ...`` one row per trial
    * ``spectrum``: ``frequency_hz, psd, psd_db``
    * ``calibration``: ``detuning_hz, state_comb_power_db``
    """
    if kind not in PLOT_KINDS:
        raise ConfigurationError(f"unknown plot kind {kind!r}; known: {', '.join(PLOT_KINDS)}")
    types, builder = PLOT_KINDS[kind]
    if not isinstance(result, types):
        raise KindMismatch(f"a {type(result).__name__} cannot be emitted as {kind!r}")
    header, rows = builder(result)
    return write_csv(path, header, rows)


# --- json / digests ---------------------------------------------------------------

def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else None
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def write_json(path, data) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# --- run directory ------------------------------------------------------------------

class RunDirectory:
    """Stage files in a hidden sibling directory, then promote it in one rename.

    An existing target is only replaced if it is empty or holds a previous
    run (has a manifest); anything else is refused.
    """

    def __init__(self, target):
        self.target = Path(target).resolve()
        self.staging: Path | None = None
        self.data_files: list[str] = []

    def __enter__(self):
        if self.target.exists():
            if not self.target.is_dir():
                raise ConfigurationError(f"output path {self.target} is not a directory")
            if any(self.target.iterdir()) and not (self.target / MANIFEST).exists():
                raise ConfigurationError(f"output directory {self.target} is not empty")
        self.target.parent.mkdir(parents=True, exist_ok=True)
        self.staging = Path(tempfile.mkdtemp(prefix=f".{self.target.name}.", dir=self.target.parent))
        return self

    def path(self, name) -> Path:
        name = Path(name)
        if name.is_absolute() or ".." in name.parts:
            raise ConfigurationError(f"refusing to write outside the run directory: {name}")
        return self.staging / name

    def add_data(self, name) -> Path:
        """Path for a data file that will be digested in the manifest."""
        self.data_files.append(str(name))
        return self.path(name)

    def digests(self) -> dict:
        return {name: sha256_file(self.staging / name) for name in sorted(self.data_files)}

    def promote(self):
        old = None
        if self.target.exists():
            old = self.target.with_name(f".{self.target.name}.old-{os.getpid()}")
            os.replace(self.target, old)
        os.replace(self.staging, self.target)
        self.staging = None
        if old is not None:
            shutil.rmtree(old, ignore_errors=True)

    def __exit__(self, exc_type, exc, tb):
        if self.staging is not None:
            shutil.rmtree(self.staging, ignore_errors=True)
        return False
