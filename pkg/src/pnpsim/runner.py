"""Experiment orchestration: config in, data files + summary + manifest out.

Every run directory holds the experiment's CSV files, ``summary.json``
(machine-readable results), ``config.toml`` (the resolved config),
``manifest.json`` (version, resolved config, seed, timestamps and sha256
digests of every data file) and ``run.log``.
"""

from __future__ import annotations

import logging
import math
import platform
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .calibration import calibration_sweep, select_operating_point
from .config import Experiment, ExperimentConfig, config_to_dict, serialize_config
from .errors import ConfigurationError
from .integrator import integrate
from .io import LOG, MANIFEST, RunDirectory, emit_plot_data, write_csv, write_json
from .model import DriveConfig, relaxation_frequency, steady_state
from .parallel import ordered_map, resolve_threads
from .population import Sign, run_classification
from .spectrum import beat_readout, comb_powers, power_spectrum
from .sweep import curve_metrics, default_scan_range, tuning_curve

__all__ = ["run", "EXPERIMENTS"]

log = logging.getLogger("pnpsim")


def _utc_now():
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def _require_comb(cfg):
    comb = cfg.build_comb()
    if comb is None or len(comb) == 0:
        raise ConfigurationError(f"experiment {cfg.experiment.value} needs an injected comb")
    return comb


def _grid(cfg, comb, drive):
    return cfg.grid.build(comb, drive, cfg.laser)


# --- experiments -------------------------------------------------------------------

def _steady_state(cfg: ExperimentConfig, out: RunDirectory, threads):
    p, bias = cfg.laser, cfg.drive.bias_ratio
    n_th, s0 = steady_state(p, bias)
    f_ro = relaxation_frequency(p, bias)
    rows = [
        ["bias_ratio", bias],
        ["pump_rate_m3_per_s", bias * p.R_th],
        ["lasing_threshold_m3_per_s", p.lasing_threshold],
        ["carrier_density_m3", n_th],
        ["photon_density_m3", s0],
        ["relaxation_frequency_hz", f_ro],
    ]
    write_csv(out.add_data("steady_state.csv"), ["quantity", "value"], rows)
    return {"bias_ratio": bias, "N_th": n_th, "S0": s0, "f_RO_hz": f_ro}


def _simulate(cfg: ExperimentConfig, out: RunDirectory, threads):
    comb = cfg.build_comb()
    drive = cfg.drive
    grid = _grid(cfg, comb, drive)
    record = integrate(cfg.laser, comb, drive, grid, store_carrier=cfg.simulate.store_carrier)
    log.info("integrated %d samples at %.6g s", len(record), record.sample_interval)
    _, s0 = steady_state(cfg.laser, drive.bias_ratio)
    if cfg.simulate.export_csv:
        header = ["time_s", "field_re", "field_im"]
        cols = [record.times, record.samples.real, record.samples.imag]
        if record.carrier_trace is not None:
            header.append("carrier_m3")
            cols.append(record.carrier_trace)
        write_csv(out.add_data("field.csv"), header, zip(*cols))
    spec = power_spectrum(record, cfg.readout().window)
    emit_plot_data(spec, "spectrum", out.add_data("spectrum.csv"))
    summary = {
        "n_samples": len(record),
        "sample_interval_s": record.sample_interval,
        "mean_photon_density_m3": float(record.photon_density.mean()),
        "mean_photon_density_rel_S0": float(record.photon_density.mean() / s0),
    }
    if comb is not None and len(comb):
        rd = cfg.readout()
        hw = rd.search_halfwidth if rd.search_halfwidth or len(comb) > 1 else 4 * spec.resolution
        powers = comb_powers(spec, comb.offsets, hw, rd.integrated, reference=s0)
        write_csv(out.add_data("lines.csv"), ["offset_hz", "power_db"], zip(comb.offsets, powers))
        summary["line_powers_db"] = powers.tolist()
    return summary


def _sweep(cfg: ExperimentConfig, out: RunDirectory, threads):
    comb = _require_comb(cfg)
    sw = cfg.sweep
    if sw.f_start is None or sw.f_stop is None:
        if comb.spacing is None:
            raise ConfigurationError("a single-line comb needs explicit sweep.f_start and f_stop")
        lo, hi = default_scan_range(comb.spacing, sw.multiple)
        f_start = sw.f_start if sw.f_start is not None else max(lo, sw.f_step)
        f_stop = sw.f_stop if sw.f_stop is not None else hi
    else:
        f_start, f_stop = sw.f_start, sw.f_stop
    drive = DriveConfig(cfg.drive.bias_ratio, ((f_stop, sw.m, 0.0),))
    grid = _grid(cfg, comb, drive)
    curve = tuning_curve(cfg.laser, comb, cfg.drive.bias_ratio, sw.m, f_start, f_stop, sw.f_step,
                         grid=grid, readout=cfg.readout(), threads=threads)
    emit_plot_data(curve, "tuning-curve", out.add_data("tuning_curve.csv"))
    state = comb.state_index
    combs = []
    for k in range(curve.n_combs):
        m = curve_metrics(curve, k, sw.threshold_db)
        combs.append({
            "offset_hz": float(comb.offsets[k]),
            "shape": m.shape.value,
            "amplitude_db": m.amplitude,
            "width_hz": m.width,
            "extremum_frequency_hz": m.extremum_frequency,
            "positive_peak_db": m.positive_peak,
            "negative_peak_db": m.negative_peak,
        })
    i_min = int(np.argmin(curve.responses[state]))
    sides = [k for k in range(curve.n_combs) if k != state]
    return {
        "n_points": len(curve),
        "m": sw.m,
        "state_comb_index": state,
        "shape": combs[state]["shape"],
        "combs": combs,
        "state_minimum_frequency_hz": float(curve.input_frequencies[i_min]),
        "side_sum_at_state_minimum_db": float(curve.responses[sides, i_min].sum()) if sides else 0.0,
    }


def _classify(cfg: ExperimentConfig, out: RunDirectory, threads):
    comb = _require_comb(cfg)
    pset = cfg.classify.pattern_set(comb)
    drive = DriveConfig(cfg.drive.bias_ratio, ((pset.band_edges[-1], pset.tone_depth, 0.0),))
    grid = _grid(cfg, comb, drive)
    sign = None if cfg.classify.sign == "auto" else Sign(cfg.classify.sign)
    result = run_classification(cfg.laser, comb, cfg.drive.bias_ratio, pset, cfg.classify.n_trials,
                                cfg.seed, grid=grid, readout=cfg.readout(), threads=threads,
                                sign=sign)
    emit_plot_data(result, "activity", out.add_data("activity.csv"))
    rows = []
    for i, label in enumerate(result.labels):
        bits = "".join(str(b) for b in result.decoded[i])
        target = "".join(str(b) for b in result.patterns[label])
        rows.append([label, result.seeds[i], target, bits, int(result.hamming[i]),
                     float(result.silhouettes[i])])
    write_csv(out.add_data("trials.csv"),
              ["label", "seed", "pattern", "decoded", "hamming", "silhouette"], rows)
    sil = result.silhouettes
    return {
        "scenario": cfg.classify.scenario,
        "n_trials_total": len(result.labels),
        "labels": list(result.patterns),
        "sign": result.sign.value,
        "loo_accuracy_nearest_centroid": result.loo_accuracy,
        "loo_accuracy_least_squares": result.loo_accuracy_lls,
        "silhouette_min": float(np.min(sil)),
        "silhouette_mean": float(np.mean(sil)),
        "n_nonpositive_silhouette": int(np.sum(sil <= 0)),
        "hamming_max": int(result.hamming.max()),
        "n_hamming_le_1": int(np.sum(result.hamming <= 1)),
        "baseline_powers_db": result.baseline_powers.tolist(),
        "config_digest": result.config_digest,
    }


def _calibrate(cfg: ExperimentConfig, out: RunDirectory, threads):
    comb = _require_comb(cfg)
    c = cfg.calibrate
    grid = None
    if cfg.grid.explicit:
        grid = cfg.grid.build(comb, DriveConfig(cfg.drive.bias_ratio), cfg.laser)
    sweep = calibration_sweep(cfg.laser, comb, cfg.drive.bias_ratio,
                              (c.detuning_start, c.detuning_stop), c.detuning_step, grid=grid,
                              resolution=cfg.grid.resolution, readout=cfg.readout(),
                              threads=threads)
    emit_plot_data(sweep, "calibration", out.add_data("calibration.csv"))
    violations = int(np.sum(np.diff(sweep.state_power_db) > 0))
    summary = {
        "n_points": len(sweep),
        "state_comb_index": sweep.state_index,
        "monotonic_violations": violations,
        "monotonic_ok": violations <= 1,
    }
    if c.target_power_db is not None:
        summary["target_power_db"] = c.target_power_db
        summary["operating_detuning_hz"] = select_operating_point(sweep, c.target_power_db)
    return summary


def _beat_readout(cfg: ExperimentConfig, out: RunDirectory, threads):
    comb = _require_comb(cfg)
    b = cfg.beat
    m = cfg.sweep.m
    lo = b.lo_comb(comb)
    state = comb.state_index
    h_max = max(state, len(comb) - 1 - state)
    tones = list(b.tone_frequencies)
    f_top = max(tones, default=0.0)
    drive = DriveConfig(cfg.drive.bias_ratio, ((f_top, m, 0.0),) if f_top else ())
    grid = _grid(cfg, _sizing_comb(comb, lo), drive)
    _, s0 = steady_state(cfg.laser, cfg.drive.bias_ratio)
    rd = cfg.readout()

    def measure(f):
        d = DriveConfig(cfg.drive.bias_ratio, ((f, m, 0.0),) if f else ())
        record = integrate(cfg.laser, comb, d, grid)
        optical = comb_powers(power_spectrum(record, rd.window), comb.offsets, rd.search_halfwidth,
                              rd.integrated, reference=s0)
        beat = beat_readout(record, lo, b.f0, b.delta_f, h_max, b.pd_bandwidth,
                            reference_amplitude=math.sqrt(s0), window_kind=rd.window)
        return optical, np.array([beat.power(k - state) for k in range(len(comb))])

    runs = ordered_map(measure, [0.0] + tones, threads)
    base_opt, base_beat = runs[0]
    rows, worst = [], 0.0
    for f, (opt, beat) in zip([0.0] + tones, runs):
        for k in range(len(comb)):
            h = k - state
            d_opt, d_beat = opt[k] - base_opt[k], beat[k] - base_beat[k]
            if f:
                worst = max(worst, abs(d_opt - d_beat))
            rows.append([f, k, h, b.f0 + h * b.delta_f, opt[k], beat[k], d_opt, d_beat])
    write_csv(out.add_data("beat.csv"),
              ["tone_frequency_hz", "comb_index", "harmonic", "beat_frequency_hz",
               "optical_power_db", "beat_power_db", "optical_delta_db", "beat_delta_db"], rows)
    return {
        "f0_hz": b.f0,
        "delta_f_hz": b.delta_f,
        "lo_spacing_hz": comb.spacing - b.delta_f if comb.spacing else None,
        "n_tones": len(tones),
        "max_abs_delta_difference_db": worst,
    }


def _sizing_comb(comb, lo):
    """Comb whose widest offset bounds both the injected and LO lines (grid sizing only)."""
    widest = max(comb.max_abs_offset, lo.max_abs_offset)
    return type(comb)([(widest, 0.0, 0.0)])


EXPERIMENTS = {
    Experiment.STEADY_STATE: _steady_state,
    Experiment.SIMULATE: _simulate,
    Experiment.SWEEP: _sweep,
    Experiment.CLASSIFY: _classify,
    Experiment.CALIBRATE: _calibrate,
    Experiment.BEAT_READOUT: _beat_readout,
}


def run(config: ExperimentConfig, output_dir, threads=None) -> dict:
    """Run ``config`` and promote its output directory; returns the manifest."""
    threads = resolve_threads(threads)
    started = _utc_now()
    t0 = time.perf_counter()
    with RunDirectory(output_dir) as out:
        handler = logging.FileHandler(out.path(LOG), encoding="utf-8")
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
        log.addHandler(handler)
        log.setLevel(logging.INFO)
        try:
            log.info("pnpsim %s: %s (seed %d, threads %d)", __version__,
                     config.experiment.value, config.seed, threads)
            summary = EXPERIMENTS[config.experiment](config, out, threads)
            summary = {"experiment": config.experiment.value, **summary}
            write_json(out.add_data("summary.json"), summary)
            with open(out.add_data("config.toml"), "w", encoding="utf-8") as fh:
                fh.write(serialize_config(config))
            log.info("finished in %.2f s", time.perf_counter() - t0)
        finally:
            log.removeHandler(handler)
            handler.close()
        manifest = {
            "artifact": "artifact",
            "version": __version__,
            "experiment": config.experiment.value,
            "seed": config.seed,
            "config": config_to_dict(config),
            "started_at": started,
            "finished_at": _utc_now(),
            "platform": {"python": platform.python_version(), "numpy": np.__version__},
            "files": out.digests(),
        }
        write_json(out.path(MANIFEST), manifest)
        out.promote()
    manifest["summary"] = summary
    return manifest
