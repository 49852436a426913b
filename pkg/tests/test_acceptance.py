"""Acceptance gate: one test per criterion, each at its stated tolerance."""

import dataclasses
import math
import time

import numpy as np
import pytest

from conftest import record
from pnpsim.combgen import pm_comb
from pnpsim.config import preset
from pnpsim.integrator import FieldRecord, SimGrid, integrate
from pnpsim.measure import measure_lines
from pnpsim.model import DriveConfig, LaserState, relaxation_frequency, steady_state
from pnpsim.runner import run
from pnpsim.spectrum import WindowKind, comb_powers, power_spectrum
from pnpsim.sweep import modulation_response


@pytest.fixture(scope="session")
def runs(tmp_path_factory):
    """Preset runs shared between criteria; each is executed once per session."""
    root = tmp_path_factory.mktemp("acceptance")
    cache = {}

    def get(name, threads=1, repeat=0, m=None):
        key = (name, threads, repeat, m)
        if key not in cache:
            cfg = preset(name)
            if m is not None:
                cfg = cfg.replace(sweep=dataclasses.replace(cfg.sweep, m=m))
            out = root / f"{name}-t{threads}-{len(cache)}"
            t0 = time.perf_counter()
            manifest = run(cfg, out, threads=threads)
            cache[key] = (manifest, out, time.perf_counter() - t0)
        return cache[key]

    return get


def test_a1_steady_state_oracle(params):
    n_th, s0 = steady_state(params, 1.2)
    start = LaserState(1.2 * math.sqrt(s0), 0.99 * n_th)
    grid = SimGrid(1e-9 / 64, 200e-9, 1e-9 / 64, 1)
    integrate(params, None, DriveConfig(1.2), SimGrid(1e-12, 0.0, 1e-12))  # load the kernel
    t0 = time.perf_counter()
    rec = integrate(params, None, DriveConfig(1.2), grid, initial=start)
    elapsed = time.perf_counter() - t0
    err = abs(rec.photon_density[-1] / 1.40076e21 - 1)
    ok = err < 0.005 and elapsed < 1.0
    record("A1", ok, f"|E|^2 rel. error {err:.2e} (< 5e-3) after 200 ns, {elapsed:.3f} s (< 1 s)")
    assert ok


@pytest.mark.parametrize("bias, f_lo, f_hi, step", [(1.2, 0.5e9, 8e9, 0.1e9), (4.0, 2e9, 20e9, 0.25e9)])
def test_a2_relaxation_resonance(params, bias, f_lo, f_hi, step):
    f_ro = relaxation_frequency(params, bias)
    t0 = time.perf_counter()
    resp = modulation_response(params, bias, 0.01, np.arange(f_lo, f_hi + step / 2, step))
    elapsed = time.perf_counter() - t0
    dev = abs(resp.peak_frequency / f_ro - 1)
    ok = dev < 0.15 and elapsed < 60
    detail = (f"bias {bias}: peak {resp.peak_frequency / 1e9:.3f} GHz vs f_RO {f_ro / 1e9:.3f} GHz "
              f"({dev:.1%} < 15%), {elapsed:.1f} s")
    record("A2", ok, detail)
    assert ok


def test_a3_integrator_convergence(params):
    cfg = preset("appendixB-a")
    comb = cfg.build_comb()
    rd = cfg.readout()
    grid = cfg.grid.build(comb, DriveConfig(1.2, ((cfg.sweep.f_stop, cfg.sweep.m, 0.0),)), params)
    t0 = time.perf_counter()
    worst = 0.0
    for f in (None, 1.0e9, 2.0e9, 3.0e9, 3.65e9):
        drive = DriveConfig(1.2, ((f, cfg.sweep.m, 0.0),) if f else ())
        coarse = measure_lines(params, comb, drive, grid, comb.offsets, rd)
        fine = measure_lines(params, comb, drive, grid.halved(), comb.offsets, rd)
        worst = max(worst, float(np.max(np.abs(coarse - fine))))
    elapsed = time.perf_counter() - t0
    ok = worst < 0.1 and elapsed < 120
    record("A3", ok, f"max comb-power change on halving dt {worst:.2e} dB (< 0.1), {elapsed:.1f} s")
    assert ok


def test_a4_tuning_curve_shapes(runs):
    a, _, ta = runs("appendixB-a")
    b, _, tb = runs("appendixB-b")
    peaks, elapsed = [], ta + tb
    for m in (0.1, 0.2, 0.3):
        # m = 0.1 is the preset itself, already run above.
        man, _, t = runs("appendixB-b", m=None if m == 0.1 else m)
        elapsed += t if m != 0.1 else 0.0
        s = man["summary"]
        peaks.append(s["combs"][s["state_comb_index"]]["positive_peak_db"])
    shape_a, shape_b = a["summary"]["shape"], b["summary"]["shape"]
    mono = all(x <= y for x, y in zip(peaks, peaks[1:]))
    ok = shape_a == "InverseBell" and shape_b == "DualPeak" and mono and elapsed < 600
    record("A4", ok, f"case a {shape_a}, case b {shape_b}, positive peaks at m=0.1/0.2/0.3 "
                     f"{', '.join(f'{p:.2f}' for p in peaks)} dB, {a['summary']['n_points']} points, "
                     f"{elapsed:.1f} s")
    assert ok


def test_a5_gain_competition(runs):
    a, _, _ = runs("appendixB-a")
    s = a["summary"]
    side = s["side_sum_at_state_minimum_db"]
    ok = side > 0
    record("A5", ok, f"side-comb sum {side:+.3f} dB (> 0) at the central-comb minimum "
                     f"{s['state_minimum_frequency_hz'] / 1e9:.3f} GHz")
    assert ok


def test_a6_classification(runs):
    c, _, t = runs("appendixC")
    s = c["summary"]
    ok = (s["loo_accuracy_nearest_centroid"] == 1.0 and s["hamming_max"] <= 1
          and s["n_nonpositive_silhouette"] == 0 and t < 1800)
    record("A6", ok, f"LOO {s['loo_accuracy_nearest_centroid']:.1%} (= 100%), max Hamming "
                     f"{s['hamming_max']} (<= 1), {s['n_nonpositive_silhouette']} silhouettes <= 0 "
                     f"(none), {t:.1f} s")
    assert ok


def test_a7_readout_consistency(runs):
    d, _, t = runs("dual-comb")
    s = d["summary"]
    ok = s["max_abs_delta_difference_db"] < 1.0 and t < 120 and s["lo_spacing_hz"] == pytest.approx(2.989e9)
    record("A7", ok, f"max |beat delta - optical delta| {s['max_abs_delta_difference_db']:.3f} dB (< 1) "
                     f"over {s['n_tones']} tones, {t:.1f} s")
    assert ok


def test_a8_calibration_monotonicity(runs):
    c, out, t = runs("calibration")
    s = c["summary"]
    ok = s["monotonic_violations"] <= 1 and s["n_points"] == 10 and t < 300
    record("A8", ok, f"{s['monotonic_violations']} increases over {s['n_points']} detunings (<= 1), {t:.1f} s")
    assert ok


def test_a9_spectral_identities():
    rng = np.random.default_rng(1)
    x = rng.normal(size=4096) + 1j * rng.normal(size=4096)
    spec = power_spectrum(FieldRecord(x, 1e-10), WindowKind.RECTANGULAR)
    parseval = abs(spec.psd.sum() / np.mean(np.abs(x) ** 2) - 1)

    t = 1e-10 * np.arange(1000)
    two = np.exp(2j * np.pi * 300e6 * t) + 0.1 * np.exp(2j * np.pi * -700e6 * t + 0.4j)
    p = comb_powers(power_spectrum(FieldRecord(two, 1e-10)), [300e6, -700e6], 50e6)
    ratio_err = abs((p[1] - p[0]) + 20.0)

    beta, n = 1.5, 6
    bound = 2 * (beta / 2) ** (2 * (n + 1)) / math.factorial(n + 1) ** 2 * math.exp(beta**2 / 4)
    deficit = 1.0 - pm_comb(beta, 1e9, n).total_power()
    ok = parseval < 1e-6 and ratio_err < 0.01 and -1e-12 <= deficit <= bound
    record("A9", ok, f"Parseval {parseval:.1e} (< 1e-6), two-tone error {ratio_err:.1e} dB (< 0.01), "
                     f"PM power deficit {deficit:.1e} (<= {bound:.1e})")
    assert ok


def test_a10_determinism(runs):
    first, _, _ = runs("appendixB-a", threads=1)
    again, _, _ = runs("appendixB-a", threads=1, repeat=1)
    c1, _, _ = runs("appendixC", threads=1)
    c2, _, _ = runs("appendixC", threads=2)
    same_rerun = first["files"] == again["files"]
    same_threads = c1["files"] == c2["files"]
    ok = same_rerun and same_threads
    record("A10", ok, f"rerun digests equal: {same_rerun}; appendixC threads 1 vs 2 digests equal: "
                      f"{same_threads}")
    assert ok
