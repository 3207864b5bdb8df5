"""Scenario runner: turns a ScenarioConfig into CSV/JSON data files.

Seed discipline: the master seed feeds a numpy SeedSequence; scan point i
uses spawn_key (i,), trace j within a point uses (i, j), and each stochastic
role within a trace (synthesis, channel noise, detections, shot reference)
uses (i, j, r).  Results are therefore independent of execution order and
identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import scipy

from . import __version__
from .amplifier import difference_noise_after_channel
from .analysis import (NORM_ABSOLUTE, Spectrum, XcorrResult, band_filter,
                       band_squeezing_db, cross_correlation, peak_delay, psd,
                       snu_normalize)
from .config import ScenarioConfig, config_from_dict
from .dispersion import gain_db, group_index, intensity_gain
from .predict import predicted_correlation_shift, predicted_difference_noise_snu
from .simulate import (Trace, apply_detection, build_targets, difference,
                       fractional_shift, propagate_channel, shot_reference,
                       synth_twin_traces)
from .twinbeam import seeded_stats

_ROLES = 7  # synth, channel, det ref p, det ref c, det fast p, det fast c, shot


def _point_seed(master: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=(index,))


def _beam_level_excess_db(excess_diff_db: float, mean_p: float, mean_c_out: float,
                          eta: float) -> float:
    """Convert a difference-level technical noise figure to the equivalent
    flat excess in the propagated beam's own shot units."""
    x_diff = 10.0 ** (excess_diff_db / 10.0) - 1.0
    x_beam = x_diff * (mean_p + mean_c_out) / (eta * mean_c_out)
    return 10.0 * math.log10(1.0 + x_beam)


def _band(trace: Trace, band) -> Trace:
    return band_filter(trace, band[0], band[1])


def _measure_correlation_point(cfg: ScenarioConfig, detuning_hz: float,
                               point_ss: np.random.SeedSequence,
                               want_fullband: bool) -> dict:
    """Simulate one detuning point and measure delays and band squeezing."""
    line = cfg.line.make()
    source = cfg.source.make()
    eta = cfg.channel.eta
    n, fs = cfg.sampling.samples, cfg.sampling.rate_hz
    seg = min(cfg.segment_len, n)
    stats = seeded_stats(source.gain1, source.seed_flux)
    mean_p, mean_c = stats.mean_p, stats.mean_c
    delta = 2.0 * math.pi * detuning_hz
    gain0 = float(intensity_gain(line, delta))
    mean_c_out = gain0 * mean_c + (gain0 - 1.0)
    excess_beam = _beam_level_excess_db(cfg.channel.excess_noise_db, mean_p,
                                        mean_c_out, eta)
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    targets = build_targets(source, freqs)

    sums = {}
    lag_grid = None
    diff_acc = None
    shot_acc = None
    spec_freqs = None
    n_traces = cfg.sampling.traces
    for j in range(n_traces):
        roles = np.random.SeedSequence(cfg.seed,
                                       spawn_key=point_ss.spawn_key + (j,)).spawn(_ROLES)
        if cfg.source.coherent:
            probe, conj = shot_reference(mean_p, mean_c, n, fs, roles[0])
        else:
            probe, conj = synth_twin_traces(targets, n, fs, mean_p, mean_c, roles[0])
        conj_fast = propagate_channel(conj, line, delta, excess_beam, roles[1])
        probe_ref = apply_detection(probe, eta, roles[2])
        conj_ref = apply_detection(conj, eta, roles[3])
        probe_fast = apply_detection(probe, eta, roles[4])
        conj_fast = apply_detection(conj_fast, eta, roles[5])

        pairs = {"band_ref": (probe_ref, conj_ref, cfg.band_hz),
                 "band_fast": (probe_fast, conj_fast, cfg.band_hz)}
        if want_fullband:
            pairs["full_ref"] = (probe_ref, conj_ref, cfg.fullband_hz)
            pairs["full_fast"] = (probe_fast, conj_fast, cfg.fullband_hz)
        for key, (t1, t2, band) in pairs.items():
            xc = cross_correlation(_band(t1, band), _band(t2, band), cfg.max_lag_s)
            if key not in sums:
                sums[key] = np.zeros_like(xc.values)
                lag_grid = xc.lags
            sums[key] += xc.values

        spec_diff = psd(difference(probe_fast, conj_fast), seg)
        shot_p, shot_c = shot_reference(probe_fast.mean_flux, conj_fast.mean_flux,
                                        n, fs, roles[6])
        spec_shot = psd(difference(shot_p, shot_c), seg)
        if diff_acc is None:
            diff_acc = np.zeros_like(spec_diff.values)
            shot_acc = np.zeros_like(spec_shot.values)
            spec_freqs = spec_diff.frequencies
        diff_acc += spec_diff.values
        shot_acc += spec_shot.values

    def _spectrum(acc):
        return Spectrum(spec_freqs, acc / n_traces, NORM_ABSOLUTE, seg, 0.5,
                        "hann", n_traces)

    normalized = snu_normalize(_spectrum(diff_acc), _spectrum(shot_acc))
    squeezing = band_squeezing_db(normalized, *cfg.band_hz)

    curves = {key: XcorrResult.from_values(lag_grid, acc / n_traces)
              for key, acc in sums.items()}
    result = {
        "detuning_hz": detuning_hz,
        "gain_db": float(gain_db(line, delta)),
        "delay_s_band": peak_delay(curves["band_fast"], curves["band_ref"]),
        "squeezing_db_band": squeezing,
        "analytic_squeezing_db": difference_noise_after_channel(
            source.gain1, max(gain0, 1.0), eta, cfg.channel.excess_noise_db).db,
        "curves": curves,
    }
    if want_fullband:
        result["delay_s_fullband"] = peak_delay(curves["full_fast"], curves["full_ref"])
    return result


def _measure_noise_point(cfg: ScenarioConfig, detuning_hz: float,
                         point_ss: np.random.SeedSequence) -> dict:
    """Simulate one detuning point of the gain-line scan."""
    line = cfg.line.make()
    source = cfg.source.make()
    eta = cfg.channel.eta
    n, fs = cfg.sampling.samples, cfg.sampling.rate_hz
    seg = min(cfg.segment_len, n)
    stats = seeded_stats(source.gain1, source.seed_flux)
    mean_p, mean_c = stats.mean_p, stats.mean_c
    delta = 2.0 * math.pi * detuning_hz
    gain0 = float(intensity_gain(line, delta))
    mean_c_out = gain0 * mean_c + (gain0 - 1.0)
    excess_beam = _beam_level_excess_db(cfg.channel.excess_noise_db, mean_p,
                                        mean_c_out, eta)
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    targets = build_targets(source, freqs)

    diff_acc = None
    shot_acc = None
    spec_freqs = None
    n_traces = cfg.sampling.traces
    for j in range(n_traces):
        roles = np.random.SeedSequence(cfg.seed,
                                       spawn_key=point_ss.spawn_key + (j,)).spawn(_ROLES)
        if cfg.source.coherent:
            probe, conj = shot_reference(mean_p, mean_c, n, fs, roles[0])
        else:
            probe, conj = synth_twin_traces(targets, n, fs, mean_p, mean_c, roles[0])
        conj_fast = propagate_channel(conj, line, delta, excess_beam, roles[1])
        probe_det = apply_detection(probe, eta, roles[4])
        conj_det = apply_detection(conj_fast, eta, roles[5])
        spec_diff = psd(difference(probe_det, conj_det), seg)
        shot_p, shot_c = shot_reference(probe_det.mean_flux, conj_det.mean_flux,
                                        n, fs, roles[6])
        spec_shot = psd(difference(shot_p, shot_c), seg)
        if diff_acc is None:
            diff_acc = np.zeros_like(spec_diff.values)
            shot_acc = np.zeros_like(spec_shot.values)
            spec_freqs = spec_diff.frequencies
        diff_acc += spec_diff.values
        shot_acc += spec_shot.values

    normalized = snu_normalize(
        Spectrum(spec_freqs, diff_acc / n_traces, NORM_ABSOLUTE, seg, 0.5, "hann", n_traces),
        Spectrum(spec_freqs, shot_acc / n_traces, NORM_ABSOLUTE, seg, 0.5, "hann", n_traces))
    simulated_db = band_squeezing_db(normalized, *cfg.noise_band_hz)

    f_band = np.linspace(cfg.noise_band_hz[0], cfg.noise_band_hz[1], 201)
    predicted = predicted_difference_noise_snu(line, detuning_hz, source, eta,
                                               cfg.channel.excess_noise_db, f_band,
                                               coherent=cfg.source.coherent)
    return {
        "detuning_hz": detuning_hz,
        "gain_db": float(gain_db(line, delta)),
        "predicted_noise_db": float(10.0 * np.log10(np.mean(predicted))),
        "simulated_noise_db": simulated_db,
        "group_index": float(group_index(line, delta)),
    }


def _noise_point_worker(args) -> dict:
    cfg_dict, index, detuning = args
    cfg = config_from_dict(cfg_dict)
    return _measure_noise_point(cfg, detuning, _point_seed(cfg.seed, index))


def _correlation_point_worker(args) -> dict:
    cfg_dict, index, detuning = args
    cfg = config_from_dict(cfg_dict)
    out = _measure_correlation_point(cfg, detuning, _point_seed(cfg.seed, index),
                                     want_fullband=True)
    out.pop("curves")
    return out


def _map_points(worker, cfg: ScenarioConfig):
    args = [(cfg.to_dict(), i, d) for i, d in enumerate(cfg.detunings_hz)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(worker, args))
    return [worker(a) for a in args]


def _write_csv(path, columns, rows, created):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(row[c])) for c in columns) + "\n")
    created.append(path)


def _base_summary(cfg: ScenarioConfig) -> dict:
    return {
        "scenario": cfg.scenario,
        "master_seed": cfg.seed,
        "seed_splitting": "SeedSequence(master, spawn_key=(point, trace, role))",
        "point_spawn_keys": list(range(len(cfg.detunings_hz) or 1)),
        "config_sha256": cfg.config_hash(),
        "fastlight_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
    }


def _write_summary(path, summary, created):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    created.append(path)


def _run_line_scan(cfg: ScenarioConfig, created) -> dict:
    rows = _map_points(_noise_point_worker, cfg)
    columns = ["detuning_hz", "gain_db", "predicted_noise_db",
               "simulated_noise_db", "group_index"]
    _write_csv(os.path.join(cfg.out_dir, "line_scan.csv"), columns, rows, created)
    summary = _base_summary(cfg)
    summary["rows"] = len(rows)
    _write_summary(os.path.join(cfg.out_dir, "summary.json"), summary, created)
    return summary


def _run_delay_scan(cfg: ScenarioConfig, created) -> dict:
    rows = _map_points(_correlation_point_worker, cfg)
    columns = ["detuning_hz", "delay_s_fullband", "delay_s_band",
               "squeezing_db_band", "analytic_squeezing_db"]
    _write_csv(os.path.join(cfg.out_dir, "delay_scan.csv"), columns, rows, created)
    summary = _base_summary(cfg)
    summary["rows"] = len(rows)
    _write_summary(os.path.join(cfg.out_dir, "summary.json"), summary, created)
    return summary


def _run_xcorr(cfg: ScenarioConfig, created) -> dict:
    line = cfg.line.make()
    source = cfg.source.make()
    point = _measure_correlation_point(cfg, cfg.offset_hz, _point_seed(cfg.seed, 0),
                                       want_fullband=False)
    curves = point.pop("curves")
    ref, fast = curves["band_ref"], curves["band_fast"]
    rows = [{"lag_s": lag, "c_ref": cr, "c_fast": cf}
            for lag, cr, cf in zip(ref.lags, ref.values, fast.values)]
    _write_csv(os.path.join(cfg.out_dir, "xcorr.csv"),
               ["lag_s", "c_ref", "c_fast"], rows, created)

    summary = _base_summary(cfg)
    summary.update({
        "point_spawn_keys": [0],
        "offset_hz": cfg.offset_hz,
        "gain_at_offset_db": point["gain_db"],
        "peak_lag_ref_s": ref.peak_lag,
        "peak_lag_fast_s": fast.peak_lag,
        "delta_t_s": point["delay_s_band"],
        "fwhm_ref_s": ref.fwhm,
        "fwhm_fast_s": fast.fwhm,
        "band_squeezing_db": point["squeezing_db_band"],
        "analytic_squeezing_db": point["analytic_squeezing_db"],
        "predicted_delta_t_s": predicted_correlation_shift(
            line, cfg.offset_hz, source, *cfg.band_hz),
    })
    _write_summary(os.path.join(cfg.out_dir, "summary.json"), summary, created)
    return summary


def _run_selftest(cfg: ScenarioConfig, created) -> dict:
    """Fast internal consistency battery; prints one line per check."""
    from scipy.optimize import brentq
    from .dispersion import calibrate
    from .analysis import shot_noise_density
    checks = {}

    line = calibrate(7.5, 10e6, 0.025)
    peak = float(gain_db(line, 0.0))
    root = brentq(lambda d: gain_db(line, d) - peak / 2.0,
                  0.5 * line.gamma, 2.0 * line.gamma)
    fwhm = 2.0 * root / (2.0 * math.pi)
    checks["calibration_roundtrip"] = (abs(peak - 7.5) < 1e-9
                                       and abs(fwhm - 10e6) / 10e6 < 1e-6)

    ss = np.random.SeedSequence(cfg.seed, spawn_key=(101,))
    t1, _ = shot_reference(1e6, 1e6, 1 << 16, cfg.sampling.rate_hz, ss)
    spec = psd(t1, 1 << 14)
    snu = np.mean(spec.values[1:]) / shot_noise_density(1e6, cfg.sampling.rate_hz)
    checks["shot_floor_unity"] = bool(abs(snu - 1.0) < 0.05)

    base = band_filter(t1, 1e5, 3e6)
    shifted = fractional_shift(base, 12e-9)
    delay = peak_delay(cross_correlation(base, shifted, 1e-6),
                       cross_correlation(base, base, 1e-6))
    checks["delay_estimator_12ns"] = bool(abs(delay - 12e-9) < 0.2e-9)

    source = cfg.source.make()
    stats = seeded_stats(source.gain1, source.seed_flux)
    n_small = 1 << 17
    freqs = np.fft.rfftfreq(n_small, 1.0 / cfg.sampling.rate_hz)
    targets = build_targets(source, freqs)
    diff_acc = None
    shot_acc = None
    for j in range(6):
        ss_j = np.random.SeedSequence(cfg.seed, spawn_key=(102, j))
        p, c = synth_twin_traces(targets, n_small, cfg.sampling.rate_hz,
                                 stats.mean_p, stats.mean_c, ss_j)
        sd = psd(difference(p, c), 1 << 14)
        sp, sc = shot_reference(stats.mean_p, stats.mean_c, n_small,
                                cfg.sampling.rate_hz,
                                np.random.SeedSequence(cfg.seed, spawn_key=(103, j)))
        sn = psd(difference(sp, sc), 1 << 14)
        diff_acc = sd.values if diff_acc is None else diff_acc + sd.values
        shot_acc = sn.values if shot_acc is None else shot_acc + sn.values
    norm = snu_normalize(Spectrum(sd.frequencies, diff_acc / 6, NORM_ABSOLUTE, 1 << 14),
                         Spectrum(sd.frequencies, shot_acc / 6, NORM_ABSOLUTE, 1 << 14))
    band_db = band_squeezing_db(norm, *cfg.band_hz)
    from .twinbeam import squeezing_db as squeezing_formula
    target_db = squeezing_formula(source.gain1)
    checks["twin_band_squeezing"] = bool(abs(band_db - target_db) < 0.5)

    ss_d = np.random.SeedSequence(cfg.seed, spawn_key=(104,))
    a1, _ = synth_twin_traces(targets, n_small, cfg.sampling.rate_hz,
                              stats.mean_p, stats.mean_c, ss_d)
    ss_d2 = np.random.SeedSequence(cfg.seed, spawn_key=(104,))
    a2, _ = synth_twin_traces(targets, n_small, cfg.sampling.rate_hz,
                              stats.mean_p, stats.mean_c, ss_d2)
    checks["determinism"] = bool(np.array_equal(a1.samples, a2.samples))

    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} selftest:{name}")
    summary = _base_summary(cfg)
    summary["checks"] = checks
    summary["all_passed"] = all(checks.values())
    _write_summary(os.path.join(cfg.out_dir, "selftest.json"), summary, created)
    return summary


def run_scenario(cfg: ScenarioConfig) -> dict:
    """Run a scenario, writing its output files into cfg.out_dir.

    On error all partially written outputs are removed and the exception is
    re-raised.  Returns the summary dictionary.
    """
    os.makedirs(cfg.out_dir, exist_ok=True)
    created: list[str] = []
    runners = {
        "line-scan": _run_line_scan,
        "delay-scan": _run_delay_scan,
        "xcorr": _run_xcorr,
        "selftest": _run_selftest,
    }
    try:
        return runners[cfg.scenario](cfg, created)
    except Exception:
        for path in created:
            try:
                os.unlink(path)
            except OSError:
                pass
        raise
