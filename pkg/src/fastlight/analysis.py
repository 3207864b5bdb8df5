"""Measurement pipeline: noise spectra, shot normalization, band filtering,
cross-correlation and sub-sample peak-delay extraction.

Sign convention for correlations: C12(t) = sum_tau i1(tau) i2(tau + t), so a
positive peak lag means the second trace lags the first, and a negative
measured delay means the second trace is advanced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import (DegeneratePeakError, IncompatibleSpectraError,
                     IncompatibleTracesError, InvalidParameterError)
from .simulate import Trace, _is_power_of_two

NORM_ABSOLUTE = "absolute"
NORM_SNU = "snu"
NORM_DB = "db_re_shot_noise"

# Fractions of an edge width at which a raised-cosine ramp passes half power.
_RISE_3DB = 2.0 / np.pi * np.arcsin(2.0 ** -0.25)
_FALL_3DB = 2.0 / np.pi * np.arccos(2.0 ** -0.25)


@dataclass(frozen=True)
class Spectrum:
    """One-sided power spectral density with estimator metadata."""

    frequencies: np.ndarray
    values: np.ndarray
    normalization: str = NORM_ABSOLUTE
    segment_len: int = 0
    overlap: float = 0.5
    window: str = "hann"
    trace_count: int = 1

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if f.ndim != 1 or v.shape != f.shape:
            raise InvalidParameterError("frequencies and values must be matching 1-d arrays")
        if np.any(np.diff(f) <= 0):
            raise InvalidParameterError("frequency grid must be strictly increasing")
        if self.normalization in (NORM_ABSOLUTE, NORM_SNU) and np.any(v < 0):
            raise InvalidParameterError("power spectral density must be non-negative")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "values", v)


def _settings_match(a: Spectrum, b: Spectrum) -> bool:
    return (a.segment_len == b.segment_len and a.overlap == b.overlap
            and a.window == b.window
            and a.frequencies.shape == b.frequencies.shape
            and np.allclose(a.frequencies, b.frequencies, rtol=1e-12, atol=1e-6))


def psd(trace: Trace, segment_len: int = 65536, overlap_fraction: float = 0.5,
        window: str = "hann") -> Spectrum:
    """Welch power spectral density of a trace, one-sided, density-normalized.

    The integral of the returned density over frequency equals the trace
    variance (Parseval) up to estimator error.
    """
    if not _is_power_of_two(segment_len):
        raise InvalidParameterError(f"segment_len must be a power of two, got {segment_len}")
    if segment_len > len(trace):
        raise InvalidParameterError(
            f"segment_len {segment_len} exceeds trace length {len(trace)}")
    if not (0.0 <= overlap_fraction < 1.0):
        raise InvalidParameterError(f"overlap_fraction must be in [0, 1), got {overlap_fraction}")
    freqs, values = sps.welch(
        trace.samples, fs=trace.sample_rate, window=window, nperseg=segment_len,
        noverlap=int(overlap_fraction * segment_len), detrend=False,
        return_onesided=True, scaling="density")
    return Spectrum(freqs, values, NORM_ABSOLUTE, segment_len, overlap_fraction, window, 1)


def average_spectra(spectra) -> Spectrum:
    """Trace-count-weighted mean of same-settings absolute/SNU spectra."""
    spectra = list(spectra)
    if not spectra:
        raise InvalidParameterError("no spectra to average")
    first = spectra[0]
    total = np.zeros_like(first.values)
    count = 0
    for spec in spectra:
        if spec.normalization != first.normalization or not _settings_match(spec, first):
            raise IncompatibleSpectraError("spectra differ in grid or estimator settings")
        total += spec.values * spec.trace_count
        count += spec.trace_count
    return Spectrum(first.frequencies, total / count, first.normalization,
                    first.segment_len, first.overlap, first.window, count)


def snu_normalize(spec: Spectrum, reference: Spectrum) -> Spectrum:
    """Pointwise 10*log10(spec/reference); the reference defines 0 dB."""
    if not _settings_match(spec, reference):
        raise IncompatibleSpectraError("spectrum and reference differ in grid or settings")
    if spec.normalization != reference.normalization:
        raise IncompatibleSpectraError("spectrum and reference differ in normalization")
    with np.errstate(divide="ignore"):
        values = 10.0 * np.log10(spec.values / reference.values)
    return Spectrum(spec.frequencies, values, NORM_DB,
                    spec.segment_len, spec.overlap, spec.window, spec.trace_count)


def shot_noise_density(mean_flux: float, sample_rate: float) -> float:
    """One-sided PSD of shot noise for a beam of the given mean flux."""
    return 2.0 * mean_flux / sample_rate


def band_squeezing_db(spec: Spectrum, f_lo: float, f_hi: float) -> float:
    """10*log10 of the linear-SNU average of a dB spectrum over [f_lo, f_hi]."""
    if spec.normalization != NORM_DB:
        raise InvalidParameterError("band_squeezing_db needs a dB-re-shot-noise spectrum")
    mask = (spec.frequencies >= f_lo) & (spec.frequencies <= f_hi)
    if not np.any(mask):
        raise InvalidParameterError(f"no spectrum bins inside [{f_lo}, {f_hi}] Hz")
    linear = 10.0 ** (spec.values[mask] / 10.0)
    return float(10.0 * np.log10(np.mean(linear)))


# ---------------------------------------------------------------------------
# Band filtering


def band_response(frequencies, f_lo: float, f_hi: float,
                  edge_lo: float | None = None, edge_hi: float | None = None):
    """Real, even filter response: unity midband, raised-cosine edges whose
    half-power points sit exactly at f_lo and f_hi.

    edge_lo/edge_hi are the widths of the rising/falling cosine ramps;
    defaults are f_lo and 1.5 * f_hi.  The response is identically zero
    outside the ramps.
    """
    if not (0.0 < f_lo < f_hi):
        raise InvalidParameterError(f"need 0 < f_lo < f_hi, got ({f_lo}, {f_hi})")
    edge_lo = f_lo if edge_lo is None else edge_lo
    edge_hi = 1.5 * f_hi if edge_hi is None else edge_hi
    if edge_lo <= 0.0 or edge_hi <= 0.0:
        raise InvalidParameterError("edge widths must be positive")
    a = f_lo - _RISE_3DB * edge_lo
    b = a + edge_lo
    c = f_hi - _FALL_3DB * edge_hi
    d = c + edge_hi
    if a < 0.0:
        raise InvalidParameterError("lower edge extends below zero frequency; shrink edge_lo")
    if b > c:
        raise InvalidParameterError("filter edges overlap; band too narrow for these edges")
    f = np.abs(np.asarray(frequencies, dtype=float))
    h = np.zeros_like(f)
    rising = (f > a) & (f < b)
    h[rising] = np.sin(0.5 * np.pi * (f[rising] - a) / edge_lo) ** 2
    h[(f >= b) & (f <= c)] = 1.0
    falling = (f > c) & (f < d)
    h[falling] = np.cos(0.5 * np.pi * (f[falling] - c) / edge_hi) ** 2
    return h


def band_filter(trace: Trace, f_lo: float, f_hi: float,
                edge_lo: float | None = None, edge_hi: float | None = None) -> Trace:
    """Zero-phase band filter with half-power corners at f_lo and f_hi.

    Applied in the frequency domain; apply the identical call to every trace
    that will later be compared or correlated.
    """
    if not (0.0 < f_lo < f_hi < trace.nyquist):
        raise InvalidParameterError(
            f"need 0 < f_lo < f_hi < Nyquist ({trace.nyquist:g}), got ({f_lo}, {f_hi})")
    freqs = np.fft.rfftfreq(len(trace), 1.0 / trace.sample_rate)
    h = band_response(freqs, f_lo, f_hi, edge_lo, edge_hi)
    x = np.fft.rfft(trace.samples) * h
    return Trace(trace.sample_rate, trace.mean_flux, np.fft.irfft(x, len(trace)),
                 seed_tag=trace.seed_tag + f"/bp({f_lo:g},{f_hi:g})")


# ---------------------------------------------------------------------------
# Cross-correlation and delay extraction


@dataclass(frozen=True)
class XcorrResult:
    """Normalized cross-correlation on a lag grid.

    peak_lag is the three-point parabolic refinement of the maximum; fwhm is
    the width of the main lobe at half the refined peak value (NaN when the
    half level is not crossed inside the lag window).
    """

    lags: np.ndarray
    values: np.ndarray
    peak_lag: float
    fwhm: float

    @classmethod
    def from_values(cls, lags, values) -> "XcorrResult":
        lags = np.asarray(lags, dtype=float)
        values = np.asarray(values, dtype=float)
        if lags.shape != values.shape or lags.ndim != 1:
            raise InvalidParameterError("lags and values must be matching 1-d arrays")
        peak_lag, peak_val = _refine_peak(lags, values)
        return cls(lags=lags, values=values, peak_lag=peak_lag,
                   fwhm=_fwhm(lags, values, peak_val))


def _refine_peak(lags, values) -> tuple[float, float]:
    i = int(np.argmax(values))
    if i == 0 or i == len(values) - 1:
        return float(lags[i]), float(values[i])
    y0, y1, y2 = values[i - 1], values[i], values[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom >= 0.0:
        return float(lags[i]), float(values[i])
    shift = 0.5 * (y0 - y2) / denom
    step = lags[i + 1] - lags[i]
    peak_val = y1 - 0.25 * (y0 - y2) * shift
    return float(lags[i] + shift * step), float(peak_val)


def _fwhm(lags, values, peak_val: float) -> float:
    half = 0.5 * peak_val
    i = int(np.argmax(values))
    right = np.nan
    for j in range(i, len(values) - 1):
        if values[j + 1] < half <= values[j]:
            frac = (values[j] - half) / (values[j] - values[j + 1])
            right = lags[j] + frac * (lags[j + 1] - lags[j])
            break
    left = np.nan
    for j in range(i, 0, -1):
        if values[j - 1] < half <= values[j]:
            frac = (values[j] - half) / (values[j] - values[j - 1])
            left = lags[j] - frac * (lags[j] - lags[j - 1])
            break
    return float(right - left)


def cross_correlation(i1: Trace, i2: Trace, max_lag: float) -> XcorrResult:
    """Normalized intensity cross-correlation of two equal-rate traces.

    Computed in the frequency domain (circular; valid for max_lag much
    shorter than the trace), normalized by sqrt(C11(0) C22(0)) so the values
    are bounded by 1.  The lag grid is at the sample period.
    """
    _check = (len(i1) != len(i2) or i1.sample_rate != i2.sample_rate)
    if _check:
        raise IncompatibleTracesError("cross_correlation needs equal lengths and rates")
    n = len(i1)
    n_lag = int(round(max_lag * i1.sample_rate))
    if n_lag < 1:
        raise InvalidParameterError(f"max_lag {max_lag} is below one sample period")
    if n_lag > n // 8:
        raise InvalidParameterError(
            f"max_lag {max_lag} too long for trace duration {i1.duration}")
    energy = float(np.dot(i1.samples, i1.samples)) * float(np.dot(i2.samples, i2.samples))
    if energy <= 0.0:
        raise InvalidParameterError("zero-energy trace has no normalized correlation")
    spec = np.conj(np.fft.rfft(i1.samples)) * np.fft.rfft(i2.samples)
    corr = np.fft.irfft(spec, n)
    values = np.concatenate([corr[-n_lag:], corr[:n_lag + 1]]) / np.sqrt(energy)
    lags = np.arange(-n_lag, n_lag + 1) / i1.sample_rate
    return XcorrResult.from_values(lags, values)


def _check_unique_peak(result: XcorrResult, tie_tol: float = 1e-6):
    values = result.values
    top = values.max()
    ties = np.flatnonzero(values >= top - tie_tol)
    if ties.size > 3 or (ties.size > 1 and np.ptp(ties) > 2):
        raise DegeneratePeakError(
            f"correlation peak degenerate: {ties.size} samples within {tie_tol} of the maximum")


def peak_delay(c_fast: XcorrResult, c_ref: XcorrResult) -> float:
    """Peak-lag difference argmax(c_fast) - argmax(c_ref), in seconds.

    Each peak is the parabolic-interpolated maximum.  Negative values mean
    the fast trace's correlation peak arrives early (advancement).
    """
    if c_fast.lags.shape != c_ref.lags.shape or not np.allclose(
            c_fast.lags, c_ref.lags, rtol=1e-12, atol=1e-15):
        raise InvalidParameterError("peak_delay needs identical lag grids")
    _check_unique_peak(c_fast)
    _check_unique_peak(c_ref)
    return float(c_fast.peak_lag - c_ref.peak_lag)
