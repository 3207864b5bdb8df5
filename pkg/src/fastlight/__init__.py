"""Desk-scale simulator and analysis chain for fast-light twin-beam noise
experiments: Lorentzian gain-line dispersion, quantum-limited
phase-insensitive amplification, correlated photocurrent synthesis, and
cross-correlation delay measurement."""

__version__ = "0.1.0"

from .amplifier import (ChannelParams, amp_mean, amp_variance,
                        difference_noise_after_channel, loss_channel, snu_out)
from .analysis import (Spectrum, XcorrResult, average_spectra, band_filter,
                       band_response, band_squeezing_db, cross_correlation,
                       peak_delay, psd, shot_noise_density, snu_normalize)
from .dispersion import (GainLine, MediumResponse, calibrate, field_transfer,
                         gain_db, group_index, intensity_gain, medium_response,
                         modulation_transfer, peak_advance, refractive_index)
from .errors import (ConfigError, DegeneratePeakError, FastlightError,
                     IncompatibleSpectraError, IncompatibleTracesError,
                     InvalidParameterError)
from .simulate import (SpectralTargets, Trace, apply_detection, build_targets,
                       difference, fractional_shift, load_trace_binary,
                       load_trace_csv, propagate_channel, save_trace_binary,
                       save_trace_csv, shot_reference, synth_twin_traces)
from .twinbeam import (BeamStats, TwinBeamSource, gain_for_squeezing,
                       intensity_difference_variance, seeded_stats,
                       squeezing_db)

__all__ = [name for name in dir() if not name.startswith("_")]
