"""Dynamical-decoupling AC magnetometry simulator.

Builds CPMG/XY8/concatenated-XY8 pulse sequences, evolves a spin through
them in an oscillating field with imperfect pulses, and turns the
resulting signal curves into magnetometric sensitivities.
"""

__version__ = "0.1.0"

from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .errors import (
    ConfigError,
    DDMagError,
    FitFailureError,
    InvalidArgumentError,
    InvalidTimingError,
    NoSignalError,
    ResourceLimitError,
)
from .evolution import (
    DEFAULT_ENSEMBLE,
    ACFieldSpec,
    BlochVector,
    CoherenceParams,
    HyperfineEnsemble,
    PulseErrorModel,
    accumulated_phase_analytic,
    coherence_envelope,
    evolve_coherent,
    readout_contrast,
    simulate_signal,
    simulate_signal_stats,
    t2_effective,
)
from .magnetometry import (
    MC_CONTRAST_ERRORS,
    SensitivityReport,
    SignalCurve,
    SimulatedContrastModel,
    SinusoidFit,
    TemperatureComparison,
    calibrate_amplitude_axis,
    compare_temperatures,
    exponential_contrast_model,
    fit_max_slope,
    fit_sinusoid,
    ideal_oscillation_period,
    optimize_pulse_number,
    oscillation_period,
    sensitivity_from_curve,
    sensitivity_theoretical,
    shot_noise_sigma,
    sweep_amplitude,
    unit_contrast,
)
from .sequences import (
    PROTOCOLS,
    Pulse,
    PulseSequence,
    TimedSequence,
    admissible_pulse_counts,
    build_cpmg,
    build_cxy8,
    build_sequence,
    build_xy8,
    cxy8_level_for_count,
    cxy8_pulse_count,
    format_timing_table,
    synchronize,
    toggling_intervals,
    toggling_sign,
    write_timing_table,
)

__all__ = [
    "__version__",
    "DEFAULT_CONSTANTS",
    "PhysicalConstants",
    "ConfigError",
    "DDMagError",
    "FitFailureError",
    "InvalidArgumentError",
    "InvalidTimingError",
    "NoSignalError",
    "ResourceLimitError",
    "DEFAULT_ENSEMBLE",
    "ACFieldSpec",
    "BlochVector",
    "CoherenceParams",
    "HyperfineEnsemble",
    "PulseErrorModel",
    "accumulated_phase_analytic",
    "coherence_envelope",
    "evolve_coherent",
    "readout_contrast",
    "simulate_signal",
    "simulate_signal_stats",
    "t2_effective",
    "MC_CONTRAST_ERRORS",
    "SensitivityReport",
    "SignalCurve",
    "SimulatedContrastModel",
    "SinusoidFit",
    "TemperatureComparison",
    "calibrate_amplitude_axis",
    "compare_temperatures",
    "exponential_contrast_model",
    "fit_max_slope",
    "fit_sinusoid",
    "ideal_oscillation_period",
    "optimize_pulse_number",
    "oscillation_period",
    "sensitivity_from_curve",
    "sensitivity_theoretical",
    "shot_noise_sigma",
    "sweep_amplitude",
    "unit_contrast",
    "PROTOCOLS",
    "Pulse",
    "PulseSequence",
    "TimedSequence",
    "admissible_pulse_counts",
    "build_cpmg",
    "build_cxy8",
    "build_sequence",
    "build_xy8",
    "cxy8_level_for_count",
    "cxy8_pulse_count",
    "format_timing_table",
    "synchronize",
    "toggling_intervals",
    "toggling_sign",
    "write_timing_table",
]
