"""Amplitude sweeps, slope extraction, sensitivity, and pulse-number optimization.

The experimental pipeline sweeps the AC amplitude, fits the oscillating
contrast with a sinusoid, and converts the largest slope into a
sensitivity eta = sigma*sqrt(T)/|dS/dB|.  The theoretical pipeline
evaluates the shot-noise-limited form

    eta(n) = [pi*hbar/(2*g*mu_B)] / (C(n)*sqrt(n/(2*f))) * exp[(t/T2_eff(n))**p]

and minimizes it over the pulse counts a protocol can realize.
"""

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .errors import (
    FitFailureError,
    InvalidArgumentError,
    NoSignalError,
)
from .evolution import (
    DEFAULT_ENSEMBLE,
    ACFieldSpec,
    CoherenceParams,
    HyperfineEnsemble,
    PulseErrorModel,
    simulate_signal_stats,
    t2_effective,
)
from .sequences import admissible_pulse_counts

HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class SignalCurve:
    """Contrast vs field amplitude, with per-point standard errors."""

    b_values: tuple[float, ...]  # T
    contrast: tuple[float, ...]
    contrast_stderr: tuple[float, ...]
    protocol: str
    n: int
    f_ac: float  # Hz
    temperature_mode: str
    seed: int | None = None

    def __post_init__(self):
        if not (len(self.b_values) == len(self.contrast) == len(self.contrast_stderr)):
            raise InvalidArgumentError("curve columns must have equal length")
        if len(self.b_values) < 1:
            raise InvalidArgumentError("curve needs at least one point")
        for a, b in zip(self.b_values, self.b_values[1:]):
            if b < a:
                raise InvalidArgumentError("B values must be non-decreasing")

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.b_values, self.contrast, self.contrast_stderr))

    def require_fittable(self) -> None:
        """Fits need >= 8 strictly increasing B values."""
        if len(self.b_values) < 8:
            raise InvalidArgumentError("fits need at least 8 points")
        for a, b in zip(self.b_values, self.b_values[1:]):
            if b <= a:
                raise InvalidArgumentError("fits need strictly increasing B values")


@dataclass(frozen=True)
class SinusoidFit:
    """Parameters of S(B) = amplitude*sin(2*pi*B/period + phase) + offset."""

    amplitude: float
    period: float  # T
    phase: float  # rad
    offset: float
    residual_rms: float


@dataclass(frozen=True)
class SensitivityReport:
    eta: float  # T/sqrt(Hz)
    slope: float  # 1/T
    sigma: float
    total_time: float  # s
    n: int
    f_ac: float  # Hz
    protocol: str
    temperature_mode: str

    def __post_init__(self):
        if self.eta <= 0.0:
            raise InvalidArgumentError("eta must be positive")

    def to_dict(self) -> dict:
        return {
            "eta_t_per_sqrt_hz": self.eta,
            "slope_per_tesla": self.slope,
            "sigma": self.sigma,
            "total_time_s": self.total_time,
            "n": self.n,
            "f_ac_hz": self.f_ac,
            "protocol": self.protocol,
            "temperature_mode": self.temperature_mode,
        }


@dataclass(frozen=True)
class TemperatureComparison:
    """Largest-slope comparison between temperature modes.

    ratio = slope_cryo/slope_room, the factor by which cooling steepens
    the signal (>1 whenever relaxation limits the room-temperature
    coherence).
    """

    slope_room: float
    slope_cryo: float
    ratio: float
    protocol: str
    n: int
    f_ac: float

    def to_dict(self) -> dict:
        return {
            "slope_room_per_tesla": self.slope_room,
            "slope_cryo_per_tesla": self.slope_cryo,
            "ratio_cryo_over_room": self.ratio,
            "protocol": self.protocol,
            "n": self.n,
            "f_ac_hz": self.f_ac,
        }


def _point_seed(master: int | None, index: int) -> int:
    """Sub-seed for one sweep point, independent of worker partitioning."""
    ss = np.random.SeedSequence(0 if master is None else master, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _sweep_point(task) -> tuple[float, float]:
    (protocol, n, b, f_ac, field_phase, err, hf, cp, mode, sub_seed,
     realizations, constants, inherit) = task
    field = ACFieldSpec(b, f_ac, field_phase)
    return simulate_signal_stats(
        protocol, n, field, err, hf, cp, mode,
        seed=sub_seed, realizations=realizations,
        constants=constants, phase_inheritance=inherit,
    )


def sweep_amplitude(
    protocol: str,
    n: int,
    f_ac: float,
    b_range: tuple[float, float],
    points: int,
    err: PulseErrorModel,
    hf: HyperfineEnsemble = DEFAULT_ENSEMBLE,
    cp: CoherenceParams | None = None,
    temperature_mode: str = "room",
    field_phase: float = HALF_PI,
    seed: int | None = None,
    realizations: int = 1,
    workers: int = 1,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
    phase_inheritance: str = "absolute",
) -> SignalCurve:
    """Contrast at `points` uniformly spaced amplitudes in b_range.

    Every point is evaluated independently under a sub-seed derived from
    the master seed and the point index, so results are bitwise identical
    for any worker count.
    """
    b_min, b_max = b_range
    if b_min > b_max:
        raise InvalidArgumentError("b_range must satisfy B_min <= B_max")
    if points < 1:
        raise InvalidArgumentError("points must be >= 1")
    if workers < 1:
        raise InvalidArgumentError("workers must be >= 1")
    if seed is not None and seed < 0:
        raise InvalidArgumentError("seed must be non-negative")
    bs = np.linspace(b_min, b_max, points)
    tasks = [
        (protocol, n, float(b), f_ac, field_phase, err, hf, cp,
         temperature_mode, _point_seed(seed, i), realizations, constants,
         phase_inheritance)
        for i, b in enumerate(bs)
    ]
    if workers == 1:
        results = [_sweep_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, tasks))
    return SignalCurve(
        b_values=tuple(float(b) for b in bs),
        contrast=tuple(r[0] for r in results),
        contrast_stderr=tuple(r[1] for r in results),
        protocol=protocol,
        n=n,
        f_ac=f_ac,
        temperature_mode=temperature_mode,
        seed=seed,
    )


def calibrate_amplitude_axis(
    f_ac: float, constants: PhysicalConstants = DEFAULT_CONSTANTS
) -> float:
    """Amplitude change worth one full oscillation per field period:
    delta_B = pi*f_ac/(2*gamma)."""
    if f_ac <= 0.0:
        raise InvalidArgumentError("f_ac must be positive")
    return math.pi * f_ac / (2.0 * constants.gamma)


def ideal_oscillation_period(
    n: int, f_ac: float, constants: PhysicalConstants = DEFAULT_CONSTANTS
) -> float:
    """Ideal-pulse period of the contrast oscillation in B: pi*f/(gamma*n)."""
    if n < 1 or f_ac <= 0.0:
        raise InvalidArgumentError("need n >= 1 and f_ac > 0")
    return math.pi * f_ac / (constants.gamma * n)


def _model(b, amplitude, k, phase, offset):
    return amplitude * np.sin(k * b + phase) + offset


def fit_sinusoid(curve: SignalCurve) -> SinusoidFit:
    """Least-squares sinusoid fit, seeded from the discrete spectrum peak.

    Raises no-signal when the fitted amplitude sits below the noise floor
    (3x the median point stderr, with a tiny absolute fallback for
    noiseless data) and fit-failure when the optimizer does not converge.
    """
    curve.require_fittable()
    b = np.asarray(curve.b_values)
    s = np.asarray(curve.contrast)
    span = b[-1] - b[0]
    centered = s - s.mean()
    scale = max(1.0, float(np.max(np.abs(s))))
    floor = max(3.0 * float(np.median(curve.contrast_stderr)), 1e-9 * scale)

    # spectrum over trial frequencies, finer than the Rayleigh resolution
    n_pts = len(b)
    trial = np.linspace(0.25 / span, 0.6 * n_pts / span, 8 * n_pts)
    phasors = centered @ np.exp(-2j * math.pi * np.outer(b, trial))
    peak = int(np.argmax(np.abs(phasors)))
    amp0 = 2.0 * float(np.abs(phasors[peak])) / n_pts
    if amp0 < floor:
        raise NoSignalError(
            f"no oscillation above the noise floor "
            f"(spectrum amplitude {amp0:.3e}, floor {floor:.3e})"
        )
    k0 = 2.0 * math.pi * float(trial[peak])
    phase0 = float(np.angle(phasors[peak])) + HALF_PI
    p0 = [amp0, k0, phase0, float(s.mean())]

    try:
        with warnings.catch_warnings():
            # covariance is discarded, so a singular estimate is fine
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, _ = curve_fit(_model, b, s, p0=p0, maxfev=20000)
    except RuntimeError as exc:
        resid = float(np.sqrt(np.mean((_model(b, *p0) - s) ** 2)))
        raise FitFailureError(
            f"sinusoid fit did not converge (initial residual rms {resid:.3e}): {exc}"
        ) from exc
    amplitude, k, phase, offset = (float(v) for v in popt)
    if k < 0.0:
        k, amplitude, phase = -k, -amplitude, -phase
    if amplitude < 0.0:
        amplitude, phase = -amplitude, phase + math.pi
    if amplitude < floor:
        raise NoSignalError(
            f"fit amplitude {amplitude:.3e} below the noise floor {floor:.3e}"
        )
    resid = float(np.sqrt(np.mean((_model(b, amplitude, k, phase, offset) - s) ** 2)))
    return SinusoidFit(
        amplitude=amplitude,
        period=2.0 * math.pi / k,
        phase=phase % (2.0 * math.pi),
        offset=offset,
        residual_rms=resid,
    )


def oscillation_amplitude_at(curve: SignalCurve, period: float) -> float:
    """Least-squares amplitude of the component at a known period.

    Solves S ~ a*sin(2*pi*B/period) + b*cos(...) + c and returns
    hypot(a, b).  Unlike fit_sinusoid this does not search for the
    period, so harmonic distortion from strong pulse errors cannot pull
    the estimate away from the fundamental.
    """
    curve.require_fittable()
    if period <= 0.0:
        raise InvalidArgumentError("period must be positive")
    b = np.asarray(curve.b_values)
    s = np.asarray(curve.contrast)
    w = 2.0 * math.pi / period
    design = np.column_stack([np.sin(w * b), np.cos(w * b), np.ones_like(b)])
    coef, *_ = np.linalg.lstsq(design, s, rcond=None)
    return float(math.hypot(coef[0], coef[1]))


def oscillation_period(curve: SignalCurve) -> float:
    """Period (in tesla) of the dominant sinusoidal component."""
    fit = fit_sinusoid(curve)
    span = curve.b_values[-1] - curve.b_values[0]
    if span < 1.5 * fit.period:
        raise InvalidArgumentError(
            f"curve spans {span / fit.period:.2f} periods; need >= 1.5"
        )
    return fit.period


def fit_max_slope(curve: SignalCurve, method: str = "fit") -> float:
    """Largest |dS/dB| of the oscillation.

    method "fit" differentiates the fitted sinusoid (|A|*2*pi/period);
    "finite-difference" takes the largest neighbor slope as a cross-check.
    """
    if method == "fit":
        fit = fit_sinusoid(curve)
        return fit.amplitude * 2.0 * math.pi / fit.period
    if method == "finite-difference":
        curve.require_fittable()
        b = np.asarray(curve.b_values)
        s = np.asarray(curve.contrast)
        return float(np.max(np.abs(np.diff(s) / np.diff(b))))
    raise InvalidArgumentError(f"unknown slope method {method!r}")


def sensitivity_from_curve(
    curve: SignalCurve, sigma: float, total_time: float
) -> SensitivityReport:
    """Experimental sensitivity eta = sigma*sqrt(T)/|max slope|."""
    if sigma <= 0.0:
        raise InvalidArgumentError("sigma must be positive")
    if total_time <= 0.0:
        raise InvalidArgumentError("total_time must be positive")
    slope = fit_max_slope(curve)
    return SensitivityReport(
        eta=sigma * math.sqrt(total_time) / slope,
        slope=slope,
        sigma=sigma,
        total_time=total_time,
        n=curve.n,
        f_ac=curve.f_ac,
        protocol=curve.protocol,
        temperature_mode=curve.temperature_mode,
    )


def shot_noise_sigma(n_photons: float, n_repeats: float = 1.0) -> float:
    """Poisson-limited contrast error sigma = 1/sqrt(N_photons*N_repeats)."""
    if n_photons <= 0.0 or n_repeats <= 0.0:
        raise InvalidArgumentError("photon and repeat counts must be positive")
    return 1.0 / math.sqrt(n_photons * n_repeats)


def sensitivity_theoretical(
    n: int,
    f_ac: float,
    cp: CoherenceParams,
    contrast_model,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
    temperature_mode: str = "room",
) -> float:
    """Shot-noise-limited sensitivity with decoherence penalty.

    eta(n) = prefactor / (C(n)*sqrt(n/(2f))) * exp[(t/T2_eff(n))**p]
    with t = n/(2f); in cryo mode T2_eff(n) is the pure n**s scaling law
    (equivalently exp[(n**(1-s)/(2*T2_hahn*f))**p]).
    """
    if n < 1 or f_ac <= 0.0:
        raise InvalidArgumentError("need n >= 1 and f_ac > 0")
    c = float(contrast_model(n))
    if c <= 0.0:
        raise InvalidArgumentError(f"contrast model returned C({n}) = {c} <= 0")
    if c > 1.0:
        raise InvalidArgumentError(f"contrast model returned C({n}) = {c} > 1")
    t = n / (2.0 * f_ac)
    t2 = t2_effective(n, cp, temperature_mode)
    try:
        penalty = math.exp((t / t2) ** cp.stretch_exponent)
    except OverflowError:
        return math.inf
    return constants.eq_prefactor / (c * math.sqrt(t)) * penalty


def optimize_pulse_number(
    protocol: str,
    f_ac: float,
    cp: CoherenceParams,
    contrast_model,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
    n_max: int = 584,
    temperature_mode: str = "room",
) -> tuple[int, float]:
    """Exhaustive minimum of sensitivity_theoretical over admissible n.

    Ties break toward the smaller pulse number.
    """
    if n_max < 8:
        raise InvalidArgumentError("n_max must be >= 8")
    grid = admissible_pulse_counts(protocol, n_max)
    if not grid:
        raise InvalidArgumentError(f"no admissible pulse counts for {protocol}")
    best_n, best_eta = None, math.inf
    for n in grid:
        eta = sensitivity_theoretical(
            n, f_ac, cp, contrast_model, constants, temperature_mode
        )
        if eta < best_eta:
            best_n, best_eta = n, eta
    if best_n is None:  # every admissible n overflowed the penalty
        raise InvalidArgumentError("sensitivity diverged for all admissible n")
    return best_n, best_eta


def compare_temperatures(
    protocol: str,
    n: int,
    f_ac: float,
    err: PulseErrorModel,
    hf: HyperfineEnsemble,
    cp: CoherenceParams,
    b_range: tuple[float, float] | None = None,
    points: int = 48,
    seed: int | None = None,
    realizations: int = 1,
    workers: int = 1,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> TemperatureComparison:
    """Sweep and fit in both temperature modes; ratio is cryo over room."""
    if b_range is None:
        period = ideal_oscillation_period(n, f_ac, constants)
        b_range = (0.0, 2.0 * period)
    slopes = {}
    for mode in ("room", "cryo"):
        curve = sweep_amplitude(
            protocol, n, f_ac, b_range, points, err, hf, cp, mode,
            seed=seed, realizations=realizations, workers=workers,
            constants=constants,
        )
        slopes[mode] = fit_max_slope(curve)
    return TemperatureComparison(
        slope_room=slopes["room"],
        slope_cryo=slopes["cryo"],
        ratio=slopes["cryo"] / slopes["room"],
        protocol=protocol,
        n=n,
        f_ac=f_ac,
    )


# ---------------------------------------------------------------------------
# contrast models C(n) for the theoretical sensitivity


def unit_contrast(n: int) -> float:
    """C(n) = 1: perfect pulses."""
    return 1.0


def exponential_contrast_model(c0: float = 1.0, n_c: float = 500.0):
    """Phenomenological C(n) = C0*exp(-n/N_c); fast stand-in for the
    simulated model."""
    if not 0.0 < c0 <= 1.0:
        raise InvalidArgumentError("C0 must lie in (0, 1]")
    if n_c <= 0.0:
        raise InvalidArgumentError("N_c must be positive")

    def model(n: int) -> float:
        return max(1e-9, c0 * math.exp(-n / n_c))

    return model


# canonical imperfect-pulse conditions for deriving C(n): the systematic
# miscalibration and hyperfine detunings of the robustness study plus a
# per-pulse jitter channel, which is what actually erodes the contrast of
# self-correcting sequences at large n
MC_CONTRAST_ERRORS = PulseErrorModel(
    angle_error_fraction=0.01,
    rabi_frequency=10e6,
    angle_jitter_std=0.03,
)


class SimulatedContrastModel:
    """C(n) tabulated from Monte Carlo sweeps and smoothed exponentially.

    For each grid pulse count the model sweeps one oscillation period
    near B = 0, averages the Monte Carlo realizations, and extracts the
    oscillation amplitude by linear least squares at the known period.
    A C0*exp(-n/N_c) law fitted through the tabulated points pools the
    Monte Carlo statistics into a smooth curve, which is what the
    optimizer consumes.
    """

    def __init__(
        self,
        protocol: str,
        f_ac: float,
        err: PulseErrorModel = MC_CONTRAST_ERRORS,
        hf: HyperfineEnsemble = DEFAULT_ENSEMBLE,
        constants: PhysicalConstants = DEFAULT_CONSTANTS,
        n_max: int = 584,
        grid: list[int] | None = None,
        b_points: int = 8,
        realizations: int = 12,
        seed: int = 0,
        phase_inheritance: str = "absolute",
    ):
        if grid is None:
            grid = self._default_grid(protocol, n_max)
        if len(grid) < 2:
            raise InvalidArgumentError("contrast tabulation needs >= 2 grid points")
        self.protocol = protocol
        self.f_ac = f_ac
        self.grid = list(grid)
        self.tabulated: dict[int, float] = {}
        for idx, n in enumerate(self.grid):
            self.tabulated[n] = self._amplitude(
                protocol, n, f_ac, err, hf, constants,
                b_points, realizations, seed + idx, phase_inheritance,
            )
        ns = np.array(self.grid, dtype=float)
        logc = np.log(np.maximum(1e-6, [self.tabulated[n] for n in self.grid]))
        slope, intercept = np.polyfit(ns, logc, 1)
        self.n_c = math.inf if slope >= 0.0 else -1.0 / float(slope)
        self.c0 = min(1.0, float(math.exp(intercept)))

    @staticmethod
    def _default_grid(protocol: str, n_max: int) -> list[int]:
        counts = admissible_pulse_counts(protocol, n_max)
        if len(counts) <= 12:
            return counts
        # roughly geometric subset, endpoints always included
        idx = np.unique(
            np.round(np.geomspace(1, len(counts), 12)).astype(int) - 1
        )
        return [counts[i] for i in idx]

    @staticmethod
    def _amplitude(
        protocol, n, f_ac, err, hf, constants, b_points, realizations,
        seed, phase_inheritance,
    ) -> float:
        period = ideal_oscillation_period(n, f_ac, constants)
        bs = np.linspace(0.0, period, b_points)
        sig = [
            simulate_signal_stats(
                protocol, n, ACFieldSpec(float(b), f_ac), err, hf,
                seed=_point_seed(seed, i), realizations=realizations,
                constants=constants, phase_inheritance=phase_inheritance,
            )[0]
            for i, b in enumerate(bs)
        ]
        curve = SignalCurve(
            b_values=tuple(float(b) for b in bs),
            contrast=tuple(sig),
            contrast_stderr=(0.0,) * len(sig),
            protocol=protocol, n=n, f_ac=f_ac, temperature_mode="off",
        )
        amp = oscillation_amplitude_at(curve, period)
        return min(1.0, max(1e-9, amp))

    def __call__(self, n: int) -> float:
        if self.n_c is math.inf:
            return max(1e-9, self.c0)
        return max(1e-9, min(1.0, self.c0 * math.exp(-n / self.n_c)))
