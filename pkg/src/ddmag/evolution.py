"""Bloch-vector evolution through a synchronized pulse sequence.

The spin is a two-level system in the drive rotating frame.  Free
precession about z follows the instantaneous rate 2*pi*gamma*B(t) with
B(t) = B_ac*sin(2*pi*f*t + phi0); each interval is integrated in closed
form, so there is no time-stepping error.  Pulses are rotations generated
by a resonant drive of Rabi frequency Omega along an equatorial axis plus
a detuning term along z, applied for t_p = angle/(2*pi*Omega).  A finite
pulse freezes the AC field at its center value for the pulse window.
"""

import math
from dataclasses import dataclass

import numpy as np

from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .errors import InvalidArgumentError
from .sequences import TimedSequence, build_sequence, synchronize, toggling_intervals

TWO_PI = 2.0 * math.pi

TEMPERATURE_MODES = ("room", "cryo")


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "BlochVector":
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    @classmethod
    def equatorial(cls, axis: float) -> "BlochVector":
        """Unit vector in the equatorial plane at the given phase angle."""
        return cls(math.cos(axis), math.sin(axis), 0.0)


@dataclass(frozen=True)
class ACFieldSpec:
    """Oscillating field B(t) = amplitude*sin(2*pi*frequency*t + phase).

    The default phase pi/2 puts the synchronized pulse centers on the
    field zero crossings, which maximizes the accumulated phase.
    """

    amplitude: float  # T, >= 0
    frequency: float  # Hz
    phase: float = math.pi / 2.0  # rad

    def __post_init__(self):
        if self.amplitude < 0.0:
            raise InvalidArgumentError("field amplitude must be >= 0")
        if self.frequency <= 0.0:
            raise InvalidArgumentError("field frequency must be positive")
        if not 0.0 <= self.phase < TWO_PI:
            raise InvalidArgumentError("field phase must lie in [0, 2*pi)")

    def value(self, t: float) -> float:
        return self.amplitude * math.sin(TWO_PI * self.frequency * t + self.phase)


@dataclass(frozen=True)
class PulseErrorModel:
    """Pulse imperfections, each channel individually switchable.

    angle_error_fraction: realized rotation angle is nominal*(1 + eps)
    angle_jitter_std: per-pulse Gaussian spread added to eps, drawn fresh
        for every pulse of every Monte Carlo realization (uncompensated
        by any sequence, unlike the systematic channels)
    phase_error: static offset added to every pulse axis, rad
    rabi_frequency: drive strength Omega in Hz; with the finite-duration
        channel enabled a pulse of nominal angle theta lasts
        t_p = theta/(2*pi*Omega) and detuning tilts its rotation axis
    """

    angle_error_fraction: float = 0.0
    phase_error: float = 0.0
    rabi_frequency: float = 10e6  # Hz
    angle_jitter_std: float = 0.0
    angle_error_enabled: bool = True
    phase_error_enabled: bool = True
    finite_duration_enabled: bool = True

    def __post_init__(self):
        if abs(self.angle_error_fraction) >= 1.0:
            raise InvalidArgumentError("|angle_error_fraction| must be < 1")
        if self.angle_jitter_std < 0.0:
            raise InvalidArgumentError("angle_jitter_std must be >= 0")
        if self.finite_duration_enabled and self.rabi_frequency <= 0.0:
            raise InvalidArgumentError(
                "finite pulse duration requires a positive rabi_frequency"
            )

    @classmethod
    def ideal(cls) -> "PulseErrorModel":
        """Instantaneous, perfectly calibrated pulses."""
        return cls(
            angle_error_fraction=0.0,
            phase_error=0.0,
            angle_jitter_std=0.0,
            angle_error_enabled=False,
            phase_error_enabled=False,
            finite_duration_enabled=False,
        )

    @property
    def pi_pulse_duration(self) -> float:
        """Wall-clock length of a nominal pi pulse (0 when instantaneous)."""
        if not self.finite_duration_enabled:
            return 0.0
        return 0.5 / self.rabi_frequency

    @property
    def is_stochastic(self) -> bool:
        return self.angle_error_enabled and self.angle_jitter_std > 0.0


@dataclass(frozen=True)
class HyperfineEnsemble:
    """Weighted detuning lines the signal is averaged over.

    lines holds (detuning_hz, weight) pairs; weights are positive and
    sum to one.
    """

    lines: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.lines:
            raise InvalidArgumentError("ensemble needs at least one line")
        total = 0.0
        for _, w in self.lines:
            if w <= 0.0:
                raise InvalidArgumentError("line weights must be positive")
            total += w
        if abs(total - 1.0) > 1e-9:
            raise InvalidArgumentError(f"line weights must sum to 1, got {total}")

    @classmethod
    def single(cls, detuning: float = 0.0) -> "HyperfineEnsemble":
        return cls(((detuning, 1.0),))

    @classmethod
    def nitrogen14(cls, splitting: float = 2.16e6) -> "HyperfineEnsemble":
        """Equal-weight hyperfine triplet at -A, 0, +A (default A = 2.16 MHz)."""
        w = 1.0 / 3.0
        return cls(((-splitting, w), (0.0, w), (splitting, w)))

    @property
    def detunings(self) -> np.ndarray:
        return np.array([d for d, _ in self.lines], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.lines], dtype=float)


DEFAULT_ENSEMBLE = HyperfineEnsemble.nitrogen14()


@dataclass(frozen=True)
class CoherenceParams:
    """Decoherence model parameters.

    The coherence time under an n-pulse sequence scales as
    t2_hahn * n**scaling_exponent; at room temperature it additionally
    saturates at t1_coupling * t1 (harmonic sum), while at cryogenic
    temperature the relaxation channel is negligible.  Decay follows a
    stretched exponential with exponent stretch_exponent.
    """

    t2_hahn: float = 270e-6  # s, single-echo coherence time
    t1: float = 5e-3  # s
    scaling_exponent: float = math.log(4000.0 / 270.0) / math.log(48.0)  # ~0.70
    stretch_exponent: float = 0.8
    t1_coupling: float = 1.0 / 3.0

    def __post_init__(self):
        if self.t2_hahn <= 0.0 or self.t1 <= 0.0:
            raise InvalidArgumentError("coherence times must be positive")
        if self.scaling_exponent < 0.0:
            raise InvalidArgumentError("scaling_exponent must be >= 0")
        if self.stretch_exponent <= 0.0:
            raise InvalidArgumentError("stretch_exponent must be positive")
        if self.t1_coupling <= 0.0:
            raise InvalidArgumentError("t1_coupling must be positive")


def _check_mode(temperature_mode: str) -> None:
    if temperature_mode not in TEMPERATURE_MODES:
        raise InvalidArgumentError(
            f"temperature_mode must be one of {TEMPERATURE_MODES}, "
            f"got {temperature_mode!r}"
        )


def t2_effective(n: int, cp: CoherenceParams, temperature_mode: str = "room") -> float:
    """Effective coherence time under an n-pulse sequence.

    cryo: t2_hahn * n**s
    room: harmonic sum of the cryo value with t1_coupling * t1
    """
    _check_mode(temperature_mode)
    if n < 1:
        raise InvalidArgumentError("pulse number must be >= 1")
    coh = cp.t2_hahn * float(n) ** cp.scaling_exponent
    if temperature_mode == "cryo":
        return coh
    return 1.0 / (1.0 / coh + 1.0 / (cp.t1_coupling * cp.t1))


def coherence_envelope(
    n: int, total_time: float, cp: CoherenceParams, temperature_mode: str = "room"
) -> float:
    """Multiplicative decay exp[-(t/T2_eff(n))**p] at t = total_time."""
    if total_time < 0.0:
        raise InvalidArgumentError("total_time must be >= 0")
    t2 = t2_effective(n, cp, temperature_mode)
    return math.exp(-((total_time / t2) ** cp.stretch_exponent))


def _pulse_axis_angle(pulse, err: PulseErrorModel, detuning, eps=None):
    """Rotation axis (unit) and angle for one pulse; detuning may be an array.

    Finite-duration channel on: generator is the drive Omega*(1+eps) along
    the (possibly phase-shifted) equatorial axis plus detuning along z,
    applied for t_p = nominal_angle/(2*pi*Omega).
    Off: exact rotation by nominal*(1+eps) about the equatorial axis;
    detuning has no effect in zero time.

    eps overrides the model's systematic angle-error fraction (used for
    per-pulse Monte Carlo draws).
    """
    if eps is None:
        eps = err.angle_error_fraction if err.angle_error_enabled else 0.0
    phi = pulse.phase_axis + (err.phase_error if err.phase_error_enabled else 0.0)
    if not err.finite_duration_enabled:
        axis = np.array([math.cos(phi), math.sin(phi), 0.0])
        return axis, pulse.nominal_angle * (1.0 + eps)
    omega = err.rabi_frequency * (1.0 + eps)
    t_p = pulse.nominal_angle / (TWO_PI * err.rabi_frequency)
    delta = np.asarray(detuning, dtype=float)
    w = np.hypot(omega, delta)
    angle = TWO_PI * w * t_p
    safe = np.where(w > 0.0, w, 1.0)
    axis = np.stack(
        np.broadcast_arrays(
            omega * math.cos(phi) / safe,
            omega * math.sin(phi) / safe,
            delta / safe,
        ),
        axis=-1,
    )
    return axis, angle


def pulse_rotation(pulse, err: PulseErrorModel, detuning: float = 0.0) -> np.ndarray:
    """3x3 rotation matrix the pulse applies to a Bloch vector."""
    axis, angle = _pulse_axis_angle(pulse, err, float(detuning))
    axis = np.asarray(axis, dtype=float).reshape(3)
    angle = float(angle)
    k = axis
    kx = np.array(
        [[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]]
    )
    return (
        math.cos(angle) * np.eye(3)
        + math.sin(angle) * kx
        + (1.0 - math.cos(angle)) * np.outer(k, k)
    )


def _rotate_axis_angle(v: np.ndarray, axis, angle) -> np.ndarray:
    """Rodrigues rotation of row vectors v about (broadcastable) axes."""
    axis = np.asarray(axis, dtype=float)
    c = np.cos(angle)
    s = np.sin(angle)
    if axis.ndim == 1:
        cross = np.cross(np.broadcast_to(axis, v.shape), v)
        dot = v @ axis
    else:
        cross = np.cross(axis, v)
        dot = np.sum(axis * v, axis=-1)
    c = np.asarray(c)[..., None] if np.ndim(c) else c
    s = np.asarray(s)[..., None] if np.ndim(s) else s
    one_c = 1.0 - c
    return v * c + cross * s + axis * (np.asarray(dot)[..., None] * one_c)


def _rotate_z(v: np.ndarray, theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    out = np.empty_like(v)
    out[..., 0] = c * v[..., 0] - s * v[..., 1]
    out[..., 1] = s * v[..., 0] + c * v[..., 1]
    out[..., 2] = v[..., 2]
    return out


def _free_unit_integrals(ts: TimedSequence, field: ACFieldSpec, gamma: float):
    """Per-interval z-rotation angle per tesla of field amplitude.

    Intervals run between pulse-window edges (centers when the schedule
    has zero pulse_duration); the closed-form integral of the sinusoid
    makes each angle exact.
    """
    half = 0.5 * ts.pulse_duration
    starts = np.concatenate(([0.0], np.asarray(ts.pulse_times) + half))
    ends = np.concatenate((np.asarray(ts.pulse_times) - half, [ts.total_time]))
    w = TWO_PI * field.frequency
    return (gamma / field.frequency) * (
        np.cos(w * starts + field.phase) - np.cos(w * ends + field.phase)
    )


def _evolve_ensemble(
    ts: TimedSequence,
    field: ACFieldSpec,
    err: PulseErrorModel,
    detunings: np.ndarray,
    init: np.ndarray,
    gamma: float,
    pulse_eps: np.ndarray | None = None,
) -> np.ndarray:
    """Evolve one Bloch vector per detuning line; returns (K, 3) finals.

    pulse_eps, when given, holds one realized angle-error fraction per
    pulse (a Monte Carlo draw); otherwise the model's systematic value
    applies to every pulse.
    """
    units = _free_unit_integrals(ts, field, gamma)
    thetas = units * field.amplitude
    v = np.tile(np.asarray(init, dtype=float), (len(detunings), 1))
    eps_of = (lambda k: None) if pulse_eps is None else (lambda k: pulse_eps[k])
    if err.finite_duration_enabled:
        # field frozen at its pulse-center value joins the detuning
        centers = np.asarray(ts.pulse_times)
        frozen = gamma * field.amplitude * np.sin(
            TWO_PI * field.frequency * centers + field.phase
        )
        for k, pulse in enumerate(ts.base.pulses):
            v = _rotate_z(v, thetas[k])
            axis, angle = _pulse_axis_angle(
                pulse, err, detunings + frozen[k], eps_of(k)
            )
            v = _rotate_axis_angle(v, axis, angle)
    else:
        for k, pulse in enumerate(ts.base.pulses):
            v = _rotate_z(v, thetas[k])
            axis, angle = _pulse_axis_angle(pulse, err, 0.0, eps_of(k))
            v = _rotate_axis_angle(v, axis, angle)
    return _rotate_z(v, thetas[-1])


def evolve_coherent(
    ts: TimedSequence,
    field: ACFieldSpec,
    err: PulseErrorModel,
    detuning: float,
    init: BlochVector,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> BlochVector:
    """Propagate one Bloch vector through the full timed sequence."""
    if abs(init.norm - 1.0) > 1e-9:
        raise InvalidArgumentError("initial Bloch vector must be unit length")
    final = _evolve_ensemble(
        ts, field, err, np.array([detuning], dtype=float),
        init.as_array(), constants.gamma,
    )
    return BlochVector.from_array(final[0])


def accumulated_phase_analytic(
    ts: TimedSequence,
    field: ACFieldSpec,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> float:
    """Toggling-frame phase 2*pi*gamma*integral(s(t)*B(t) dt), closed form.

    Sign flips happen at the pulse centers (instantaneous idealization,
    independent of any finite pulse_duration on the schedule).
    """
    w = TWO_PI * field.frequency
    scale = constants.gamma * field.amplitude / field.frequency
    phase = 0.0
    for a, b, sign in toggling_intervals(ts):
        phase += sign * scale * (
            math.cos(w * a + field.phase) - math.cos(w * b + field.phase)
        )
    return phase


def readout_contrast(final: BlochVector, init_axis: float = 0.0) -> float:
    """Projection onto the equatorial axis 90 deg ahead of the init axis."""
    a = init_axis + math.pi / 2.0
    return math.cos(a) * final.x + math.sin(a) * final.y


def _realized_pulse_eps(
    err: PulseErrorModel, n: int, seed, realizations: int
) -> list[np.ndarray | None]:
    """Per-pulse angle-error draws, one array per Monte Carlo realization.

    Deterministic in the seed; a purely systematic model yields a single
    None entry (no draws consumed), so the fast path stays untouched.
    """
    if realizations < 1:
        raise InvalidArgumentError("realizations must be >= 1")
    if not err.is_stochastic:
        return [None]
    rng = np.random.default_rng(np.random.SeedSequence(0 if seed is None else seed))
    draws = rng.normal(
        err.angle_error_fraction, err.angle_jitter_std, (realizations, n)
    )
    # keep every realized fraction a legal angle scale
    return list(np.clip(draws, -0.999999, 0.999999))


def simulate_signal_stats(
    protocol: str,
    n: int,
    field: ACFieldSpec,
    err: PulseErrorModel,
    hf: HyperfineEnsemble = DEFAULT_ENSEMBLE,
    cp: CoherenceParams | None = None,
    temperature_mode: str = "room",
    seed: int | None = None,
    realizations: int = 1,
    init_axis: float = 0.0,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
    phase_inheritance: str = "absolute",
) -> tuple[float, float]:
    """Ensemble-averaged readout contrast and its standard error.

    The coherent signal is the weighted average over the detuning lines
    (and over Monte Carlo error realizations when the error model has a
    stochastic channel); the decoherence envelope multiplies the result
    when coherence parameters are given.
    """
    _check_mode(temperature_mode)
    kwargs = {"phase_inheritance": phase_inheritance} if protocol == "CXY8" else {}
    seq = build_sequence(protocol, n, **kwargs)
    ts = synchronize(seq, field.frequency, err.pi_pulse_duration)
    init = BlochVector.equatorial(init_axis).as_array()
    weights = hf.weights
    detunings = hf.detunings
    means = []
    a = init_axis + math.pi / 2.0
    proj = np.array([math.cos(a), math.sin(a), 0.0])
    for eps in _realized_pulse_eps(err, n, seed, realizations):
        finals = _evolve_ensemble(
            ts, field, err, detunings, init, constants.gamma, pulse_eps=eps
        )
        means.append(float(weights @ (finals @ proj)))
    mean = float(np.mean(means))
    stderr = (
        float(np.std(means, ddof=1) / math.sqrt(len(means))) if len(means) > 1 else 0.0
    )
    if cp is not None:
        env = coherence_envelope(n, ts.total_time, cp, temperature_mode)
        mean *= env
        stderr *= env
    return mean, stderr


def simulate_signal(
    protocol: str,
    n: int,
    field: ACFieldSpec,
    err: PulseErrorModel,
    hf: HyperfineEnsemble = DEFAULT_ENSEMBLE,
    cp: CoherenceParams | None = None,
    temperature_mode: str = "room",
    seed: int | None = None,
    realizations: int = 1,
    init_axis: float = 0.0,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
    phase_inheritance: str = "absolute",
) -> float:
    """Expected readout contrast for one field amplitude (see stats variant)."""
    mean, _ = simulate_signal_stats(
        protocol, n, field, err, hf, cp, temperature_mode,
        seed, realizations, init_axis, constants, phase_inheritance,
    )
    return mean
