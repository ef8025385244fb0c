"""Dynamical-decoupling pulse sequence generation and timing.

Sequences are built as abstract phase patterns (CPMG, XY8, concatenated
XY8) and then synchronized to an AC field: pulse k of n sits at
t_k = (2k-1)/(4*f), so pulses fall on zero crossings of a field with a
pi/2 initial phase and the inter-pulse spacing is half a field period.
"""

import math
from bisect import bisect_left
from dataclasses import dataclass, field

from .errors import InvalidArgumentError, InvalidTimingError, ResourceLimitError

TWO_PI = 2.0 * math.pi

X_AXIS = 0.0  # rad, in the equatorial plane
Y_AXIS = math.pi / 2.0

# canonical XY8 block: X Y X Y Y X Y X
XY8_BLOCK = (X_AXIS, Y_AXIS, X_AXIS, Y_AXIS, Y_AXIS, X_AXIS, Y_AXIS, X_AXIS)

PROTOCOLS = ("CPMG", "XY8", "CXY8")

# hard cap on generated pulse counts; level-5 concatenation would pass it
MAX_PULSES_DEFAULT = 100_000


@dataclass(frozen=True)
class Pulse:
    """A rotation about an equatorial axis, specified by phase and angle."""

    phase_axis: float  # rad, normalized to [0, 2*pi)
    nominal_angle: float = math.pi  # rad

    def __post_init__(self):
        object.__setattr__(self, "phase_axis", self.phase_axis % TWO_PI)
        if not 0.0 < self.nominal_angle < TWO_PI:
            raise InvalidArgumentError(
                f"nominal_angle must lie in (0, 2*pi), got {self.nominal_angle}"
            )


@dataclass(frozen=True)
class PulseSequence:
    """An ordered pulse list tagged with the protocol that produced it."""

    pulses: tuple[Pulse, ...]
    protocol_tag: str
    concat_level: int | None = None

    def __post_init__(self):
        if self.protocol_tag not in PROTOCOLS:
            raise InvalidArgumentError(f"unknown protocol tag {self.protocol_tag!r}")
        if not self.pulses:
            raise InvalidArgumentError("a sequence needs at least one pulse")
        if self.protocol_tag == "CPMG":
            axis = self.pulses[0].phase_axis
            if any(p.phase_axis != axis for p in self.pulses):
                raise InvalidArgumentError("CPMG pulses must share one axis")
        elif self.protocol_tag == "XY8":
            if len(self.pulses) % 8 != 0:
                raise InvalidArgumentError("XY8 length must be a multiple of 8")
            for i, p in enumerate(self.pulses):
                if p.phase_axis != XY8_BLOCK[i % 8]:
                    raise InvalidArgumentError("XY8 phases must repeat the 8-block")
        else:  # CXY8
            if self.concat_level is None:
                raise InvalidArgumentError("CXY8 sequences carry a concat_level")
            if len(self.pulses) != cxy8_pulse_count(self.concat_level):
                raise InvalidArgumentError(
                    "CXY8 pulse count does not match its concatenation level"
                )

    @property
    def n_pulses(self) -> int:
        return len(self.pulses)

    @property
    def phases(self) -> tuple[float, ...]:
        return tuple(p.phase_axis for p in self.pulses)

    def reversed(self) -> "PulseSequence":
        """Same pulses in reverse time order.

        CPMG and XY8 phase lists are palindromes, so only concatenated
        sequences actually change; their count (the validated property)
        is preserved.
        """
        rev = tuple(reversed(self.pulses))
        if rev == self.pulses:
            return self
        return PulseSequence(rev, self.protocol_tag, self.concat_level)


@dataclass(frozen=True)
class TimedSequence:
    """A pulse sequence with concrete pulse-center times.

    pulse_times holds centers; a finite pulse_duration spreads each
    rotation symmetrically about its center.
    """

    base: PulseSequence
    pulse_times: tuple[float, ...]
    total_time: float  # s
    sync_frequency: float  # Hz
    pulse_duration: float = 0.0  # s

    def __post_init__(self):
        n = len(self.pulse_times)
        if n != self.base.n_pulses:
            raise InvalidTimingError("one time per pulse required")
        if self.pulse_duration < 0.0:
            raise InvalidTimingError("pulse_duration must be non-negative")
        if n * self.pulse_duration >= self.total_time:
            raise InvalidTimingError("pulses do not fit inside total_time")
        for t in self.pulse_times:
            if not (0.0 < t < self.total_time):
                raise InvalidTimingError("pulse centers must lie in (0, total_time)")
        for a, b in zip(self.pulse_times, self.pulse_times[1:]):
            if b <= a:
                raise InvalidTimingError("pulse centers must be strictly increasing")
            if b - a < self.pulse_duration:
                raise InvalidTimingError("pulse windows overlap")
        half = 0.5 * self.pulse_duration
        if self.pulse_times[0] - half < 0.0:
            raise InvalidTimingError("first pulse extends before t = 0")
        if self.pulse_times[-1] + half > self.total_time:
            raise InvalidTimingError("last pulse extends past total_time")

    @property
    def n_pulses(self) -> int:
        return len(self.pulse_times)


def build_cpmg(n: int, phase_axis: float = Y_AXIS) -> PulseSequence:
    """n identical pi-pulses, by default about Y (90 deg from the X init)."""
    if n < 1:
        raise InvalidArgumentError("CPMG needs n >= 1")
    return PulseSequence(tuple(Pulse(phase_axis) for _ in range(n)), "CPMG")


def build_xy8(repeats: int) -> PulseSequence:
    """repeats copies of the 8-pulse block X Y X Y Y X Y X."""
    if repeats < 1:
        raise InvalidArgumentError("XY8 needs repeats >= 1")
    return PulseSequence(
        tuple(Pulse(ph) for _ in range(repeats) for ph in XY8_BLOCK), "XY8"
    )


def cxy8_pulse_count(level: int) -> int:
    """Pulse count of the level-l concatenation: n(l) = 8*n(l-1) + 8, n(0) = 8."""
    if level < 0:
        raise InvalidArgumentError("concatenation level must be >= 0")
    return (64 * 8**level - 8) // 7


def build_cxy8(
    level: int,
    phase_inheritance: str = "absolute",
    max_pulses: int = MAX_PULSES_DEFAULT,
) -> PulseSequence:
    """Concatenated XY8: one inner level-(l-1) copy before each skeleton pulse.

    Level l distributes eight full level-(l-1) sequences over the eight
    inter-pulse slots of an XY8 skeleton (the slot after the last pulse
    stays empty), giving n(l) = 8*n(l-1) + 8.

    phase_inheritance selects how embedded copies are phased:
      "absolute": inner pulses keep their own axes (default)
      "relative": inner axes are shifted by the enclosing skeleton pulse
    """
    if phase_inheritance not in ("absolute", "relative"):
        raise InvalidArgumentError(
            f"phase_inheritance must be 'absolute' or 'relative', got {phase_inheritance!r}"
        )
    count = cxy8_pulse_count(level)
    if count > max_pulses:
        raise ResourceLimitError(
            f"level {level} concatenation needs {count} pulses, cap is {max_pulses}"
        )
    pulses = _cxy8_pulses(level, phase_inheritance)
    return PulseSequence(tuple(pulses), "CXY8", concat_level=level)


def _cxy8_pulses(level: int, phase_inheritance: str) -> list[Pulse]:
    if level == 0:
        return [Pulse(ph) for ph in XY8_BLOCK]
    inner = _cxy8_pulses(level - 1, phase_inheritance)
    out: list[Pulse] = []
    for skeleton_phase in XY8_BLOCK:
        if phase_inheritance == "relative" and skeleton_phase != 0.0:
            out.extend(
                Pulse(p.phase_axis + skeleton_phase, p.nominal_angle) for p in inner
            )
        else:
            out.extend(inner)
        out.append(Pulse(skeleton_phase))
    return out


def cxy8_level_for_count(n: int) -> int:
    """Inverse of cxy8_pulse_count; rejects non-admissible counts."""
    level, count = 0, 8
    while count < n:
        level += 1
        count = 8 * count + 8
    if count != n:
        raise InvalidArgumentError(
            f"{n} is not an admissible concatenated-XY8 pulse count"
        )
    return level


def build_sequence(protocol: str, n: int, **kwargs) -> PulseSequence:
    """Build any protocol by pulse count (CXY8 counts map back to levels)."""
    if protocol == "CPMG":
        return build_cpmg(n)
    if protocol == "XY8":
        if n % 8 != 0:
            raise InvalidArgumentError("XY8 pulse count must be a multiple of 8")
        return build_xy8(n // 8)
    if protocol == "CXY8":
        return build_cxy8(cxy8_level_for_count(n), **kwargs)
    raise InvalidArgumentError(f"unknown protocol {protocol!r}")


def admissible_pulse_counts(protocol: str, n_max: int) -> list[int]:
    """All pulse counts the protocol can realize, up to n_max inclusive."""
    if n_max < 1:
        raise InvalidArgumentError("n_max must be >= 1")
    if protocol == "CPMG":
        return list(range(1, n_max + 1))
    if protocol == "XY8":
        return list(range(8, n_max + 1, 8))
    if protocol == "CXY8":
        counts, level = [], 0
        while cxy8_pulse_count(level) <= n_max:
            counts.append(cxy8_pulse_count(level))
            level += 1
        return counts
    raise InvalidArgumentError(f"unknown protocol {protocol!r}")


def synchronize(
    seq: PulseSequence, f_ac: float, pulse_duration: float = 0.0
) -> TimedSequence:
    """Place pulse k at (2k-1)/(4*f_ac); total time is n/(2*f_ac).

    The spacing between centers is half a field period, with half-spacing
    margins at both ends, so the grid is symmetric about total_time/2.
    """
    if f_ac <= 0.0:
        raise InvalidArgumentError("synchronization frequency must be positive")
    if pulse_duration < 0.0:
        raise InvalidTimingError("pulse_duration must be non-negative")
    tau = 1.0 / (2.0 * f_ac)
    if pulse_duration >= tau:
        raise InvalidTimingError(
            f"pulse_duration {pulse_duration} s does not fit the "
            f"{tau} s inter-pulse spacing at {f_ac} Hz"
        )
    n = seq.n_pulses
    times = tuple((2 * k - 1) / (4.0 * f_ac) for k in range(1, n + 1))
    return TimedSequence(
        base=seq,
        pulse_times=times,
        total_time=n / (2.0 * f_ac),
        sync_frequency=f_ac,
        pulse_duration=pulse_duration,
    )


def toggling_sign(ts: TimedSequence, t: float) -> int:
    """Toggling-frame sign at time t: +1 before the first pulse center,
    flipping at every center (left-continuous at the centers)."""
    if not 0.0 <= t <= ts.total_time:
        raise InvalidArgumentError("t outside [0, total_time]")
    flips = bisect_left(ts.pulse_times, t)
    return 1 if flips % 2 == 0 else -1


def toggling_intervals(ts: TimedSequence) -> list[tuple[float, float, int]]:
    """(start, end, sign) pieces between pulse centers covering [0, T]."""
    edges = (0.0,) + ts.pulse_times + (ts.total_time,)
    return [
        (edges[i], edges[i + 1], 1 if i % 2 == 0 else -1)
        for i in range(len(edges) - 1)
    ]


def format_timing_table(ts: TimedSequence) -> str:
    """Tab-separated timing table, one row per pulse.

    Floats carry 17 significant digits so every value parses back to the
    identical double.
    """
    lines = ["#index\ttime_s\tphase_rad\tangle_rad"]
    for i, (t, p) in enumerate(zip(ts.pulse_times, ts.base.pulses), start=1):
        lines.append(f"{i}\t{t:.16e}\t{p.phase_axis:.16e}\t{p.nominal_angle:.16e}")
    return "\n".join(lines) + "\n"


def write_timing_table(ts: TimedSequence, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_timing_table(ts))
