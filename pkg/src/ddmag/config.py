"""Run-configuration loading and strict validation.

Configs are YAML with nested blocks.  Every physical quantity carries an
explicit unit suffix in its key (t2_hahn_us, f_ac_khz, b_max_ut, ...) and
is converted to SI here, so nothing downstream ever sees a bare number of
ambiguous scale.  Unknown keys are rejected outright; a typo'd key must
fail loudly instead of silently falling back to a default.
"""

import math
from dataclasses import dataclass, field

import yaml

from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .errors import ConfigError
from .evolution import (
    CoherenceParams,
    HyperfineEnsemble,
    PulseErrorModel,
)
from .sequences import PROTOCOLS

TEMPERATURE_MODES = ("off", "room", "cryo")
CONTRAST_KINDS = ("unit", "exponential", "simulated")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run parameters plus the expanded config mapping."""

    protocols: tuple[str, ...]
    n: int
    f_ac: float  # Hz
    b_min: float  # T
    b_max: float  # T
    points: int
    temperature_mode: str  # off | room | cryo
    field_phase: float  # rad
    realizations: int
    seed: int | None
    phase_inheritance: str
    errors: PulseErrorModel
    hyperfine: HyperfineEnsemble
    coherence: CoherenceParams
    constants: PhysicalConstants
    sigma: float
    total_time: float  # s
    frequencies: tuple[float, ...]  # Hz
    n_max: int
    contrast_kind: str
    contrast_c0: float
    contrast_nc: float
    mc_realizations: int
    mc_b_points: int
    resolved: dict = field(compare=False, repr=False, default_factory=dict)


def _require_mapping(value, path: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{path} must be a mapping")
    return value


def _reject_unknown(section: dict, allowed: set[str], path: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {path}: {', '.join(unknown)}")


def _number(section: dict, key: str, default: float, path: str) -> float:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key} must be a number")
    return float(value)


def _integer(section: dict, key: str, default: int, path: str) -> int:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key} must be an integer")
    return value


def _boolean(section: dict, key: str, default: bool, path: str) -> bool:
    value = section.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{path}.{key} must be true or false")
    return value


def _string(section: dict, key: str, default: str, path: str, choices=None) -> str:
    value = section.get(key, default)
    if not isinstance(value, str):
        raise ConfigError(f"{path}.{key} must be a string")
    if choices is not None and value not in choices:
        raise ConfigError(
            f"{path}.{key} must be one of {', '.join(choices)} (got {value!r})"
        )
    return value


def _number_list(section: dict, key: str, default: list, path: str) -> list[float]:
    value = section.get(key, default)
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{path}.{key} must be a non-empty list of numbers")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{path}.{key} must contain only numbers")
        out.append(float(v))
    return out


def load_config(source, seed_override: int | None = None) -> RunConfig:
    """Parse and validate a config from a YAML path or a pre-parsed mapping.

    seed_override (from the command line) wins over the file's seed.
    """
    if isinstance(source, dict):
        raw = source
    else:
        try:
            with open(source, "r", encoding="utf-8") as fh:
                raw = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from exc
    raw = _require_mapping(raw, "config")
    _reject_unknown(
        raw,
        {"experiment", "errors", "hyperfine", "sample", "analysis", "optimize"},
        "config",
    )

    exp = _require_mapping(raw.get("experiment"), "experiment")
    _reject_unknown(
        exp,
        {"protocol", "n", "f_ac_khz", "b_min_ut", "b_max_ut", "points",
         "temperature_mode", "field_phase_rad", "realizations", "seed",
         "phase_inheritance"},
        "experiment",
    )
    protocol = exp.get("protocol", "XY8")
    if isinstance(protocol, str):
        protocols = (protocol,)
    elif isinstance(protocol, (list, tuple)) and all(isinstance(p, str) for p in protocol):
        protocols = tuple(protocol)
    else:
        raise ConfigError("experiment.protocol must be a string or list of strings")
    for p in protocols:
        if p not in PROTOCOLS:
            raise ConfigError(
                f"experiment.protocol must be one of {', '.join(PROTOCOLS)} (got {p!r})"
            )
    if not protocols:
        raise ConfigError("experiment.protocol must name at least one protocol")
    n = _integer(exp, "n", 72, "experiment")
    f_ac = _number(exp, "f_ac_khz", 100.0, "experiment") * 1e3
    b_min = _number(exp, "b_min_ut", 0.0, "experiment") * 1e-6
    b_max = _number(exp, "b_max_ut", 2.0, "experiment") * 1e-6
    points = _integer(exp, "points", 48, "experiment")
    if exp.get("temperature_mode") is False:  # YAML 1.1 reads bare `off` as false
        exp = {**exp, "temperature_mode": "off"}
    mode = _string(exp, "temperature_mode", "off", "experiment", TEMPERATURE_MODES)
    field_phase = _number(exp, "field_phase_rad", math.pi / 2.0, "experiment")
    realizations = _integer(exp, "realizations", 1, "experiment")
    seed = exp.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ConfigError("experiment.seed must be an integer")
    if seed_override is not None:
        seed = seed_override
    if seed is not None and seed < 0:
        raise ConfigError("experiment.seed must be non-negative")
    inherit = _string(
        exp, "phase_inheritance", "absolute", "experiment", ("absolute", "relative")
    )

    err_raw = _require_mapping(raw.get("errors"), "errors")
    _reject_unknown(
        err_raw,
        {"angle_error_fraction", "phase_error_rad", "rabi_mhz",
         "angle_jitter_std", "angle_error_enabled", "phase_error_enabled",
         "finite_duration_enabled"},
        "errors",
    )
    errors = PulseErrorModel(
        angle_error_fraction=_number(err_raw, "angle_error_fraction", 0.0, "errors"),
        phase_error=_number(err_raw, "phase_error_rad", 0.0, "errors"),
        rabi_frequency=_number(err_raw, "rabi_mhz", 10.0, "errors") * 1e6,
        angle_jitter_std=_number(err_raw, "angle_jitter_std", 0.0, "errors"),
        angle_error_enabled=_boolean(err_raw, "angle_error_enabled", True, "errors"),
        phase_error_enabled=_boolean(err_raw, "phase_error_enabled", True, "errors"),
        finite_duration_enabled=_boolean(
            err_raw, "finite_duration_enabled", True, "errors"
        ),
    )

    hf_raw = _require_mapping(raw.get("hyperfine"), "hyperfine")
    _reject_unknown(hf_raw, {"lines_mhz", "weights"}, "hyperfine")
    lines = _number_list(hf_raw, "lines_mhz", [-2.16, 0.0, 2.16], "hyperfine")
    default_w = [1.0 / len(lines)] * len(lines)
    weights = _number_list(hf_raw, "weights", default_w, "hyperfine")
    if len(weights) != len(lines):
        raise ConfigError("hyperfine.weights must match lines_mhz in length")
    total = sum(weights)
    if total <= 0.0:
        raise ConfigError("hyperfine.weights must sum to a positive value")
    hyperfine = HyperfineEnsemble(
        lines=tuple(
            (line * 1e6, w / total) for line, w in zip(lines, weights)
        )
    )

    sample = _require_mapping(raw.get("sample"), "sample")
    _reject_unknown(
        sample,
        {"t2_hahn_us", "t1_ms", "scaling_exponent", "stretch_exponent",
         "t1_coupling", "gamma_ghz_per_t"},
        "sample",
    )
    defaults = CoherenceParams()
    coherence = CoherenceParams(
        t2_hahn=_number(sample, "t2_hahn_us", defaults.t2_hahn * 1e6, "sample") * 1e-6,
        t1=_number(sample, "t1_ms", defaults.t1 * 1e3, "sample") * 1e-3,
        scaling_exponent=_number(
            sample, "scaling_exponent", defaults.scaling_exponent, "sample"
        ),
        stretch_exponent=_number(
            sample, "stretch_exponent", defaults.stretch_exponent, "sample"
        ),
        t1_coupling=_number(sample, "t1_coupling", defaults.t1_coupling, "sample"),
    )
    gamma = _number(
        sample, "gamma_ghz_per_t", DEFAULT_CONSTANTS.gamma / 1e9, "sample"
    ) * 1e9
    constants = (
        DEFAULT_CONSTANTS
        if gamma == DEFAULT_CONSTANTS.gamma
        else PhysicalConstants.from_gamma(gamma)
    )

    analysis = _require_mapping(raw.get("analysis"), "analysis")
    _reject_unknown(
        analysis,
        {"sigma", "n_photons", "n_repeats", "total_time_s"},
        "analysis",
    )
    n_photons = analysis.get("n_photons")
    if n_photons is not None:
        n_photons = _number(analysis, "n_photons", 0.0, "analysis")
        n_repeats = _number(analysis, "n_repeats", 1.0, "analysis")
        if n_photons <= 0.0 or n_repeats <= 0.0:
            raise ConfigError("analysis.n_photons and n_repeats must be positive")
        sigma = 1.0 / math.sqrt(n_photons * n_repeats)
        if "sigma" in analysis:
            raise ConfigError("analysis: give sigma or n_photons, not both")
    else:
        sigma = _number(analysis, "sigma", 0.01, "analysis")
    total_time = _number(analysis, "total_time_s", 1.0, "analysis")
    if sigma <= 0.0 or total_time <= 0.0:
        raise ConfigError("analysis.sigma and total_time_s must be positive")

    opt = _require_mapping(raw.get("optimize"), "optimize")
    _reject_unknown(
        opt,
        {"frequencies_khz", "n_max", "contrast_model", "contrast_c0",
         "contrast_nc_pulses", "mc_realizations", "mc_b_points"},
        "optimize",
    )
    frequencies = tuple(
        f * 1e3
        for f in _number_list(opt, "frequencies_khz", [10.0, 25.0, 100.0, 250.0], "optimize")
    )
    n_max = _integer(opt, "n_max", 584, "optimize")
    contrast_kind = _string(opt, "contrast_model", "exponential", "optimize", CONTRAST_KINDS)
    contrast_c0 = _number(opt, "contrast_c0", 1.0, "optimize")
    contrast_nc = _number(opt, "contrast_nc_pulses", 500.0, "optimize")
    mc_realizations = _integer(opt, "mc_realizations", 12, "optimize")
    mc_b_points = _integer(opt, "mc_b_points", 8, "optimize")

    resolved = {
        "experiment": {
            "protocol": list(protocols),
            "n": n,
            "f_ac_khz": f_ac / 1e3,
            "b_min_ut": b_min / 1e-6,
            "b_max_ut": b_max / 1e-6,
            "points": points,
            "temperature_mode": mode,
            "field_phase_rad": field_phase,
            "realizations": realizations,
            "seed": seed,
            "phase_inheritance": inherit,
        },
        "errors": {
            "angle_error_fraction": errors.angle_error_fraction,
            "phase_error_rad": errors.phase_error,
            "rabi_mhz": errors.rabi_frequency / 1e6,
            "angle_jitter_std": errors.angle_jitter_std,
            "angle_error_enabled": errors.angle_error_enabled,
            "phase_error_enabled": errors.phase_error_enabled,
            "finite_duration_enabled": errors.finite_duration_enabled,
        },
        "hyperfine": {
            "lines_mhz": [line / 1e6 for line, _ in hyperfine.lines],
            "weights": [w for _, w in hyperfine.lines],
        },
        "sample": {
            "t2_hahn_us": coherence.t2_hahn * 1e6,
            "t1_ms": coherence.t1 * 1e3,
            "scaling_exponent": coherence.scaling_exponent,
            "stretch_exponent": coherence.stretch_exponent,
            "t1_coupling": coherence.t1_coupling,
            "gamma_ghz_per_t": constants.gamma / 1e9,
        },
        "analysis": {
            "sigma": sigma,
            "total_time_s": total_time,
        },
        "optimize": {
            "frequencies_khz": [f / 1e3 for f in frequencies],
            "n_max": n_max,
            "contrast_model": contrast_kind,
            "contrast_c0": contrast_c0,
            "contrast_nc_pulses": contrast_nc,
            "mc_realizations": mc_realizations,
            "mc_b_points": mc_b_points,
        },
    }

    return RunConfig(
        protocols=protocols,
        n=n,
        f_ac=f_ac,
        b_min=b_min,
        b_max=b_max,
        points=points,
        temperature_mode=mode,
        field_phase=field_phase,
        realizations=realizations,
        seed=seed,
        phase_inheritance=inherit,
        errors=errors,
        hyperfine=hyperfine,
        coherence=coherence,
        constants=constants,
        sigma=sigma,
        total_time=total_time,
        frequencies=frequencies,
        n_max=n_max,
        contrast_kind=contrast_kind,
        contrast_c0=contrast_c0,
        contrast_nc=contrast_nc,
        mc_realizations=mc_realizations,
        mc_b_points=mc_b_points,
        resolved=resolved,
    )
