"""Command-line entry point.

Subcommands: sequence, sweep, sensitivity, optimize, compare-temp.
Every run ingests one YAML config (strictly validated), executes, and
writes its outputs atomically under --out.  Reports are JSON documents
with {schema_version, command, config, results, provenance} so a run can
be reproduced from its own output.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from datetime import datetime, timezone

from . import __version__
from .config import RunConfig, load_config
from .errors import DDMagError, FitFailureError, InvalidArgumentError, NoSignalError
from .evolution import PulseErrorModel
from .magnetometry import (
    SignalCurve,
    SimulatedContrastModel,
    TemperatureComparison,
    compare_temperatures,
    exponential_contrast_model,
    fit_sinusoid,
    optimize_pulse_number,
    sensitivity_from_curve,
    sweep_amplitude,
    unit_contrast,
)
from .sequences import build_sequence, format_timing_table, synchronize

SCHEMA_VERSION = 1

# one exit code per error category so scripts can branch on the failure kind
EXIT_CODES = {
    "invalid-argument": 2,
    "invalid-timing": 3,
    "resource-limit": 4,
    "no-signal": 5,
    "fit-failure": 6,
    "config-error": 7,
}

SWEEP_COLUMNS = (
    "b_ac_tesla",
    "contrast",
    "contrast_stderr",
    "protocol",
    "n",
    "f_ac_hz",
    "temperature_mode",
)


def atomic_write_text(path: str, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a
    half-written file and a crash never corrupts a previous output."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)  # mkstemp defaults to 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_sweep_csv(curves: list[SignalCurve]) -> str:
    """Stacked long-format CSV; floats use repr for exact round-trips."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for curve in curves:
        for b, c, e in curve.points:
            writer.writerow([
                repr(b), repr(c), repr(e),
                curve.protocol, curve.n, repr(curve.f_ac),
                curve.temperature_mode,
            ])
    return buf.getvalue()


def report_document(command: str, cfg: RunConfig, results: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg.resolved,
        "results": results,
        "provenance": {
            "seed": cfg.seed,
            "version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        },
    }


def write_report(path: str, document: dict) -> None:
    atomic_write_text(path, json.dumps(document, indent=2) + "\n")


def _sweep_kwargs(cfg: RunConfig) -> dict:
    envelope_on = cfg.temperature_mode != "off"
    return {
        "err": cfg.errors,
        "hf": cfg.hyperfine,
        "cp": cfg.coherence if envelope_on else None,
        "temperature_mode": cfg.temperature_mode if envelope_on else "room",
        "field_phase": cfg.field_phase,
        "seed": cfg.seed,
        "realizations": cfg.realizations,
        "constants": cfg.constants,
        "phase_inheritance": cfg.phase_inheritance,
    }


def _run_sweeps(cfg: RunConfig, workers: int) -> list[SignalCurve]:
    kwargs = _sweep_kwargs(cfg)
    stored_mode = cfg.temperature_mode
    curves = []
    for protocol in cfg.protocols:
        curve = sweep_amplitude(
            protocol, cfg.n, cfg.f_ac, (cfg.b_min, cfg.b_max), cfg.points,
            workers=workers, **kwargs,
        )
        # keep the user-facing mode label ("off" means envelope disabled)
        curves.append(
            SignalCurve(
                b_values=curve.b_values,
                contrast=curve.contrast,
                contrast_stderr=curve.contrast_stderr,
                protocol=curve.protocol,
                n=curve.n,
                f_ac=curve.f_ac,
                temperature_mode=stored_mode,
                seed=curve.seed,
            )
        )
    return curves


def _plot_curves(curves: list[SignalCurve], path: str, slope_fit=None) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for curve in curves:
        b = [v * 1e6 for v in curve.b_values]
        label = f"{curve.protocol} n={curve.n}"
        if any(e > 0 for e in curve.contrast_stderr):
            err = list(curve.contrast_stderr)
            ax.errorbar(b, curve.contrast, yerr=err, fmt="o-", ms=3, label=label)
        else:
            ax.plot(b, curve.contrast, "o-", ms=3, label=label)
    if slope_fit is not None and curves:
        fit, slope = slope_fit
        curve = curves[0]
        # tangent at the steepest zero crossing of the fitted sinusoid
        b0 = (-fit.phase % math.pi) / (2.0 * math.pi / fit.period)
        bs = [curve.b_values[0], curve.b_values[-1]]
        ax.plot(
            [v * 1e6 for v in bs],
            [fit.offset + slope * (v - b0) for v in bs],
            "--", color="gray", label="max slope",
        )
        ax.set_ylim(min(curve.contrast) - 0.1, max(curve.contrast) + 0.1)
    ax.set_xlabel("AC amplitude (uT)")
    ax.set_ylabel("contrast")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _contrast_model(cfg: RunConfig, protocol: str, f_ac: float):
    if cfg.contrast_kind == "unit":
        return unit_contrast
    if cfg.contrast_kind == "exponential":
        return exponential_contrast_model(cfg.contrast_c0, cfg.contrast_nc)
    return SimulatedContrastModel(
        protocol, f_ac,
        err=PulseErrorModel(
            angle_error_fraction=cfg.errors.angle_error_fraction,
            phase_error=cfg.errors.phase_error,
            rabi_frequency=cfg.errors.rabi_frequency,
            angle_jitter_std=cfg.errors.angle_jitter_std,
        ),
        hf=cfg.hyperfine,
        constants=cfg.constants,
        n_max=cfg.n_max,
        realizations=cfg.mc_realizations,
        b_points=cfg.mc_b_points,
        seed=0 if cfg.seed is None else cfg.seed,
    )


def cmd_sequence(cfg: RunConfig, args) -> int:
    for protocol in cfg.protocols:
        seq = build_sequence(
            protocol, cfg.n, phase_inheritance=cfg.phase_inheritance
        )
        timed = synchronize(seq, cfg.f_ac, cfg.errors.pi_pulse_duration)
        path = os.path.join(args.out, f"sequence_{protocol.lower()}_n{cfg.n}.txt")
        atomic_write_text(path, format_timing_table(timed))
        print(f"wrote {path} ({seq.n_pulses} pulses)")
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    if cfg.b_min == cfg.b_max or cfg.points < 2:
        print("warning: degenerate B grid; sweep will not oscillate", file=sys.stderr)
    curves = _run_sweeps(cfg, args.workers)
    csv_path = os.path.join(args.out, "sweep.csv")
    atomic_write_text(csv_path, format_sweep_csv(curves))
    print(f"wrote {csv_path}")
    if args.plot:
        plot_path = os.path.join(args.out, "sweep.svg")
        _plot_curves(curves, plot_path)
        print(f"wrote {plot_path}")
    return 0


def cmd_sensitivity(cfg: RunConfig, args) -> int:
    if len(cfg.protocols) != 1:
        raise InvalidArgumentError("sensitivity runs on exactly one protocol")
    curves = _run_sweeps(cfg, args.workers)
    curve = curves[0]
    csv_path = os.path.join(args.out, "sensitivity_curve.csv")
    atomic_write_text(csv_path, format_sweep_csv(curves))
    try:
        report = sensitivity_from_curve(curve, cfg.sigma, cfg.total_time)
    except (FitFailureError, NoSignalError):
        print(f"fit diagnostics: curve written to {csv_path}", file=sys.stderr)
        raise
    doc = report_document("sensitivity", cfg, report.to_dict())
    path = os.path.join(args.out, "sensitivity.json")
    write_report(path, doc)
    print(
        f"wrote {path} (eta = {report.eta * 1e9:.3g} nT/sqrt(Hz) "
        f"at n={report.n}, f={report.f_ac / 1e3:g} kHz)"
    )
    if args.plot:
        fit = fit_sinusoid(curve)
        plot_path = os.path.join(args.out, "sensitivity.svg")
        _plot_curves(curves, plot_path, slope_fit=(fit, report.slope))
        print(f"wrote {plot_path}")
    return 0


def cmd_optimize(cfg: RunConfig, args) -> int:
    mode = cfg.temperature_mode if cfg.temperature_mode != "off" else "room"
    rows = []
    for protocol in cfg.protocols:
        model = _contrast_model(cfg, protocol, cfg.frequencies[0])
        for f_ac in cfg.frequencies:
            n_opt, eta_opt = optimize_pulse_number(
                protocol, f_ac, cfg.coherence, model,
                constants=cfg.constants, n_max=cfg.n_max,
                temperature_mode=mode,
            )
            rows.append({
                "protocol": protocol,
                "f_ac_hz": f_ac,
                "n_opt": n_opt,
                "eta_t_per_sqrt_hz": eta_opt,
            })
    doc = report_document("optimize", cfg, {"table": rows})
    path = os.path.join(args.out, "optimize.json")
    write_report(path, doc)
    print(f"wrote {path}")
    for row in rows:
        print(
            f"  {row['protocol']:>5s}  f={row['f_ac_hz'] / 1e3:7.1f} kHz  "
            f"n_opt={row['n_opt']:5d}  eta={row['eta_t_per_sqrt_hz'] * 1e9:8.3g} nT/sqrt(Hz)"
        )
    return 0


def cmd_compare_temp(cfg: RunConfig, args) -> int:
    results = []
    for protocol in cfg.protocols:
        comparison: TemperatureComparison = compare_temperatures(
            protocol, cfg.n, cfg.f_ac, cfg.errors, cfg.hyperfine, cfg.coherence,
            b_range=(cfg.b_min, cfg.b_max) if cfg.b_max > cfg.b_min else None,
            points=cfg.points, seed=cfg.seed, realizations=cfg.realizations,
            workers=args.workers, constants=cfg.constants,
        )
        results.append(comparison.to_dict())
        print(
            f"{protocol}: slope ratio cryo/room = {comparison.ratio:.3f} "
            f"(n={cfg.n}, f={cfg.f_ac / 1e3:g} kHz)"
        )
    doc = report_document("compare-temp", cfg, {"comparisons": results})
    path = os.path.join(args.out, "compare_temp.json")
    write_report(path, doc)
    print(f"wrote {path}")
    return 0


COMMANDS = {
    "sequence": cmd_sequence,
    "sweep": cmd_sweep,
    "sensitivity": cmd_sensitivity,
    "optimize": cmd_optimize,
    "compare-temp": cmd_compare_temp,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddmag",
        description="Simulate dynamical-decoupling AC magnetometry: pulse "
        "sequences, amplitude sweeps, sensitivities, and pulse-number "
        "optimization.",
    )
    parser.add_argument(
        "command", choices=sorted(COMMANDS), help="operation to run"
    )
    parser.add_argument(
        "--config", required=True, help="YAML run configuration"
    )
    parser.add_argument(
        "--seed", type=int, default=None,
        help="override the config seed (unsigned 64-bit)",
    )
    parser.add_argument(
        "--out", default=".", help="output directory (default: current)"
    )
    parser.add_argument(
        "--plot", action="store_true",
        help="also write an SVG plot (requires matplotlib)",
    )
    parser.add_argument(
        "--workers", type=int, default=1,
        help="parallel sweep workers; results are identical for any count",
    )
    parser.add_argument(
        "--strict", action="store_true",
        help="reject unknown config keys (always on; flag kept for scripts)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed_override=args.seed)
        return COMMANDS[args.command](cfg, args)
    except DDMagError as exc:
        print(f"error [{exc.category}]: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.category, 1)
    except ImportError as exc:
        print(f"error [missing-dependency]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
