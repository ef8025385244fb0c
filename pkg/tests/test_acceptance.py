"""End-to-end acceptance gate.

One test per numbered criterion, each checked at its stated tolerance and
time budget.  Every test records a single PASS/FAIL line that the
terminal summary prints after the run.
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from ddmag.cli import main
from ddmag.constants import DEFAULT_CONSTANTS, PhysicalConstants
from ddmag.evolution import (
    ACFieldSpec,
    BlochVector,
    CoherenceParams,
    HyperfineEnsemble,
    PulseErrorModel,
    accumulated_phase_analytic,
    evolve_coherent,
    readout_contrast,
    t2_effective,
)
from ddmag.magnetometry import (
    MC_CONTRAST_ERRORS,
    SimulatedContrastModel,
    calibrate_amplitude_axis,
    compare_temperatures,
    fit_max_slope,
    ideal_oscillation_period,
    optimize_pulse_number,
    oscillation_amplitude_at,
    oscillation_period,
    sweep_amplitude,
)
from ddmag.sequences import (
    XY8_BLOCK,
    build_cpmg,
    build_cxy8,
    build_sequence,
    build_xy8,
    synchronize,
    toggling_intervals,
)

GAMMA = DEFAULT_CONSTANTS.gamma
IDEAL = PulseErrorModel.ideal()
MISCAL = PulseErrorModel(angle_error_fraction=0.01, rabi_frequency=10e6)


def record(log, num, name, ok, detail):
    line = f"criterion {num} ({name}): {'PASS' if ok else 'FAIL'} :: {detail}"
    log.append(line)
    assert ok, line


def test_criterion_1_sequence_structure(acceptance_log):
    t0 = time.perf_counter()
    lengths = {level: build_cxy8(level).n_pulses for level in range(4)}
    xy8 = build_xy8(2)
    elapsed = time.perf_counter() - t0
    ok = (
        lengths == {0: 8, 1: 72, 2: 584, 3: 4680}
        and xy8.phases == XY8_BLOCK * 2
        and elapsed < 1.0
    )
    record(
        acceptance_log, 1, "sequence structure", ok,
        f"cxy8 lengths {sorted(lengths.values())}, xy8 block ok, {elapsed:.3f}s",
    )


def quad_phase(ts, field):
    total = 0.0
    for a, b, sign in toggling_intervals(ts):
        val, _ = quad(field.value, a, b, epsabs=1e-14, epsrel=1e-12, limit=200)
        total += sign * val
    return 2.0 * math.pi * GAMMA * total


def test_criterion_2_phase_oracle(acceptance_log):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_contrast, worst_phase = 0.0, 0.0
    for _ in range(200):
        protocol = ("CPMG", "XY8", "CXY8")[int(rng.integers(0, 3))]
        if protocol == "CPMG":
            n = int(rng.integers(1, 65))
        elif protocol == "XY8":
            n = 8 * int(rng.integers(1, 9))
        else:
            n = 8
        f = float(rng.uniform(1e3, 500e3))
        b = float(rng.uniform(0.0, 10e-6))
        phi0 = float(rng.uniform(0.0, 2.0 * math.pi))
        ts = synchronize(build_sequence(protocol, n), f)
        field = ACFieldSpec(b, f, phi0)

        analytic = accumulated_phase_analytic(ts, field)
        reference = quad_phase(ts, field)
        denom = max(1e-9, abs(reference))
        worst_phase = max(worst_phase, abs(analytic - reference) / denom)

        final = evolve_coherent(ts, field, IDEAL, 0.0, BlochVector.equatorial(0.0))
        worst_contrast = max(
            worst_contrast, abs(readout_contrast(final) - math.sin(analytic))
        )
    elapsed = time.perf_counter() - t0
    ok = worst_contrast <= 1e-6 and worst_phase <= 1e-9 and elapsed < 30.0
    record(
        acceptance_log, 2, "phase oracle", ok,
        f"200 cases: |contrast-sin(phi)| <= {worst_contrast:.2e} (tol 1e-6), "
        f"quad rel err <= {worst_phase:.2e} (tol 1e-9), {elapsed:.1f}s",
    )


def test_criterion_3_synchronized_phase_formula(acceptance_log):
    # phase per field period at phi0 = pi/2 synchronization
    worst = 0.0
    for f, b in [(10e3, 2e-6), (100e3, 0.4e-6), (250e3, 80e-9)]:
        ts = synchronize(build_cpmg(2), f)  # two pulses span one period
        phase = accumulated_phase_analytic(ts, ACFieldSpec(b, f))
        expected = 4.0 * GAMMA * b / f
        worst = max(worst, abs(phase - expected) / expected)
    phase_ok = worst <= 1e-9

    # n = 2 oscillation period in B equals pi*f/(2*gamma)
    f = 100e3
    expected_period = math.pi * f / (2.0 * GAMMA)
    curve = sweep_amplitude("CPMG", 2, f, (0.0, 2.5 * expected_period), 40, IDEAL)
    period = oscillation_period(curve)
    period_err = abs(period - expected_period) / expected_period
    period_ok = period_err <= 1e-6
    assert calibrate_amplitude_axis(f) == pytest.approx(expected_period, rel=1e-12)

    ok = phase_ok and period_ok
    record(
        acceptance_log, 3, "synchronized phase formula", ok,
        f"phase-per-period rel err {worst:.2e} (tol 1e-9), "
        f"n=2 period rel err {period_err:.2e} (tol 1e-6)",
    )


# regression pins from the first validated run of the frozen recipe
# (f = 100 kHz, eps = 0.01, Omega = 10 MHz, hyperfine triplet, envelope
# off, 12 points over one ideal period, fundamental amplitude)
PINNED_AMPLITUDES = {
    ("CPMG", 72): 0.11960270269632897,
    ("XY8", 72): 0.9795680870319846,
    ("XY8", 584): 0.9344881483708809,
    ("CXY8", 584): 0.9795271322365925,
}


def test_criterion_4_protocol_robustness(acceptance_log):
    t0 = time.perf_counter()
    amps = {}
    for protocol, n in PINNED_AMPLITUDES:
        period = ideal_oscillation_period(n, 100e3)
        curve = sweep_amplitude(protocol, n, 100e3, (0.0, period), 12, MISCAL, seed=0)
        amps[(protocol, n)] = oscillation_amplitude_at(curve, period)
    elapsed = time.perf_counter() - t0

    ordering_ok = (
        amps[("CPMG", 72)] < amps[("XY8", 72)]
        and amps[("CXY8", 584)] > amps[("XY8", 584)]
    )
    regression_ok = all(
        amps[key] == pytest.approx(pin, rel=1e-6)
        for key, pin in PINNED_AMPLITUDES.items()
    )
    ok = ordering_ok and regression_ok and elapsed < 600.0
    record(
        acceptance_log, 4, "protocol robustness ordering", ok,
        f"n=72 CPMG {amps[('CPMG', 72)]:.4f} < XY8 {amps[('XY8', 72)]:.4f}; "
        f"n=584 CXY8 {amps[('CXY8', 584)]:.4f} > XY8 {amps[('XY8', 584)]:.4f}; "
        f"pins ok={regression_ok}, {elapsed:.1f}s",
    )


# factor-of-two windows around the reference optimal pulse numbers
OPT_WINDOWS = {
    10e3: (16, 64),
    25e3: (24, 96),
    100e3: (72, 288),
    250e3: (72, 288),
}


def test_criterion_5_optimizer_trend(acceptance_log):
    t0 = time.perf_counter()
    cp = CoherenceParams()
    model = SimulatedContrastModel("XY8", 100e3, err=MC_CONTRAST_ERRORS, seed=0)
    results = {}
    for f in (10e3, 25e3, 100e3, 250e3):
        n_opt, eta_opt = optimize_pulse_number(
            "XY8", f, cp, model, temperature_mode="room"
        )
        results[f] = n_opt
    elapsed = time.perf_counter() - t0

    sequence = [results[f] for f in (10e3, 25e3, 100e3, 250e3)]
    nondecreasing = all(a <= b for a, b in zip(sequence, sequence[1:]))
    in_window = all(
        OPT_WINDOWS[f][0] <= results[f] <= OPT_WINDOWS[f][1] for f in results
    )
    ok = nondecreasing and in_window and elapsed < 300.0
    record(
        acceptance_log, 5, "optimizer trend", ok,
        f"n_opt {sequence} vs windows {[OPT_WINDOWS[f] for f in (10e3, 25e3, 100e3, 250e3)]}, "
        f"nondecreasing={nondecreasing}, C(n) fit C0={model.c0:.3f} "
        f"Nc={model.n_c:.0f}, {elapsed:.1f}s",
    )


def test_criterion_6_calibrated_magnitudes(acceptance_log):
    t0 = time.perf_counter()
    cp = CoherenceParams()
    pairs = [(10e3, 32), (25e3, 48), (100e3, 144), (250e3, 144)]
    slopes = {}
    for f, n in pairs:
        period = ideal_oscillation_period(n, f)
        curve = sweep_amplitude(
            "XY8", n, f, (0.0, 2.0 * period), 32, MISCAL,
            cp=cp, temperature_mode="room", seed=0,
        )
        slopes[(f, n)] = fit_max_slope(curve)
    # anchor: eta(10 kHz, n = 32) := 9 nT/sqrt(Hz) fixes sigma*sqrt(T)
    sigma_sqrt_t = 9e-9 * slopes[(10e3, 32)]
    targets = {25e3: 10e-9, 100e3: 12e-9, 250e3: 20e-9}
    etas = {f: sigma_sqrt_t / slopes[(f, n)] for f, n in pairs[1:]}
    elapsed = time.perf_counter() - t0

    ok = all(t / 2 <= etas[f] <= t * 2 for f, t in targets.items()) and elapsed < 300.0
    detail = ", ".join(
        f"{f / 1e3:.0f}kHz: {etas[f] * 1e9:.1f} nT (target {t * 1e9:.0f}, "
        f"window [{t / 2 * 1e9:.0f}, {t * 2 * 1e9:.0f}])"
        for f, t in targets.items()
    )
    record(acceptance_log, 6, "calibrated magnitude", ok, f"{detail}, {elapsed:.1f}s")


def test_criterion_7_temperature_effect(acceptance_log):
    t0 = time.perf_counter()
    cp = CoherenceParams()
    # the defaults must reproduce the stated coherence times at n = 48
    t2_room = t2_effective(48, cp, "room")
    t2_cryo = t2_effective(48, cp, "cryo")
    anchors_ok = (
        abs(t2_room - 1.2e-3) / 1.2e-3 < 0.02
        and abs(t2_cryo - 4.0e-3) / 4.0e-3 < 1e-9
        and 0.8 <= cp.stretch_exponent <= 1.0
    )
    hf = HyperfineEnsemble.nitrogen14()
    high = compare_temperatures("XY8", 48, 100e3, IDEAL, hf, cp, seed=0)
    low = compare_temperatures("XY8", 48, 10e3, IDEAL, hf, cp, seed=0)
    elapsed = time.perf_counter() - t0

    ok = (
        anchors_ok
        and 0.9 <= high.ratio <= 1.2
        and 2.5 <= low.ratio <= 4.5
        and elapsed < 120.0
    )
    record(
        acceptance_log, 7, "temperature effect", ok,
        f"slope ratio cryo/room: 100 kHz {high.ratio:.3f} (window [0.9, 1.2]), "
        f"10 kHz {low.ratio:.3f} (window [2.5, 4.5]); "
        f"T2_room(48)={t2_room * 1e3:.2f} ms, T2_cryo(48)={t2_cryo * 1e3:.2f} ms, "
        f"{elapsed:.1f}s",
    )


def test_criterion_8_constant_identity(acceptance_log):
    constants = PhysicalConstants.from_g_factor(2.003)
    lhs = constants.eq_prefactor
    rhs = 1.0 / (4.0 * constants.gamma)
    rel = abs(lhs - rhs) / rhs
    ok = rel <= 1e-6
    record(
        acceptance_log, 8, "constant identity", ok,
        f"pi*hbar/(2*g*muB) vs 1/(4*gamma) rel err {rel:.2e} (tol 1e-6) at g=2.003",
    )


def test_criterion_9_sweep_determinism(acceptance_log, tmp_path):
    t0 = time.perf_counter()
    cfg_path = tmp_path / "det.yaml"
    cfg_path.write_text(
        "experiment:\n"
        "  protocol: XY8\n"
        "  n: 32\n"
        "  f_ac_khz: 100.0\n"
        "  b_min_ut: 0.0\n"
        "  b_max_ut: 0.3\n"
        "  points: 16\n"
        "  realizations: 2\n"
        "  seed: 12345\n"
        "errors:\n"
        "  angle_error_fraction: 0.01\n"
        "  rabi_mhz: 10.0\n"
        "  angle_jitter_std: 0.03\n"
    )
    outputs = {}
    for workers in (1, 4, 16):
        out = tmp_path / f"w{workers}"
        code = main([
            "sweep", "--config", str(cfg_path), "--out", str(out),
            "--workers", str(workers),
        ])
        assert code == 0
        outputs[workers] = (out / "sweep.csv").read_bytes()
    elapsed = time.perf_counter() - t0

    ok = outputs[1] == outputs[4] == outputs[16]
    record(
        acceptance_log, 9, "sweep determinism", ok,
        f"CSV bytes identical across 1/4/16 workers "
        f"({len(outputs[1])} bytes), {elapsed:.1f}s",
    )
