"""Command-line interface: configs, outputs, determinism, exit codes."""

import json

import pytest
import yaml

from ddmag.cli import main
from ddmag.config import load_config
from ddmag.errors import ConfigError

try:
    import matplotlib  # noqa: F401
    HAVE_MPL = True
except ImportError:
    HAVE_MPL = False


def write_config(tmp_path, data, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


def base_sweep_config(**experiment):
    exp = {
        "protocol": "XY8",
        "n": 16,
        "f_ac_khz": 100.0,
        "b_min_ut": 0.0,
        "b_max_ut": 0.2,
        "points": 12,
        "seed": 3,
    }
    exp.update(experiment)
    return {
        "experiment": exp,
        "errors": {"angle_error_fraction": 0.01, "rabi_mhz": 10.0},
    }


def test_sequence_writes_tables(tmp_path):
    cfg = write_config(tmp_path, {"experiment": {"protocol": "CXY8", "n": 584}})
    assert main(["sequence", "--config", cfg, "--out", str(tmp_path)]) == 0
    table = (tmp_path / "sequence_cxy8_n584.txt").read_text()
    lines = table.strip().split("\n")
    assert lines[0].startswith("#index")
    assert len(lines) == 585  # header + one row per pulse


def test_sequence_single_pulse(tmp_path):
    cfg = write_config(tmp_path, {"experiment": {"protocol": "CPMG", "n": 1}})
    assert main(["sequence", "--config", cfg, "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "sequence_cpmg_n1.txt").read_text().strip().split("\n")
    assert len(lines) == 2


def test_sequence_invalid_count_exits_nonzero(tmp_path, capsys):
    cfg = write_config(tmp_path, {"experiment": {"protocol": "CPMG", "n": -1}})
    code = main(["sequence", "--config", cfg, "--out", str(tmp_path)])
    assert code == 2  # invalid-argument
    assert "invalid-argument" in capsys.readouterr().err


def test_sweep_csv_columns_and_repeatability(tmp_path):
    cfg = write_config(tmp_path, base_sweep_config())
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", "--config", cfg, "--out", str(out_a)]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(out_b)]) == 0
    text = (out_a / "sweep.csv").read_text()
    assert text == (out_b / "sweep.csv").read_text()
    header, first = text.split("\n")[:2]
    assert header == "b_ac_tesla,contrast,contrast_stderr,protocol,n,f_ac_hz,temperature_mode"
    fields = first.split(",")
    assert fields[3] == "XY8" and fields[4] == "16"
    assert float(fields[5]) == 100e3


def test_sweep_worker_counts_byte_identical(tmp_path):
    data = base_sweep_config()
    data["errors"]["angle_jitter_std"] = 0.03  # exercise the stochastic path
    data["experiment"]["realizations"] = 2
    cfg = write_config(tmp_path, data)
    outputs = []
    for w in ("1", "4"):
        out = tmp_path / f"w{w}"
        assert main(["sweep", "--config", cfg, "--out", str(out), "--workers", w]) == 0
        outputs.append((out / "sweep.csv").read_bytes())
    assert outputs[0] == outputs[1]


def test_sweep_multi_protocol_stacks_curves(tmp_path):
    data = base_sweep_config(protocol=["CPMG", "XY8"], n=8, points=9)
    cfg = write_config(tmp_path, data)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "sweep.csv").read_text().strip().split("\n")[1:]
    assert len(rows) == 18
    assert {r.split(",")[3] for r in rows} == {"CPMG", "XY8"}


def test_sweep_degenerate_grid_warns_but_writes(tmp_path, capsys):
    data = base_sweep_config(b_min_ut=0.1, b_max_ut=0.1, points=4)
    cfg = write_config(tmp_path, data)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert "degenerate" in capsys.readouterr().err
    assert (tmp_path / "sweep.csv").exists()


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path, {"experiment": {"protcol": "XY8"}})
    code = main(["sweep", "--config", cfg, "--out", str(tmp_path), "--strict"])
    assert code == 7
    err = capsys.readouterr().err
    assert "config-error" in err and "protcol" in err


def test_nested_unknown_key_rejected(tmp_path):
    data = base_sweep_config()
    data["errors"]["rabi_hz"] = 1.0
    with pytest.raises(ConfigError, match="rabi_hz"):
        load_config(data)


def test_config_defaults_and_seed_override(tmp_path):
    cfg = load_config({}, seed_override=99)
    assert cfg.seed == 99
    assert cfg.protocols == ("XY8",)
    assert cfg.f_ac == pytest.approx(100e3)
    assert cfg.coherence.t2_hahn == pytest.approx(270e-6)
    assert cfg.errors.rabi_frequency == pytest.approx(10e6)
    assert cfg.temperature_mode == "off"
    # unit suffixes convert to SI
    cfg2 = load_config({"sample": {"t2_hahn_us": 100.0, "t1_ms": 2.0}})
    assert cfg2.coherence.t2_hahn == pytest.approx(100e-6)
    assert cfg2.coherence.t1 == pytest.approx(2e-3)


def test_yaml_bare_off_is_accepted(tmp_path):
    path = tmp_path / "off.yaml"
    path.write_text("experiment:\n  temperature_mode: off\n")
    assert load_config(str(path)).temperature_mode == "off"


def test_sensitivity_report_structure(tmp_path):
    data = base_sweep_config(n=8, b_max_ut=1.5, points=24,
                             temperature_mode="room", f_ac_khz=10.0)
    data["analysis"] = {"n_photons": 10000.0, "total_time_s": 2.0}
    cfg = write_config(tmp_path, data)
    assert main(["sensitivity", "--config", cfg, "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "sensitivity.json").read_text())
    assert doc["schema_version"] == 1
    assert doc["command"] == "sensitivity"
    assert set(doc["provenance"]) == {"seed", "version", "timestamp"}
    assert doc["provenance"]["seed"] == 3
    assert doc["results"]["eta_t_per_sqrt_hz"] > 0
    assert doc["results"]["sigma"] == pytest.approx(0.01)
    assert (tmp_path / "sensitivity_curve.csv").exists()
    # the embedded config reproduces the run byte for byte
    rerun_cfg = write_config(tmp_path, doc["config"], name="rerun.yaml")
    out2 = tmp_path / "rerun"
    assert main(["sensitivity", "--config", rerun_cfg, "--out", str(out2)]) == 0
    assert (out2 / "sensitivity_curve.csv").read_bytes() == (
        tmp_path / "sensitivity_curve.csv"
    ).read_bytes()


def test_sensitivity_flat_curve_fails_with_category(tmp_path, capsys):
    # a span of 1e-17 T accumulates ~1e-10 rad: flat to within the noise floor
    data = base_sweep_config(b_min_ut=0.0, b_max_ut=1.0e-11, points=10)
    cfg = write_config(tmp_path, data)
    code = main(["sensitivity", "--config", cfg, "--out", str(tmp_path)])
    assert code == 5  # no-signal
    err = capsys.readouterr().err
    assert "no-signal" in err
    assert (tmp_path / "sensitivity_curve.csv").exists()  # diagnostic dump


def test_optimize_table_rows(tmp_path):
    data = {
        "experiment": {"protocol": "XY8", "temperature_mode": "room"},
        "optimize": {
            "frequencies_khz": [10.0, 25.0],
            "n_max": 64,
            "contrast_model": "exponential",
            "contrast_nc_pulses": 200.0,
        },
    }
    cfg = write_config(tmp_path, data)
    assert main(["optimize", "--config", cfg, "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "optimize.json").read_text())
    table = doc["results"]["table"]
    assert len(table) == 2
    assert [row["f_ac_hz"] for row in table] == [10e3, 25e3]
    for row in table:
        assert row["n_opt"] in range(8, 65)
        assert row["eta_t_per_sqrt_hz"] > 0


def test_optimize_single_frequency_and_bad_nmax(tmp_path):
    data = {"optimize": {"frequencies_khz": [50.0], "n_max": 64}}
    cfg = write_config(tmp_path, data)
    assert main(["optimize", "--config", cfg, "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "optimize.json").read_text())
    assert len(doc["results"]["table"]) == 1

    bad = write_config(tmp_path, {"optimize": {"n_max": 7}}, name="bad.yaml")
    assert main(["optimize", "--config", bad, "--out", str(tmp_path)]) == 2


def test_compare_temp_report(tmp_path):
    data = {
        "experiment": {"protocol": "XY8", "n": 48, "f_ac_khz": 10.0,
                       "points": 24, "seed": 0},
        "errors": {"angle_error_enabled": False, "phase_error_enabled": False,
                   "finite_duration_enabled": False},
    }
    cfg = write_config(tmp_path, data)
    assert main(["compare-temp", "--config", cfg, "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "compare_temp.json").read_text())
    comparison = doc["results"]["comparisons"][0]
    assert comparison["ratio_cryo_over_room"] > 1.0
    assert comparison["slope_room_per_tesla"] > 0


@pytest.mark.skipif(not HAVE_MPL, reason="matplotlib not installed")
def test_plot_outputs_svg(tmp_path):
    cfg = write_config(tmp_path, base_sweep_config())
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path), "--plot"]) == 0
    svg = (tmp_path / "sweep.svg").read_text()
    assert "<svg" in svg[:300]
    data = base_sweep_config(n=8, b_max_ut=1.5, points=24, f_ac_khz=10.0)
    cfg2 = write_config(tmp_path, data, name="run2.yaml")
    assert main(["sensitivity", "--config", cfg2, "--out", str(tmp_path), "--plot"]) == 0
    assert (tmp_path / "sensitivity.svg").exists()


def test_missing_config_file(tmp_path, capsys):
    code = main(["sweep", "--config", str(tmp_path / "nope.yaml"),
                 "--out", str(tmp_path)])
    assert code == 7
    assert "config-error" in capsys.readouterr().err


def test_negative_seed_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path, base_sweep_config())
    code = main(["sweep", "--config", cfg, "--out", str(tmp_path),
                 "--seed", "-1"])
    assert code == 7
    assert "non-negative" in capsys.readouterr().err
