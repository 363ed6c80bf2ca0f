"""Command line interface: report formats, figures, exit codes."""

import csv
import json
import subprocess
import sys

import pytest

from slpsim.cli import main
from slpsim.harness import ScenarioConfig

SWEEP_HEADER = "scheme,K,N,M,sinr_db,mean_power_dbw,mean_ms_per_slot,n_samples,seed"
TINY = ["--set", "K=2", "--set", "N=2", "--set", "n_channels=3",
        "--set", "n_slots=4", "--set", "grid=0,6"]


def read_lines(path):
    return path.read_text(encoding="utf-8").splitlines()


def data_rows(lines):
    body = [ln for ln in lines if not ln.startswith("#")]
    return body[0], list(csv.reader(body[1:]))


def test_power_sweep_csv_contract(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["power-sweep", *TINY, "--out", str(out)]) == 0
    lines = read_lines(out)
    assert lines[0].startswith("# config_sha256=")
    header, rows = data_rows(lines)
    assert header == SWEEP_HEADER
    assert len(rows) == 6  # two grid points, three schemes
    for row in rows:
        assert row[0] in ("ZFBF", "CF_SLP", "OPT_SLP")
        float(row[5])  # power parses
        assert row[7] == "12"
        assert row[8] == "12345"
    # embedded hash matches the scenario that produced the file
    cfg = ScenarioConfig.from_dict(
        {"K": 2, "N": 2, "n_channels": 3, "n_slots": 4, "grid": [0, 6]})
    assert lines[0] == f"# config_sha256={cfg.config_sha256()}"


def test_power_sweep_json_payload(tmp_path):
    out = tmp_path / "sweep.json"
    assert main(["power-sweep", *TINY, "--format", "json", "--out", str(out)]) == 0
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["command"] == "power-sweep"
    cfg = ScenarioConfig.from_dict(payload["config"])
    assert payload["config_sha256"] == cfg.config_sha256()
    assert payload["metadata"]["config_sha256"] == cfg.config_sha256()
    assert len(payload["records"]) == 6
    rec = payload["records"][0]
    assert rec["scheme"] == "ZFBF"
    assert isinstance(rec["mean_power_dbw"], float)


def test_figures_rendered_next_to_report(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["power-sweep", *TINY, "--out", str(out)]) == 0
    assert (tmp_path / "sweep.png").exists()
    out2 = tmp_path / "bare.csv"
    assert main(["power-sweep", *TINY, "--no-figures", "--out", str(out2)]) == 0
    assert not (tmp_path / "bare.png").exists()


def test_stdout_when_no_out(capsys):
    assert main(["power-sweep", *TINY]) == 0
    captured = capsys.readouterr().out
    assert captured.startswith("# config_sha256=")
    assert SWEEP_HEADER in captured


def test_unknown_config_key_is_exit_2(tmp_path, capsys):
    rc = main(["power-sweep", "--set", "bogus=3", "--out", str(tmp_path / "x.csv")])
    assert rc == 2
    assert "bogus" in capsys.readouterr().err
    assert not (tmp_path / "x.csv").exists()


def test_malformed_override_is_exit_2(capsys):
    assert main(["power-sweep", "--set", "K"]) == 2
    assert "key=value" in capsys.readouterr().err


def test_invalid_value_is_exit_2(capsys):
    assert main(["power-sweep", "--set", "K=4", "--set", "N=2"]) == 2
    err = capsys.readouterr().err
    assert err.startswith("config error:")


def test_config_file_with_override(tmp_path):
    cfg_file = tmp_path / "run.json"
    cfg_file.write_text(json.dumps(
        {"K": 2, "N": 2, "M": 4, "grid": [0], "n_channels": 2, "n_slots": 3}))
    out = tmp_path / "a.csv"
    assert main(["power-sweep", "--config", str(cfg_file),
                 "--set", "n_slots=5", "--out", str(out)]) == 0
    _, rows = data_rows(read_lines(out))
    assert rows[0][7] == "10"  # 2 channels x 5 slots, override wins


def test_missing_config_file_is_exit_2(capsys):
    assert main(["power-sweep", "--config", "/nonexistent/cfg.json"]) == 2
    assert "cfg.json" in capsys.readouterr().err


def test_accuracy_and_timing_reports(tmp_path):
    acc = tmp_path / "acc.csv"
    assert main(["accuracy", *TINY, "--out", str(acc)]) == 0
    header, rows = data_rows(read_lines(acc))
    assert header == "K,N,M,sinr_db,accuracy_mean,n_samples,seed"
    assert len(rows) == 1
    assert rows[0][3] == "3"

    tim = tmp_path / "tim.csv"
    assert main(["timing", *TINY, "--out", str(tim)]) == 0
    lines = read_lines(tim)
    ratio_lines = [ln for ln in lines if ln.startswith("# opt_cf_ratio=")]
    assert len(ratio_lines) == 1
    assert float(ratio_lines[0].split("=", 1)[1]) > 0.0
    header, rows = data_rows(lines)
    assert header.startswith("scheme,K,N,M,median_ms_per_slot")
    assert [r[0] for r in rows] == ["ZFBF", "CF_SLP", "OPT_SLP"]


def test_ser_report(tmp_path):
    out = tmp_path / "ser.csv"
    assert main(["ser", *TINY, "--out", str(out)]) == 0
    header, rows = data_rows(read_lines(out))
    assert header == "scheme,K,N,M,snr_db,ser,n_symbols,n_errors,stderr,oracle_ser,seed"
    assert len(rows) == 6
    for row in rows:
        assert 0.0 <= float(row[5]) <= 1.0
        assert float(row[9]) > 0.0  # oracle column populated for QPSK


def test_verify_command(capsys):
    rc = main(["verify", "--set", "K=2", "--set", "N=3"])
    out = capsys.readouterr().out
    assert rc == 0
    lines = [ln for ln in out.splitlines() if ln]
    assert lines and all(ln.startswith("PASS") for ln in lines)


def test_repeat_runs_identical_outside_elapsed(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["power-sweep", *TINY, "--no-figures", "--out", str(out)]) == 0
    elapsed_col = SWEEP_HEADER.split(",").index("mean_ms_per_slot")

    def strip(path):
        kept = []
        for ln in read_lines(path):
            if ln.startswith("#") or "," not in ln:
                kept.append(ln)
            else:
                cells = ln.split(",")
                del cells[elapsed_col]
                kept.append(",".join(cells))
        return "\n".join(kept)

    assert strip(a) == strip(b)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "slpsim", "--help"],
        capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 0
    assert "power-sweep" in proc.stdout
