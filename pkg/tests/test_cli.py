import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from ladder_inversion.cli import main

ROOT = Path(__file__).resolve().parents[1]
FIG3 = str(ROOT / "configs" / "rb_fig3.json")


def data_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(ln for ln in fh if not ln.startswith("#")))


def write_config(tmp_path, **changes):
    raw = json.loads(Path(FIG3).read_text())
    raw.update(changes)
    for key in [k for k, v in changes.items() if v is None]:
        del raw[key]
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return str(path)


def test_simulate_fig3(tmp_path, capsys):
    assert main(["simulate", "--config", FIG3, "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert -1 < report["yield"] < 1
    traj = data_rows(tmp_path / "trajectory.csv")
    assert list(traj[0]) == ["t_ns", "rho11", "rho22", "rho33", "rho44", "yield"]
    assert float(traj[0]["yield"]) == -1.0
    assert float(traj[-1]["t_ns"]) == 30.0
    assert float(traj[-1]["yield"]) == pytest.approx(report["yield"], abs=1e-11)
    pulses = data_rows(tmp_path / "pulses.csv")
    assert list(pulses[0]) == ["t_ns", "amplitude_1", "amplitude_2", "amplitude_3"]
    for name in ("trajectory.csv", "pulses.csv"):
        assert (tmp_path / name).read_text().startswith("# ladder-inversion 0.1.0 config_hash=")
    assert "config_hash" in report and "version" in report


def test_simulate_ideal_compare(tmp_path):
    assert main(["simulate", "--config", FIG3, "--out", str(tmp_path), "--ideal-compare", "--dump-states"]) == 0
    ideal = data_rows(tmp_path / "ideal_trajectory.csv")
    assert float(ideal[-1]["rho44"]) >= 1 - 1e-6
    real = json.loads((tmp_path / "report.json").read_text())
    assert real["yield"] < json.loads((tmp_path / "ideal_report.json").read_text())["yield"]
    states = json.loads((tmp_path / "states.json").read_text())
    assert len(states["states"][0]) == 16 and len(states["states"][0][0]) == 2


def test_simulate_missing_lifetimes(tmp_path, capsys):
    cfg = write_config(tmp_path, lifetimes=None)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "lifetimes" in capsys.readouterr().err


def test_simulate_needs_pulses(tmp_path, capsys):
    cfg = write_config(tmp_path, pulses=None)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "pulses" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == 2


def test_numerical_failure_exit_code(tmp_path):
    cfg = write_config(tmp_path, numerics={"step_divisor": 2})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_sweep_default_grid(tmp_path):
    assert main(["sweep", "--out", str(tmp_path), "--workers", "4"]) == 0
    rows = data_rows(tmp_path / "fig2.csv")
    assert len(rows) == 50
    assert len({r["Tf_ns"] for r in rows}) == 10
    assert len({r["ratio_label"] for r in rows}) == 5


def test_sweep_no_decay(tmp_path):
    cfg = write_config(tmp_path, sweep={"total_times": [5.0, 25.0], "ratio_sets": [[1, 1, 1], [1, 1, 3]]})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path), "--no-decay"]) == 0
    for row in data_rows(tmp_path / "fig2.csv"):
        assert float(row["yield"]) == pytest.approx(1.0, abs=1e-6)


def test_sweep_single_point(tmp_path):
    cfg = write_config(tmp_path, sweep={"total_times": [12.0], "ratio_sets": [[1, 2, 3]]})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert len(data_rows(tmp_path / "fig2.csv")) == 1


def test_out_dir_env(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, sweep={"total_times": [12.0], "ratio_sets": [[1, 1, 1]]})
    monkeypatch.setenv("LADDER_INVERSION_OUT", str(tmp_path / "envout"))
    assert main(["sweep", "--config", cfg]) == 0
    assert (tmp_path / "envout" / "fig2.csv").exists()


def test_optimize(tmp_path):
    cfg = write_config(tmp_path, optimize={"total_time": 10.0, "seeds": [[1, 1, 1]]})
    assert main(["optimize", "--config", cfg, "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "optimize.json").read_text())
    assert doc["ratios"][2] == max(doc["ratios"])


def test_validate_default(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "oracle_cascade" in out


def test_validate_coarse_step_fails(capsys):
    assert main(["validate", "--step-divisor", "10"]) == 1
    out = capsys.readouterr().out
    assert "FAIL  step_halving" in out
    assert "failed checks: step_halving" in out


def test_validate_no_decay_skips(capsys):
    assert main(["validate", "--no-decay"]) == 0
    assert "SKIP  dissipative_ordering" in capsys.readouterr().out


def test_bad_step_divisor():
    assert main(["validate", "--step-divisor", "0"]) == 2


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "ladder_inversion", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "0.1.0"
