import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from srsp.cli import EXIT_BLOWUP, EXIT_CONFIG, EXIT_IO, EXIT_OK, main, read_diagnostics
from srsp.snapshot import read_snapshot_with_header

BASE = """
dim = 1
grid_points = 64
box_length = 20.0
gamma = 0.5
coupling = 1.0
mass = 1.0
components = 2
weights = "geometric:0.5"
dt = 0.01
t_final = 0.1
"""


def write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_simulate_outputs(tmp_path):
    cfg = write(tmp_path, BASE + "snapshot_every = 5\n")
    out = tmp_path / "out"
    assert main(["simulate", str(cfg), "--output-dir", str(out)]) == EXIT_OK
    with open(out / "diagnostics.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["step", "time", "charge_1", "charge_2", "energy", "hs_norm", "orthonormality_residual"]
    assert len(rows) - 1 == 10 + 1  # floor(t_final/dt) + 1
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "completed" and summary["steps"] == 10
    snaps = sorted(p.name for p in (out / "snapshots").iterdir())
    assert snaps == ["snap_0000000.bin", "snap_0000005.bin", "snap_0000010.bin"]
    header, state = read_snapshot_with_header(out / "snapshots" / "snap_0000010.bin")
    assert header["time"] == pytest.approx(0.1) and header["config_digest"] == summary["config_digest"]
    assert (out / "run.log").read_text().strip()


def test_diagnostics_deterministic(tmp_path):
    cfg = write(tmp_path, BASE)
    for d in ("a", "b"):
        assert main(["simulate", str(cfg), "--output-dir", str(tmp_path / d)]) == EXIT_OK
    assert (tmp_path / "a" / "diagnostics.csv").read_bytes() == (tmp_path / "b" / "diagnostics.csv").read_bytes()


def test_diagnostics_round_trip(tmp_path):
    cfg = write(tmp_path, BASE)
    out = tmp_path / "out"
    main(["simulate", str(cfg), "--output-dir", str(out)])
    traj = read_diagnostics(out / "diagnostics.csv")
    assert len(traj.times) == 11 and traj.charge_array().shape == (11, 2)
    assert np.allclose(traj.charge_array(), 1, atol=1e-13)


def test_config_error_creates_nothing(tmp_path, capsys):
    cfg = write(tmp_path, BASE.replace("gamma = 0.5", "gamma = 1.0") + f'output_dir = "{tmp_path / "never"}"\n')
    assert main(["simulate", str(cfg)]) == EXIT_CONFIG
    assert not (tmp_path / "never").exists()
    assert "0 < gamma < 1 when dim = 1" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["simulate", str(tmp_path / "absent.toml")]) == EXIT_IO


def test_blowup_exit_code(tmp_path):
    text = BASE.replace("grid_points = 64", "grid_points = 512").replace("coupling = 1.0", "coupling = -5.0")
    text = text.replace("components = 2", "components = 1").replace('"geometric:0.5"', '"uniform"')
    text = text.replace("dt = 0.01", "dt = 0.001").replace("t_final = 0.1", "t_final = 2.0")
    cfg = write(tmp_path, text + "sobolev_s = 1.0\n")
    out = tmp_path / "out"
    assert main(["simulate", str(cfg), "--output-dir", str(out)]) == EXIT_BLOWUP
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "blowup" and 0 < summary["last_valid_time"] < 2.0


def test_report(tmp_path, capsys):
    cfg = write(tmp_path, BASE)
    out = tmp_path / "out"
    main(["simulate", str(cfg), "--output-dir", str(out)])
    assert main(["report", str(out)]) == EXIT_OK
    with open(out / "report.csv") as fh:
        names = [r[0] for r in csv.reader(fh)][1:]
    assert names[:2] == ["charge_1", "charge_2"] and "beta" in names
    assert main(["report", str(tmp_path / "nowhere")]) == EXIT_IO


def test_limit_commands(tmp_path, capsys):
    cfg = write(tmp_path, BASE)
    out = tmp_path / "out"
    assert main(["limit-zero", str(cfg), "--masses", "1,0.5", "--horizon", "0.05", "--output-dir", str(out)]) == 0
    assert main(["limit-large", str(cfg), "--masses", "2,4", "--output-dir", str(out)]) == 0
    with open(out / "limit_large.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["mass", "error", "free_error"] and len(rows) == 3
    assert "fitted_order" in json.loads((out / "limit_zero.json").read_text())
    assert main(["limit-large", str(cfg), "--masses", "4,2"]) == EXIT_CONFIG


def test_check_inequalities(tmp_path, capsys):
    cfg = write(tmp_path, BASE)
    out = tmp_path / "out"
    assert main(["check-inequalities", str(cfg), "--samples", "5", "--seed", "3", "--output-dir", str(out)]) == 0
    with open(out / "inequalities.csv") as fh:
        assert len(list(csv.reader(fh))) == 6


def test_console_entry_point(tmp_path):
    cfg = write(tmp_path, BASE)
    proc = subprocess.run([sys.executable, "-m", "srsp.cli", "simulate", str(cfg), "--output-dir",
                           str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
