"""Configuration parsing and command-line behaviour, exit codes included."""

import os
import subprocess
import sys

import numpy as np
import pytest

from torusns import cli, snapshots, spectral as sp
from torusns.config import config_from_dict, load_config
from torusns.errors import ConfigParse


def base_config(outdir, **overrides):
    data = {
        "grid": {"nu": 1, "d": 2, "Kphi": 2, "Kx": 4},
        "frequency": {"omega": [float(np.sqrt(2.0))], "Lcheck": 30},
        "forcing": {
            "epsilon": 1e-3,
            "zero_space_mean": True,
            "modes": [
                {"ell": [1], "j": [1, 0], "comp": 1, "re": 1.0},
                {"ell": [0], "j": [1, 1], "comp": 0, "re": 0.5},
                {"ell": [0], "j": [1, 1], "comp": 1, "re": -0.5},
            ],
        },
        "solver": {"tol_residual": 1e-12, "max_iter": 40},
        "sim": {
            "alpha": 0.9,
            "delta": 1e-3,
            "dt": 5e-3,
            "T": 3.0,
            "s": 2.5,
            "integrator": "etd2",
            "burn_in": 1.0,
        },
        "seed": 1234,
        "output_dir": str(outdir),
    }
    data.update(overrides)
    return data


def write_config(tmp_path, data, name="run.yaml"):
    import yaml

    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

def test_load_config_happy_path(tmp_path):
    path = write_config(tmp_path, base_config(tmp_path / "out"))
    cfg = load_config(path)
    assert cfg.grid.Kx == 4
    assert cfg.forcing.zero_space_mean
    assert cfg.sim.integrator == "etd2"
    assert cfg.seed == 1234


def test_config_missing_section(tmp_path):
    data = base_config(tmp_path)
    del data["grid"]
    with pytest.raises(ConfigParse):
        config_from_dict(data)


def test_config_unknown_key(tmp_path):
    data = base_config(tmp_path)
    data["grid"]["resolution"] = 128
    with pytest.raises(ConfigParse):
        config_from_dict(data)


def test_config_bad_mode_entry(tmp_path):
    data = base_config(tmp_path)
    data["forcing"]["modes"][0]["comp"] = 7
    with pytest.raises(ConfigParse):
        config_from_dict(data)


def test_config_forcing_violations(tmp_path):
    data = base_config(tmp_path)
    data["forcing"]["modes"].append(
        {"ell": [0], "j": [0, 0], "comp": 0, "re": 1.0}
    )
    with pytest.raises(ConfigParse):
        config_from_dict(data)


def test_config_omega_length(tmp_path):
    data = base_config(tmp_path)
    data["frequency"]["omega"] = [1.0, 2.0]
    with pytest.raises(ConfigParse):
        config_from_dict(data)


def test_config_solver_index_pairing(tmp_path):
    data = base_config(tmp_path)
    data["solver"]["sigma"] = 2.5
    with pytest.raises(ConfigParse):
        config_from_dict(data)


def test_config_not_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("grid: [unclosed\n")
    with pytest.raises(ConfigParse):
        load_config(path)


# --------------------------------------------------------------------------
# solve-torus command
# --------------------------------------------------------------------------

def test_cmd_solve_torus_success(tmp_path):
    out = tmp_path / "out"
    path = write_config(tmp_path, base_config(out))
    assert cli.main(["solve-torus", "--config", str(path)]) == cli.EXIT_OK
    report = (out / "report_solve.txt").read_text()
    assert "pde_residual" in report
    assert (out / "torus_U.txt").exists()
    assert (out / "torus_P.txt").exists()
    manifest = (out / "manifest.txt").read_text().splitlines()
    assert len(manifest) == 3
    import hashlib

    for line in manifest:
        digest, name = line.split()
        body = (out / name).read_bytes()
        assert hashlib.sha256(body).hexdigest() == digest


def test_cmd_solve_torus_zero_eps(tmp_path):
    out = tmp_path / "out"
    data = base_config(out)
    data["forcing"]["epsilon"] = 0.0
    path = write_config(tmp_path, data)
    assert cli.main(["solve-torus", "--config", str(path)]) == cli.EXIT_OK
    report = (out / "report_solve.txt").read_text()
    assert "iterations = 1" in report
    assert "norm_U = 0" in report
    assert "norm_P = 0" in report


def test_cmd_solve_torus_resonant_exit(tmp_path):
    out = tmp_path / "out"
    data = base_config(out)
    data["grid"] = {"nu": 2, "d": 2, "Kphi": 1, "Kx": 2}
    data["frequency"] = {"omega": [1.0, 1.0], "Lcheck": 10}
    data["forcing"] = {
        "epsilon": 1e-3,
        "zero_space_mean": False,
        "modes": [
            {"ell": [1, 0], "j": [0, 0], "comp": 0, "re": 1.0},
            {"ell": [1, 0], "j": [1, 0], "comp": 1, "re": 1.0},
        ],
    }
    path = write_config(tmp_path, data)
    assert cli.main(["solve-torus", "--config", str(path)]) == cli.EXIT_CONVERGENCE
    assert "ResonantMode" in (out / "report_solve.txt").read_text()


def test_cmd_solve_torus_resonant_but_zero_space_mean(tmp_path):
    out = tmp_path / "out"
    data = base_config(out)
    data["grid"] = {"nu": 2, "d": 2, "Kphi": 1, "Kx": 2}
    data["frequency"] = {"omega": [1.0, 1.0], "Lcheck": 10}
    data["forcing"] = {
        "epsilon": 1e-3,
        "zero_space_mean": True,
        "modes": [{"ell": [1, 0], "j": [1, 0], "comp": 1, "re": 1.0}],
    }
    path = write_config(tmp_path, data)
    assert cli.main(["solve-torus", "--config", str(path)]) == cli.EXIT_OK


def test_cmd_bad_config_exit(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("forcing: {}\n")
    assert cli.main(["solve-torus", "--config", str(path)]) == cli.EXIT_CONFIG


# --------------------------------------------------------------------------
# simulate command
# --------------------------------------------------------------------------

def test_cmd_simulate_roundtrip(tmp_path):
    out = tmp_path / "out"
    path = write_config(tmp_path, base_config(out))
    assert cli.main(["solve-torus", "--config", str(path)]) == cli.EXIT_OK
    rc = cli.main(
        ["simulate", "--config", str(path), "--torus", str(out / "torus_U.txt")]
    )
    assert rc == cli.EXIT_OK
    report = (out / "report_simulate.txt").read_text()
    assert "alpha_fit" in report and "blowup = false" in report
    traj = (out / "trajectory.tsv").read_text().splitlines()
    assert traj[0].startswith("#")
    assert len(traj) == 602  # 3.0 / 5e-3 steps plus t=0 and header
    assert (out / "v_final.txt").exists()


def test_cmd_simulate_snapshot_mismatch(tmp_path):
    out = tmp_path / "out"
    path = write_config(tmp_path, base_config(out))
    assert cli.main(["solve-torus", "--config", str(path)]) == cli.EXIT_OK
    other = base_config(out)
    other["grid"]["Kx"] = 3
    path2 = write_config(tmp_path, other, name="other.yaml")
    rc = cli.main(
        ["simulate", "--config", str(path2), "--torus", str(out / "torus_U.txt")]
    )
    assert rc == cli.EXIT_CONFIG


def test_cmd_simulate_step_too_large(tmp_path):
    out = tmp_path / "out"
    data = base_config(out)
    data["sim"]["dt"] = 0.2
    data["sim"]["T"] = 10.0
    path = write_config(tmp_path, data)
    assert cli.main(["solve-torus", "--config", str(path)]) == cli.EXIT_OK
    rc = cli.main(
        ["simulate", "--config", str(path), "--torus", str(out / "torus_U.txt")]
    )
    assert rc == cli.EXIT_CONVERGENCE


def test_cmd_simulate_delta_zero_rejected(tmp_path):
    data = base_config(tmp_path / "out")
    data["sim"]["delta"] = 0.0
    with pytest.raises(ConfigParse):
        config_from_dict(data)


# --------------------------------------------------------------------------
# verify command and determinism
# --------------------------------------------------------------------------

def test_cmd_verify_passes(tmp_path):
    out = tmp_path / "out"
    path = write_config(tmp_path, base_config(out))
    rc = cli.main(["verify", "--config", str(path), "--seed", "99"])
    assert rc == cli.EXIT_OK
    report = (out / "report_verify.txt").read_text()
    assert "all_pass = true" in report
    assert "seed = 99" in report


def _strip_timings(text: str) -> str:
    lines = []
    skipping = False
    for line in text.splitlines():
        if line.startswith("[timings]"):
            skipping = True
            continue
        if skipping and line.startswith("["):
            skipping = False
        if not skipping:
            lines.append(line)
    return "\n".join(lines)


def test_reports_deterministic(tmp_path, monkeypatch):
    # identical config file and seed, two separate runs: the reports must
    # agree bitwise apart from wall-clock timings
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    path = write_config(tmp_path, base_config(tmp_path / "unused"))
    for out in (out1, out2):
        monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(out))
        assert cli.main(["solve-torus", "--config", str(path)]) == cli.EXIT_OK
    r1 = _strip_timings((out1 / "report_solve.txt").read_text())
    r2 = _strip_timings((out2 / "report_solve.txt").read_text())
    assert r1 == r2
    assert (out1 / "torus_U.txt").read_bytes() == (out2 / "torus_U.txt").read_bytes()
    for out in (out1, out2):
        monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(out))
        rc = cli.main(
            ["simulate", "--config", str(path), "--torus", str(out / "torus_U.txt")]
        )
        assert rc == cli.EXIT_OK
    t1 = (out1 / "trajectory.tsv").read_bytes()
    t2 = (out2 / "trajectory.tsv").read_bytes()
    assert t1 == t2
    s1 = _strip_timings((out1 / "report_simulate.txt").read_text())
    s2 = _strip_timings((out2 / "report_simulate.txt").read_text())
    assert s1 == s2


def test_output_dir_env_override(tmp_path, monkeypatch):
    configured = tmp_path / "configured"
    actual = tmp_path / "actual"
    path = write_config(tmp_path, base_config(configured))
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(actual))
    assert cli.main(["solve-torus", "--config", str(path)]) == cli.EXIT_OK
    assert (actual / "torus_U.txt").exists()
    assert not configured.exists()


def test_console_entry_point(tmp_path):
    out = tmp_path / "out"
    path = write_config(tmp_path, base_config(out))
    proc = subprocess.run(
        [sys.executable, "-m", "torusns", "solve-torus", "--config", str(path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "iterations" in proc.stdout
