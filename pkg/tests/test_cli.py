import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from backscatter_rti.cli import main
from backscatter_rti.ingest import read_rssi_log
from backscatter_rti.render import read_pgm

from conftest import LAB_CFG

SCENE = str(LAB_CFG)


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert run("simulate", "--scene", SCENE, "--out", out) == 0
    return out


def test_simulate_outputs(sim_dir, capsys):
    base = read_rssi_log(sim_dir / "baseline.csv")
    walk = read_rssi_log(sim_dir / "walk.csv")
    per_tag = {}
    for r in base.records:
        per_tag[r.tag_id] = per_tag.get(r.tag_id, 0) + 1
    assert set(per_tag.values()) == {300}
    assert len({r.timestamp for r in walk.records}) == 50
    manifest = json.loads((sim_dir / "manifest.json").read_text())
    assert [a["path"] for a in manifest["artifacts"]] == ["baseline.csv", "walk.csv"]
    assert manifest["seed"] == 0


def test_simulate_prints_counts(tmp_path, capsys):
    assert run("simulate", "--scene", SCENE, "--out", tmp_path, "--scenario", "baseline",
               "--seed", 5) == 0
    text = capsys.readouterr().out
    assert "300 frames" in text and "seed 5" in text


def test_simulate_is_byte_deterministic(sim_dir, tmp_path):
    assert run("simulate", "--scene", SCENE, "--out", tmp_path) == 0
    for name in ("baseline.csv", "walk.csv", "manifest.json"):
        assert (tmp_path / name).read_bytes() == (sim_dir / name).read_bytes()
    other = tmp_path / "other"
    assert run("simulate", "--scene", SCENE, "--out", other, "--seed", 1) == 0
    assert (other / "baseline.csv").read_bytes() != (sim_dir / "baseline.csv").read_bytes()


def test_reconstruct_walk(sim_dir, tmp_path, capsys):
    out = tmp_path / "rec"
    assert run("reconstruct", "--scene", SCENE, "--log", sim_dir / "walk.csv",
               "--baseline", sim_dir / "baseline.csv", "--out", out, "--render-weights") == 0
    summary = capsys.readouterr().out
    assert summary.startswith("frames: 50, present:")
    with open(out / "trajectory.csv") as fh:
        traj = list(csv.DictReader(fh))
    t4, t1 = np.array([0.6, 1.02]), np.array([-0.6, 1.02])
    first = np.array([float(traj[0]["x_m"]), float(traj[0]["z_m"])])
    last = np.array([float(traj[-1]["x_m"]), float(traj[-1]["z_m"])])
    assert np.linalg.norm(first - t4) < np.linalg.norm(first - t1)
    assert np.linalg.norm(last - t1) < np.linalg.norm(last - t4)
    assert len(list((out / "images").glob("frame_*.csv"))) == 50
    px, scale = read_pgm(out / "images" / "frame_0000.pgm")
    assert px.shape == (16 * 8, 32 * 8) and scale is not None
    weights = sorted((out / "weights").glob("link_*.pgm"))
    assert len(weights) == 8 and weights[0].name == "link_00_T1.pgm"
    band, _ = read_pgm(weights[0])
    assert 0 < np.count_nonzero(band) < band.size
    manifest = json.loads((out / "manifest.json").read_text())
    paths = {a["path"] for a in manifest["artifacts"]}
    assert {"detections.csv", "trajectory.csv", "weights/weights.csv"} <= paths


def test_reconstruct_baseline_only_is_all_absent(tmp_path):
    quiet = tmp_path / "q.cfg"
    quiet.write_text("noise_db_std = 0\n")
    assert run("simulate", "--scene", SCENE, "--params", quiet, "--out", tmp_path,
               "--scenario", "baseline") == 0
    out = tmp_path / "rec"
    assert run("reconstruct", "--scene", SCENE, "--params", quiet, "--log",
               tmp_path / "baseline.csv", "--baseline-seconds", 20, "--out", out) == 0
    with open(out / "detections.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 200 and all(r["present"] == "0" for r in rows)


def test_reconstruct_fixed_scale(sim_dir, tmp_path):
    assert run("reconstruct", "--scene", SCENE, "--log", sim_dir / "walk.csv",
               "--baseline", sim_dir / "baseline.csv", "--out", tmp_path, "--fixed-scale",
               "--imputation", "drop", "--window", 0.2) == 0
    scales = {read_pgm(p)[1] for p in (tmp_path / "images").glob("*.pgm")}
    assert len(scales) == 1


def test_reconstruct_without_baseline_is_config_error(sim_dir, tmp_path, capsys):
    assert run("reconstruct", "--scene", SCENE, "--log", sim_dir / "walk.csv",
               "--out", tmp_path) == 2
    assert "--baseline" in capsys.readouterr().err


def test_material_sweep(tmp_path, capsys):
    assert run("material-sweep", "--scene", SCENE, "--out", tmp_path, "--seeds", 20) == 0
    with open(tmp_path / "material_sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 12
    cell = {(r["material"], r["scenario"]): r for r in rows}
    assert cell[("wall", "nlos")]["reported_dbm"] == "missing"
    assert "wall" in capsys.readouterr().out


@pytest.mark.parametrize("argv,code", [
    (["simulate"], 2),
    (["frobnicate", "--scene", SCENE], 2),
    (["simulate", "--scene", "/nonexistent.cfg"], 2),
    (["reconstruct", "--scene", SCENE, "--log", "/nonexistent.csv", "--baseline-seconds", "5"], 3),
])
def test_exit_codes(argv, code, tmp_path):
    assert main(argv + ["--out", str(tmp_path)] if "--scene" in argv else argv) == code


def test_bad_log_header_is_io_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,2,3\n")
    assert run("reconstruct", "--scene", SCENE, "--log", bad, "--baseline-seconds", 1,
               "--out", tmp_path / "o") == 3


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("simulate", "--scene", SCENE, "--out", blocker / "sub") == 3


def test_bad_param_value(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("eta = -1\n")
    assert run("simulate", "--scene", SCENE, "--params", bad, "--out", tmp_path) == 2


def test_console_script_numpy_backend(tmp_path):
    env = dict(os.environ, BACKSCATTER_RTI_DISABLE_NUMBA="1")
    proc = subprocess.run([sys.executable, "-m", "backscatter_rti.cli", "simulate", "--scene",
                           SCENE, "--out", str(tmp_path), "--scenario", "walk"],
                          env=env, capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    assert json.loads((tmp_path / "manifest.json").read_text())["backend"] == "numpy"


def test_numeric_failure_exit_code(tmp_path, monkeypatch):
    from backscatter_rti import pipeline
    from backscatter_rti.errors import NumericError

    def boom(cfg):
        raise NumericError("covariance is not positive definite")
    monkeypatch.setattr(pipeline, "build_model", boom)
    assert run("simulate", "--scene", SCENE, "--out", tmp_path, "--scenario", "walk") == 4


def test_backends_write_identical_logs(sim_dir, tmp_path):
    env = dict(os.environ, BACKSCATTER_RTI_DISABLE_NUMBA="1")
    subprocess.run([sys.executable, "-m", "backscatter_rti.cli", "simulate", "--scene", SCENE,
                    "--out", str(tmp_path)], env=env, check=True, capture_output=True,
                   timeout=300)
    assert (tmp_path / "walk.csv").read_bytes() == (sim_dir / "walk.csv").read_bytes()
