"""Command-line behavior: exit codes, outputs, determinism.

Most tests drive main(argv) in-process; one subprocess test exercises the
installed console script end to end.
"""

import csv
import json
import os
import shutil
import subprocess
import sys

import pytest

from lefcert.cli import main


@pytest.fixture(scope="module")
def pool_dir(tmp_path_factory):
    d = str(tmp_path_factory.mktemp("pool"))
    rc = main([
        "gen-synthetic", "--classes", "4", "--per-class", "16", "--dim", "24",
        "--seed", "3", "--shots", "6", "--queries-per-class", "2", "--out", d,
    ])
    assert rc == 0
    return d


def _episode_args(pool_dir):
    return [
        "--support", os.path.join(pool_dir, "support.lefc"),
        "--text", os.path.join(pool_dir, "text.lefc"),
        "--queries", os.path.join(pool_dir, "queries.lefc"),
    ]


def test_gen_synthetic_writes_everything(pool_dir):
    for name in ("features.lefc", "text.lefc", "support.lefc", "queries.lefc",
                 "manifest.json"):
        assert os.path.exists(os.path.join(pool_dir, name))
    manifest = json.load(open(os.path.join(pool_dir, "manifest.json")))
    assert manifest["config"]["classes"] == 4
    assert manifest["config"]["seed"] == 3


def test_certify_zero_budget_certifies_everything(pool_dir, tmp_path):
    out = str(tmp_path / "r.json")
    rc = main(["certify", *_episode_args(pool_dir), "--m", "2", "--t", "0",
               "--lambda", "1.0", "--out", out])
    assert rc == 0
    res = json.load(open(out))
    assert res["summary"]["certified_ratio"] == 1.0
    assert res["summary"]["clean_accuracy"] == 1.0
    assert res["config"]["m"] == 2
    assert all(q["failing_split"] is None for q in res["queries"])


def test_certify_results_deterministic(pool_dir, tmp_path):
    a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    for out in (a, b):
        assert main(["certify", *_episode_args(pool_dir), "--m", "1", "--t", "2",
                     "--lambda", "25", "--out", out]) == 0
    assert open(a, "rb").read() == open(b, "rb").read()


def test_certify_m_too_large_is_config_error(pool_dir, tmp_path, capsys):
    out = str(tmp_path / "r.json")
    rc = main(["certify", *_episode_args(pool_dir), "--m", "3", "--t", "0",
               "--out", out])  # K = 6 allows m <= 2
    assert rc == 1
    assert "M_TOO_LARGE" in capsys.readouterr().err
    assert not os.path.exists(out)


def test_missing_file_is_io_error(pool_dir, tmp_path, capsys):
    rc = main(["certify", "--support", str(tmp_path / "nope.lefc"),
               "--text", os.path.join(pool_dir, "text.lefc"),
               "--queries", os.path.join(pool_dir, "queries.lefc"),
               "--m", "1", "--t", "0", "--out", str(tmp_path / "r.json")])
    assert rc == 2
    assert "IO_FAILURE" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    rc = main(["certify", "--bogus"])
    assert rc == 1
    assert "CONFIG_INVALID" in capsys.readouterr().err


def test_missing_required_parameter(pool_dir, tmp_path, capsys):
    rc = main(["certify", *_episode_args(pool_dir), "--t", "0",
               "--out", str(tmp_path / "r.json")])
    assert rc == 1
    err = capsys.readouterr().err
    assert "CONFIG_INVALID" in err and "--m" in err


def test_config_file_supplies_flags(pool_dir, tmp_path):
    cfg_path = str(tmp_path / "cfg.json")
    json.dump(
        {
            "support": os.path.join(pool_dir, "support.lefc"),
            "text": os.path.join(pool_dir, "text.lefc"),
            "queries": os.path.join(pool_dir, "queries.lefc"),
            "m": 1, "t": 1, "lambda": 2.0, "out": str(tmp_path / "from_file.json"),
        },
        open(cfg_path, "w"),
    )
    assert main(["certify", "--config", cfg_path]) == 0
    res = json.load(open(str(tmp_path / "from_file.json")))
    assert res["config"]["lambda"] == 2.0

    # explicit flag beats the file
    out2 = str(tmp_path / "override.json")
    assert main(["certify", "--config", cfg_path, "--lambda", "9", "--out", out2]) == 0
    assert json.load(open(out2))["config"]["lambda"] == 9.0


def test_collective_command(pool_dir, tmp_path):
    out = str(tmp_path / "c.json")
    rc = main(["collective", *_episode_args(pool_dir), "--m", "1", "--t", "2",
               "--lambda", "1", "--out", out])
    assert rc == 0
    res = json.load(open(out))
    col = res["collective"]
    assert col["b_max"] == len(
        [b for b in col["per_query_broken"] if b]
    )
    assert sum(col["allocation"]) <= 2
    assert 0.0 <= col["certified_ratio"] <= 1.0


def test_sweep_writes_csv_png_and_sidecar(pool_dir, tmp_path):
    out = str(tmp_path / "sweep.csv")
    rc = main(["sweep", "--pool", pool_dir, "--t-max", "2", "--m-list", "0,1",
               "--lambda-list", "0,1", "--episodes", "2", "--seed", "0",
               "--out", out, "--config", _sweep_cfg(tmp_path)])
    assert rc == 0
    assert os.path.exists(out)
    assert os.path.exists(str(tmp_path / "sweep.png"))
    sidecar = json.load(open(str(tmp_path / "sweep.config.json")))
    assert sidecar["config"]["t_max"] == 2
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 3 * 2 * 2
    assert {r["protocol"] for r in rows} == {"default"}


def _sweep_cfg(tmp_path):
    path = str(tmp_path / "sweep_cfg.json")
    json.dump({"episode_classes": 3, "episode_shots": 5}, open(path, "w"))
    return path


def test_sweep_collective_protocol(pool_dir, tmp_path):
    out = str(tmp_path / "coll.csv")
    cfg_path = str(tmp_path / "coll_cfg.json")
    json.dump({"episode_classes": 3, "episode_shots": 5, "queries_per_class": 4},
              open(cfg_path, "w"))
    rc = main(["sweep", "--pool", pool_dir, "--t-max", "1", "--m-list", "1",
               "--lambda-list", "1", "--seed", "0", "--protocol", "collective",
               "--out", out, "--no-plot", "--config", cfg_path])
    assert rc == 0
    rows = list(csv.DictReader(open(out)))
    assert {r["protocol"] for r in rows} == {"collective"}
    assert not os.path.exists(str(tmp_path / "coll.png"))


def test_oracle_check_reports_are_byte_identical(tmp_path):
    a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    for out in (a, b):
        rc = main(["oracle-check", "--trials", "10", "--seed", "5",
                   "--grid-steps", "3", "--out", out])
        assert rc == 0
    assert open(a, "rb").read() == open(b, "rb").read()
    report = json.load(open(a))
    assert report["ok"] is True
    assert report["report"]["violations"] == []


def test_console_script_entry_point(pool_dir, tmp_path):
    exe = shutil.which("lefcert")
    if exe is None:
        pytest.skip("console script not on PATH")
    out = str(tmp_path / "r.json")
    proc = subprocess.run(
        [exe, "certify", *_episode_args(pool_dir), "--m", "1", "--t", "1",
         "--lambda", "1", "--out", out],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert os.path.exists(out)


def test_jobs_env_fallback(pool_dir, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("LEFCERT_JOBS", "not-a-number")
    rc = main(["certify", *_episode_args(pool_dir), "--m", "1", "--t", "0",
               "--lambda", "1", "--out", str(tmp_path / "r.json")])
    assert rc == 1
    assert "LEFCERT_JOBS" in capsys.readouterr().err
    monkeypatch.setenv("LEFCERT_JOBS", "2")
    assert main(["certify", *_episode_args(pool_dir), "--m", "1", "--t", "0",
                 "--lambda", "1", "--out", str(tmp_path / "r.json")]) == 0
