import json
import os
import subprocess
import sys

from torapot.cli import main

TINY = {
    "seed": 7,
    "context": {"dim": 1, "bounds": [-1, 1], "resolution": 41, "gradient_body": 2.0},
    "skoda": {"n_probes": 20},
    "certificates": [
        {"kind": "moser_trudinger", "count": 1, "weights": ["t"], "betas": [2.0]},
        {"kind": "subentropy", "count": 3},
        {"kind": "no_ent"},
    ],
}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_verify_tiny_config(tmp_path):
    cfg = _write(tmp_path, TINY)
    out = str(tmp_path / "out")
    assert main(["verify", cfg, "--out", out]) == 0
    csv = (tmp_path / "out" / "report.csv").read_text()
    assert csv.startswith("# torapot-report v1\n")
    assert "NaN" not in csv
    data = json.loads((tmp_path / "out" / "report.json").read_text())
    assert all(r["passed"] for r in data)
    assert all(r["seed"] is not None for r in data)


def test_verify_deterministic(tmp_path):
    cfg = _write(tmp_path, TINY)
    assert main(["verify", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["verify", cfg, "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "report.csv").read_bytes() == (tmp_path / "b" / "report.csv").read_bytes()
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_verify_seed_flag_changes_output(tmp_path):
    cfg = _write(tmp_path, TINY)
    assert main(["verify", cfg, "--out", str(tmp_path / "a"), "--seed", "7"]) == 0
    assert main(["verify", cfg, "--out", str(tmp_path / "b"), "--seed", "8"]) == 0
    assert (tmp_path / "a" / "report.csv").read_bytes() != (tmp_path / "b" / "report.csv").read_bytes()


def test_verify_env_var_out(tmp_path, monkeypatch):
    cfg = _write(tmp_path, TINY)
    monkeypatch.setenv("TORAPOT_OUT", str(tmp_path / "env-out"))
    assert main(["verify", cfg]) == 0
    assert (tmp_path / "env-out" / "report.csv").exists()


def test_verify_rejects_dim3(tmp_path, capsys):
    cfg = _write(tmp_path, {**TINY, "context": {"dim": 3, "resolution": 11}})
    assert main(["verify", cfg]) == 2
    assert "unsupported dimension" in capsys.readouterr().err


def test_verify_rejects_small_beta(tmp_path, capsys):
    bad = {**TINY, "certificates": [{"kind": "moser_trudinger", "count": 1, "betas": [0.5]}]}
    cfg = _write(tmp_path, bad)
    assert main(["verify", cfg]) == 2
    assert "beta must exceed 1" in capsys.readouterr().err


def test_verify_rejects_garbage_config(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert main(["verify", str(p)]) == 2


def test_verify_missing_file(capsys):
    assert main(["verify", "/nonexistent/cfg.json"]) == 2


def test_verify_bundled_default_resolves(tmp_path):
    from torapot.cli import _resolve_config

    path = _resolve_config("default.json")
    assert os.path.exists(path)


def test_verify_jobs_deterministic(tmp_path):
    cfg = _write(tmp_path, TINY)
    assert main(["verify", cfg, "--out", str(tmp_path / "a"), "--jobs", "1"]) == 0
    assert main(["verify", cfg, "--out", str(tmp_path / "b"), "--jobs", "3"]) == 0
    assert (tmp_path / "a" / "report.csv").read_bytes() == (tmp_path / "b" / "report.csv").read_bytes()


def test_sweep_counts(tmp_path):
    cfg = _write(
        tmp_path,
        {
            "seed": 3,
            "context": {"dim": 1, "resolution": 41},
            "skoda": {"n_probes": 10},
            "sweep": {"resolution": [41, 61, 81], "p": [1, 2], "beta": [2.0], "t": [0.0]},
        },
    )
    out = str(tmp_path / "out")
    assert main(["sweep", cfg, "--out", out]) == 0
    lines = (tmp_path / "out" / "sweep.csv").read_text().strip().splitlines()
    assert lines[0] == "# torapot-report v1"
    assert len(lines) == 2 + 6  # header comment + column row + 3*2 cells


def test_demo_no_ent(capsys):
    assert main(["demo", "no-ent"]) == 0
    out = capsys.readouterr().out
    assert "entropy = +INF, singularity type = same" in out


def test_demo_weight_construct(capsys):
    assert main(["demo", "weight-construct"]) == 0
    out = capsys.readouterr().out
    assert "t_k" in out and "sum k^-2" in out


def test_demo_unknown(capsys):
    assert main(["demo", "nope"]) == 2


def test_console_script_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "torapot.cli", "demo", "no-ent"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "entropy = +INF" in proc.stdout
