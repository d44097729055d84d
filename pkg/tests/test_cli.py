import json
import subprocess
import sys
from pathlib import Path

import pytest

from rwre_mle.cli import run

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
SUBCOMMANDS = ("simulate", "estimate", "moments", "profile", "bpre-check", "replicate", "diagnose")


def _cfg(tmp_path, name="example1.json", **override):
    cfg = json.loads((CONFIGS / name).read_text())
    cfg.update(override)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def test_help_lists_subcommands():
    out = subprocess.run([sys.executable, "-m", "rwre_mle", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for name in SUBCOMMANDS:
        assert name in out.stdout


def test_usage_error_exit_code(capsys):
    assert run(["estimate"]) == 1
    assert run(["no-such-command"]) == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_config_field(tmp_path):
    assert run(["estimate", "--config", _cfg(tmp_path, bogus=1), "--seed", "1",
                "--out", str(tmp_path)]) == 1


def test_missing_config_file(tmp_path):
    assert run(["estimate", "--config", str(tmp_path / "nope.json"), "--seed", "1"]) == 1


def test_runtime_failure_exit_code(tmp_path):
    cfg = _cfg(tmp_path, x_min=-1)
    assert run(["simulate", "--config", cfg, "--seed", "1", "--n", "2000",
                "--out", str(tmp_path)]) == 2


def test_replicate_outputs_and_reproducible(tmp_path):
    cfg = _cfg(tmp_path, n_grid=[200, 400])
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert run(["replicate", "--config", cfg, "--reps", "3", "--seed", "42",
                    "--out", str(out)]) == 0
        outs.append(out)
    for name in ("estimates.csv", "summary.csv", "manifest.json"):
        assert (outs[0] / name).exists()
    for name in ("estimates.csv", "summary.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    strip = lambda p: (p / "manifest.json").read_text().splitlines()[:-2]
    assert strip(outs[0]) == strip(outs[1])


def test_seed_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("RWRE_MLE_SEED", "5")
    assert run(["simulate", "--config", _cfg(tmp_path), "--n", "100", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "header.json").read_text())["seed"] == 5
    assert run(["simulate", "--config", _cfg(tmp_path), "--n", "100", "--seed", "6",
                "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "header.json").read_text())["seed"] == 6


def test_generated_seed_is_printed(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("RWRE_MLE_SEED", raising=False)
    assert run(["simulate", "--config", _cfg(tmp_path), "--n", "50", "--out", str(tmp_path)]) == 0
    seed = json.loads((tmp_path / "header.json").read_text())["seed"]
    assert str(seed) in capsys.readouterr().out


@pytest.mark.parametrize("cmd, files", [
    (["estimate", "--n", "500"], ["estimate.json"]),
    (["moments", "--n", "500"], ["moments.csv"]),
    (["profile", "--n", "500", "--resolution", "11"], ["profile.csv"]),
    (["bpre-check", "--kmax", "20", "--samples", "20000"], ["bpre_pi.csv", "bpre_summary.json"]),
    (["diagnose", "--n", "500", "--reps", "5"], ["diagnostics.json"]),
])
def test_subcommand_outputs(tmp_path, cmd, files):
    assert run(cmd + ["--config", _cfg(tmp_path), "--seed", "3", "--out", str(tmp_path)]) == 0
    for f in files:
        assert (tmp_path / f).stat().st_size > 0


def test_bpre_check_mean(tmp_path):
    assert run(["bpre-check", "--config", _cfg(tmp_path), "--kmax", "20", "--seed", "1",
                "--out", str(tmp_path)]) == 0
    s = json.loads((tmp_path / "bpre_summary.json").read_text())
    assert abs(s["mean_hat"] - 3.0) < 4 * s["mean_stderr"]
    assert len((tmp_path / "bpre_pi.csv").read_text().splitlines()) == 22


def test_diagnose_subballistic(tmp_path, capsys):
    cfg = str(CONFIGS / "subballistic.json")
    assert run(["diagnose", "--config", cfg, "--seed", "1", "--n", "100", "--reps", "3",
                "--out", str(tmp_path)]) == 0
    assert "regime violation" in capsys.readouterr().out


def test_flag_overrides(tmp_path):
    assert run(["estimate", "--config", _cfg(tmp_path), "--seed", "3", "--n", "300",
                "--grid-points", "8", "--max-evals", "50", "--out", str(tmp_path)]) == 0
    body = json.loads((tmp_path / "estimate.json").read_text())
    assert body["evaluations"] <= 8 + 50 + 2
