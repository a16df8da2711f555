"""
tests/test_cli.py

コマンドラインの終了コードと成果物のテスト
"""

import json
import os

import pytest

from dlab.core import DiophantineLab, run_cli
from dlab.errors import ConfigError

from conftest import CONFIG_DIR

COUNTEREXAMPLE_CONFIG = os.path.join(CONFIG_DIR, "counterexample_M3_5.yaml")
TRUNCATED_CONFIG = os.path.join(CONFIG_DIR, "truncated_full.yaml")


@pytest.fixture(autouse=True)
def workspace(tmp_path, monkeypatch):
    """カレントディレクトリを一時ディレクトリにし、設定の環境変数を外す"""
    monkeypatch.chdir(tmp_path)
    for key in ("DLAB_CONFIG", "OUTPUT_DIR", "LOG_DIR", "EXACT_COMPONENT_LIMIT", "SIEVE_LIMIT_MAX",
                "DEFAULT_THREADS", "DEFAULT_TRIALS", "DYADIC_RESOLUTION_BITS"):
        monkeypatch.delenv(key, raising=False)
    return tmp_path


def test_no_command_is_usage_error():
    assert run_cli([]) == 2


def test_missing_and_empty_config(workspace):
    assert run_cli(["run", "missing.yaml"]) == 2
    (workspace / "empty.yaml").write_text("", encoding="utf-8")
    assert run_cli(["run", "empty.yaml"]) == 2


def test_run_and_report(workspace, capsys):
    assert run_cli(["--out", "out", "run", COUNTEREXAMPLE_CONFIG]) == 0
    directory = workspace / "out" / "counterexample-M3-5"
    assert (directory / "manifest.json").exists()
    assert (directory / "ledger.csv").exists()
    assert "counterexample" in capsys.readouterr().out

    assert run_cli(["report", str(directory)]) == 0
    assert "limsup-collapse" in capsys.readouterr().out
    assert run_cli(["report", str(workspace / "out" / "nowhere")]) == 2


def test_seed_override_is_recorded(workspace):
    assert run_cli(["--seed", "17", "--out", "out", "run", COUNTEREXAMPLE_CONFIG]) == 0
    with open(workspace / "out" / "counterexample-M3-5" / "summary.json", encoding="utf-8") as f:
        assert json.load(f)["seed"] == 17


def test_log_file_is_written(workspace):
    run_cli(["--out", "out", "run", COUNTEREXAMPLE_CONFIG])
    logs = os.listdir(workspace / "logs")
    assert len(logs) == 1 and logs[0].startswith("dlab-")


def test_invalid_threads_exits_with_usage():
    with pytest.raises(SystemExit) as excinfo:
        run_cli(["--threads", "0", "run", COUNTEREXAMPLE_CONFIG])
    assert excinfo.value.code == 2


def test_unknown_application_key(workspace):
    (workspace / "dlab.yaml").write_text("PLOT_DPI: 300\n", encoding="utf-8")
    assert run_cli(["run", COUNTEREXAMPLE_CONFIG]) == 2
    with pytest.raises(ConfigError):
        DiophantineLab("dlab.yaml")


def test_non_positive_budget(workspace):
    (workspace / "lab.yaml").write_text("SIEVE_LIMIT_MAX: 0\n", encoding="utf-8")
    assert run_cli(["--config", "lab.yaml", "run", COUNTEREXAMPLE_CONFIG]) == 2


def test_exact_component_limit_from_environment(monkeypatch):
    monkeypatch.setenv("EXACT_COMPONENT_LIMIT", "10")
    assert run_cli(["--out", "out", "run", TRUNCATED_CONFIG]) == 3


def test_selftest_subset(workspace):
    assert run_cli(["--out", "out", "selftest", "--only", "counterexample", "catlin"]) == 0
    assert sorted(os.listdir(workspace / "out" / "selftest")) == ["catlin", "counterexample"]
    assert run_cli(["selftest", "--only", "plotting"]) == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as excinfo:
        run_cli(["--version"])
    assert excinfo.value.code == 0
    assert "dlab" in capsys.readouterr().out


def read_tree(root):
    contents = {}
    for directory, _, files in os.walk(root):
        for name in files:
            path = os.path.join(directory, name)
            with open(path, "rb") as f:
                contents[os.path.relpath(path, root)] = f.read()
    return contents


@pytest.mark.slow
def test_selftest_is_byte_identical_across_threads(workspace):
    first = run_cli(["--seed", "42", "--out", "first", "selftest"])
    second = run_cli(["--seed", "42", "--threads", "4", "--out", "second", "selftest"])
    assert first == second
    assert first in (0, 1)
    assert read_tree(workspace / "first") == read_tree(workspace / "second")
