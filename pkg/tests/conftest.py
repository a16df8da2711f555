"""
tests/conftest.py

テスト共通のフィクスチャ
計算エンジンの予算とログ設定をテストごとに元へ戻す
"""

import logging
import os

import pytest

from dlab import arith, intervals
from dlab.data import config_from_mapping
from dlab.commands.run_command import execute_experiment
from dlab.experiments import setup_experiments
from dlab.framework.command_base import RunSettings
from dlab.framework.experiment_base import ExperimentRegistry
from dlab.impl.artifact_store import ArtifactStore

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIG_DIR = os.path.join(PROJECT_ROOT, "configs")


@pytest.fixture(autouse=True)
def restore_engine_budgets():
    """core.py が書き換えるモジュール変数を保存・復元する"""
    saved = (arith.SIEVE_LIMIT_MAX, intervals.EXACT_COMPONENT_LIMIT, intervals.DYADIC_RESOLUTION_BITS)
    yield
    arith.set_sieve_budget(saved[0])
    intervals.configure(saved[1], saved[2])


@pytest.fixture(autouse=True)
def restore_logging():
    """DiophantineLab がルートロガーに追加したハンドラを閉じて元に戻す"""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    for handler in root.handlers[:]:
        if handler not in handlers:
            root.removeHandler(handler)
            handler.close()
    for handler in handlers:
        if handler not in root.handlers:
            root.addHandler(handler)
    root.setLevel(level)


@pytest.fixture
def experiments() -> ExperimentRegistry:
    return setup_experiments(ExperimentRegistry())


@pytest.fixture
def store(tmp_path) -> ArtifactStore:
    return ArtifactStore(str(tmp_path / "artifacts"))


@pytest.fixture
def run_mapping(experiments, store):
    """設定の辞書から実験を実行し (結果, 成果物ディレクトリ) を返す"""

    def run(data, seed=None, threads=1, mode=None, run_name=None):
        config = config_from_mapping(data, f"<test:{data['experiment'].get('name', data['experiment']['kind'])}>")
        settings = RunSettings(seed=seed, threads=threads, mode=mode, output_dir=store.root)
        return execute_experiment(config, experiments, store, settings, run_name)

    return run
