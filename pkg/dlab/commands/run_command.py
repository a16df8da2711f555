"""
dlab/commands/run_command.py

実験の実行コマンドの実装
設定ファイルを読み込み、実験を実行し、成果物を書き出して結果を表示する
"""

import argparse
import logging
from typing import Tuple

from dlab.data import ExperimentConfig, load_experiment_config
from dlab.errors import EXIT_CHECK_FAILED, EXIT_OK
from dlab.framework.command_base import BaseCommand, CommandRegistry, RunSettings, command
from dlab.framework.experiment_base import ExperimentRegistry, ExperimentResult
from dlab.impl.artifact_store import ArtifactStore
from dlab.ui import render_report

logger = logging.getLogger(__name__)


def execute_experiment(config: ExperimentConfig, experiments: ExperimentRegistry, store: ArtifactStore,
                       settings: RunSettings, run_name: str = None) -> Tuple[ExperimentResult, str]:
    """
    1つの実験設定を実行し、成果物を書き込む

    Args:
        config: 実験設定
        experiments: 実験レジストリ
        store: 成果物ストア
        settings: 実行時設定
        run_name: 出力ディレクトリ名（省略時は設定の output.dir）

    Returns:
        Tuple[ExperimentResult, str]: 実験結果と書き込んだディレクトリ
    """
    experiment = experiments.create(config, settings)
    result = experiment.run()
    directory = store.write_result(result, run_name or config.output_dir, config.config_hash, experiment.seed)
    return result, directory


@command("run", "設定ファイルの実験を実行して成果物を書き出す")
class RunCommand(BaseCommand):
    """
    設定ファイル1つを実行するコマンド
    すべての検査が合格なら 0、不合格があれば 1 を返す
    """

    def __init__(self, store: ArtifactStore, experiments: ExperimentRegistry):
        super().__init__(store)
        self.experiments = experiments

    def setup_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("config", help="実験設定ファイル（YAML）のパス")

    def execute_impl(self, args: argparse.Namespace) -> int:
        config = load_experiment_config(args.config)
        result, directory = execute_experiment(config, self.experiments, self.store, self.settings)
        print(render_report(self.store.read(directory, self.experiments.kinds())))
        if not result.passed:
            logger.warning(f"{len(result.failures)} checks failed: "
                           f"{', '.join(row.check for row in result.failures)}")
            return EXIT_CHECK_FAILED
        return EXIT_OK


def setup_run_command(registry: CommandRegistry, store: ArtifactStore, experiments: ExperimentRegistry) -> None:
    """
    実行コマンドをレジストリに登録

    Args:
        registry: コマンドレジストリ
        store: 成果物ストア
        experiments: 実験レジストリ
    """
    registry.register(RunCommand(store, experiments))
