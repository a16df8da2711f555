"""
dlab/commands/report_command.py

成果物の表示コマンドの実装
"""

import argparse
import logging

from dlab.errors import EXIT_OK
from dlab.framework.command_base import BaseCommand, CommandRegistry, command
from dlab.framework.experiment_base import ExperimentRegistry
from dlab.impl.artifact_store import ArtifactStore
from dlab.ui import render_report

logger = logging.getLogger(__name__)


@command("report", "成果物の検査結果を表として表示する")
class ReportCommand(BaseCommand):
    """成果物ディレクトリを読み込み、検査ごとの合否と根拠タグを表示する"""

    def __init__(self, store: ArtifactStore, experiments: ExperimentRegistry):
        super().__init__(store)
        self.experiments = experiments

    def setup_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("artifact", help="成果物ディレクトリまたは manifest.json のパス")

    def execute_impl(self, args: argparse.Namespace) -> int:
        artifact = self.store.read(args.artifact, self.experiments.kinds())
        print(render_report(artifact))
        return EXIT_OK


def setup_report_command(registry: CommandRegistry, store: ArtifactStore, experiments: ExperimentRegistry) -> None:
    registry.register(ReportCommand(store, experiments))
