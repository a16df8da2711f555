"""
dlab/framework/command_base.py

CLIコマンドフレームワークの基盤クラス群
実行時設定の注入、エラーハンドリング、サブコマンド登録を統一化
"""

import argparse
import logging
from abc import ABC, abstractmethod
from typing import Dict, List, Optional

from dlab.errors import EXIT_OK, handle_dlab_error
from dlab.intervals import MODE_EXACT

logger = logging.getLogger(__name__)


class RunSettings:
    """
    コマンド実行時の共通設定
    設定ファイルの値に --seed / --threads / --mode / --out が優先する
    """

    def __init__(self, seed: Optional[int] = None, threads: int = 1, mode: Optional[str] = None,
                 output_dir: str = "artifacts", default_trials: int = 1000):
        self.seed = seed
        self.threads = threads
        self.mode = mode
        self.output_dir = output_dir
        self.default_trials = default_trials

    def resolve_mode(self, configured: Optional[str]) -> str:
        return self.mode or configured or MODE_EXACT

    def resolve_seed(self, configured: Optional[int]) -> int:
        if self.seed is not None:
            return self.seed
        return configured if configured is not None else 0

    def __repr__(self) -> str:
        return (f"RunSettings(seed={self.seed}, threads={self.threads}, mode={self.mode}, "
                f"output_dir={self.output_dir!r})")


class BaseCommand(ABC):
    """
    すべてのCLIコマンドの基底クラス
    共通のログ記録とエラーハンドリングを提供
    """

    def __init__(self, store=None):
        """
        基底コマンドの初期化

        Args:
            store: 成果物ストア（ArtifactStore）
        """
        self.store = store
        self.command_name = ""
        self.description = ""

        # 設定値は後からcore.pyによって注入される
        self.settings = RunSettings()

    def set_settings(self, settings: RunSettings) -> "BaseCommand":
        """
        実行時設定を注入する

        Returns:
            BaseCommand: メソッドチェーン用に自身を返す
        """
        self.settings = settings
        return self

    def execute_with_framework(self, args: argparse.Namespace) -> int:
        """
        フレームワークによる統一コマンド実行処理
        ログ記録 → 実際の処理 → エラーハンドリングの流れを管理

        Returns:
            int: 終了コード
        """
        arguments = {k: v for k, v in vars(args).items() if k != "handler"}
        logger.info(f"{self.command_name} invoked with args: {arguments}")

        try:
            code = self.execute_impl(args)
            logger.info(f"{self.command_name} completed with exit code {code}")
            return code
        except Exception as e:
            # 統一エラーハンドリング
            return handle_dlab_error(e, f"{self.command_name} failed")

    @abstractmethod
    def execute_impl(self, args: argparse.Namespace) -> int:
        """
        コマンドの実際の処理内容
        各サブクラスで実装必須

        Returns:
            int: 終了コード（0=成功）
        """
        return EXIT_OK

    def setup_arguments(self, parser: argparse.ArgumentParser) -> None:
        """サブコマンド固有の引数（必要なサブクラスのみ上書き）"""

    def setup_parser(self, subparsers) -> argparse.ArgumentParser:
        """argparse のサブコマンドとして登録する"""
        parser = subparsers.add_parser(self.command_name, help=self.description,
                                       description=self.description)
        self.setup_arguments(parser)
        parser.set_defaults(handler=self)
        return parser


class CommandRegistry:
    """
    アプリケーション内のすべてのコマンドを管理するレジストリクラス
    コマンドの登録、設定値の注入、argparse への登録を担当
    """

    def __init__(self):
        self.commands: List[BaseCommand] = []
        self._settings = RunSettings()

    def set_config(self, settings: RunSettings) -> "CommandRegistry":
        """
        レジストリの設定値を更新
        core.pyから設定ファイルとコマンドラインの値が注入される
        """
        self._settings = settings
        for cmd in self.commands:
            cmd.set_settings(settings)
        return self

    def register(self, command: BaseCommand) -> "CommandRegistry":
        """コマンドを登録し、設定値を注入する"""
        command.set_settings(self._settings)
        self.commands.append(command)
        return self

    def get(self, name: str) -> Optional[BaseCommand]:
        for cmd in self.commands:
            if cmd.command_name == name:
                return cmd
        return None

    def setup_all(self, subparsers) -> Dict[str, argparse.ArgumentParser]:
        """登録されたすべてのコマンドを argparse に登録する"""
        parsers = {cmd.command_name: cmd.setup_parser(subparsers) for cmd in self.commands}
        logger.debug(f"Registered {len(self.commands)} commands")
        return parsers


def command(name: str, description: str):
    """
    クラスベースコマンド作成用のデコレータ
    コマンドクラスに自動的にメタデータを設定

    Args:
        name: サブコマンド名
        description: コマンドの説明
    """
    def decorator(cls):
        class WrappedCommand(cls):
            def __init__(self, *args, **kwargs):
                super().__init__(*args, **kwargs)
                self.command_name = name
                self.description = description

        WrappedCommand.__name__ = cls.__name__
        WrappedCommand.__qualname__ = cls.__qualname__
        WrappedCommand.__doc__ = cls.__doc__
        return WrappedCommand
    return decorator
