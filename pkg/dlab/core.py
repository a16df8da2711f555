"""
dlab/core.py

dlab の中核となる統合管理クラス
設定読み込み、ログ初期化、サービス管理、コマンド登録を一元化
"""

import argparse
import logging
import logging.handlers
import os
import sys
from datetime import datetime
from typing import Any, List, Optional

import yaml

import dlab
from dlab import arith, intervals
from dlab.commands.report_command import setup_report_command
from dlab.commands.run_command import setup_run_command
from dlab.commands.selftest_command import setup_selftest_command
from dlab.errors import EXIT_USAGE, ConfigError, handle_dlab_error
from dlab.experiments import setup_experiments
from dlab.framework.command_base import CommandRegistry, RunSettings
from dlab.framework.experiment_base import ExperimentRegistry
from dlab.impl.artifact_store import ArtifactStore
from dlab.intervals import MODES

DEFAULT_CONFIG_PATH = "dlab.yaml"

# 正の整数である必要がある設定キー
POSITIVE_INT_KEYS = ("SIEVE_LIMIT_MAX", "EXACT_COMPONENT_LIMIT", "DYADIC_RESOLUTION_BITS",
                     "DEFAULT_TRIALS", "DEFAULT_THREADS")


class DiophantineLab:
    """
    dlab の統合管理クラス
    アプリケーション全体のライフサイクルを管理
    """

    def __init__(self, config_path: Optional[str] = None):
        """
        インスタンスの初期化

        Args:
            config_path: 設定ファイルのパス（省略時は DLAB_CONFIG または dlab.yaml）
        """
        self.config_path = config_path or os.getenv("DLAB_CONFIG") or DEFAULT_CONFIG_PATH
        self.config = {}
        self.logger = None

        # 初期化の実行順序は依存関係に基づく
        self._load_config()
        self._setup_logging()
        self._init_services()
        self._setup_command_registry()

    def _load_config(self) -> None:
        """
        設定ファイルの読み込みと環境変数による上書き処理
        デフォルト値 → YAMLファイル → 環境変数の順で優先度が高い
        """
        # デフォルト設定値
        self.config = {
            "CONSOLE_LOG_LEVEL": "INFO",
            "FILE_LOG_LEVEL": "DEBUG",
            "LOG_DIR": "logs",
            "OUTPUT_DIR": "artifacts",
            "SIEVE_LIMIT_MAX": 50_000_000,
            "EXACT_COMPONENT_LIMIT": 10_000_000,
            "DYADIC_RESOLUTION_BITS": 48,
            "DEFAULT_TRIALS": 1000,
            "DEFAULT_THREADS": 1,
        }

        # YAMLファイルからの読み込み
        if os.path.exists(self.config_path):
            try:
                with open(self.config_path, "r", encoding="utf-8") as f:
                    yaml_config = yaml.safe_load(f)
            except (OSError, yaml.YAMLError) as e:
                raise ConfigError(f"設定ファイルを読み込めません: {self.config_path}: {e}")
            if yaml_config:
                if not isinstance(yaml_config, dict):
                    raise ConfigError(f"設定ファイルの最上位はマッピングである必要があります: {self.config_path}")
                unknown = sorted(set(yaml_config) - set(self.config))
                if unknown:
                    raise ConfigError(f"未知の設定キーです: {', '.join(map(str, unknown))}")
                self.config.update(yaml_config)

        # 環境変数による上書き（最優先）
        env_overrides = 0
        for key in self.config:
            env_value = os.getenv(key)
            if env_value:
                # 型を適切に変換
                if isinstance(self.config[key], int) and env_value.isdigit():
                    self.config[key] = int(env_value)
                else:
                    self.config[key] = env_value
                env_overrides += 1
        self._env_overrides = env_overrides

        # 数値項目の検証
        invalid = [key for key in POSITIVE_INT_KEYS
                   if isinstance(self.config[key], bool) or not isinstance(self.config[key], int)
                   or self.config[key] < 1]
        if invalid:
            raise ConfigError(f"設定値は正の整数である必要があります: {', '.join(invalid)}")

    def _setup_logging(self) -> None:
        """
        ログシステムの初期化
        コンソール出力とファイル出力で異なるレベルに対応
        """
        # 設定からログレベルを取得
        console_level = getattr(logging, str(self.config["CONSOLE_LOG_LEVEL"]).upper(), logging.INFO)
        file_level = getattr(logging, str(self.config["FILE_LOG_LEVEL"]).upper(), logging.DEBUG)

        # ルートロガーの設定（最も詳細なレベルに設定）
        root_logger = logging.getLogger()
        root_logger.setLevel(logging.DEBUG)

        # 既存ハンドラのクリア（重複防止）
        for handler in root_logger.handlers[:]:
            root_logger.removeHandler(handler)

        # ログフォーマッタの定義
        detailed_formatter = logging.Formatter(
            "%(asctime)s [%(levelname)s] %(name)s: %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S"
        )

        simple_formatter = logging.Formatter(
            "%(asctime)s [%(levelname)s]: %(message)s",
            datefmt="%H:%M:%S"
        )

        # コンソール出力ハンドラ（表示は標準出力に出すのでログは標準エラー）
        console = logging.StreamHandler(sys.stderr)
        console.setFormatter(simple_formatter if console_level >= logging.INFO else detailed_formatter)
        console.setLevel(console_level)
        root_logger.addHandler(console)

        # ファイル出力ハンドラ（ローテーション機能付き）
        log_dir = str(self.config["LOG_DIR"])
        try:
            os.makedirs(log_dir, exist_ok=True)
            today = datetime.now().strftime("%Y-%m-%d")
            log_path = os.path.join(log_dir, f"dlab-{today}.log")

            if os.access(log_dir, os.W_OK):
                file_handler = logging.handlers.RotatingFileHandler(
                    log_path,
                    maxBytes=10485760,  # 10MB
                    backupCount=5,
                    encoding="utf-8"
                )
                file_handler.setFormatter(detailed_formatter)
                file_handler.setLevel(file_level)
                root_logger.addHandler(file_handler)
            else:
                print(f"WARNING: No write permission to log directory: {log_dir}", file=sys.stderr)
        except OSError as e:
            print(f"ERROR: Failed to setup file logging: {e}", file=sys.stderr)

        # 外部ライブラリのログレベル抑制（ノイズ削減）
        logging.getLogger("numpy").setLevel(logging.WARNING)
        logging.getLogger("matplotlib").setLevel(logging.WARNING)

        self.logger = logging.getLogger(__name__)
        if os.path.exists(self.config_path):
            self.logger.debug(f"Configuration loaded from {self.config_path}")
        else:
            self.logger.debug(f"Configuration file {self.config_path} not found, using defaults")
        if self._env_overrides:
            self.logger.debug(f"Configuration overridden by {self._env_overrides} environment variables")
        self.logger.debug(f"Logging initialized - Console: {self.config['CONSOLE_LOG_LEVEL']}, "
                          f"File: {self.config['FILE_LOG_LEVEL']}")

    def _init_services(self) -> None:
        """
        計算エンジンの予算設定と成果物ストア、実験レジストリの初期化
        """
        arith.set_sieve_budget(self.config["SIEVE_LIMIT_MAX"])
        intervals.configure(self.config["EXACT_COMPONENT_LIMIT"], self.config["DYADIC_RESOLUTION_BITS"])
        self.logger.debug(f"Engine budgets: sieve {self.config['SIEVE_LIMIT_MAX']}, "
                          f"exact components {self.config['EXACT_COMPONENT_LIMIT']}")

        self.store = ArtifactStore(str(self.config["OUTPUT_DIR"]))
        self.experiments = setup_experiments(ExperimentRegistry())
        self.logger.debug(f"Experiments registered: {', '.join(self.experiments.kinds())}")

    def _setup_command_registry(self) -> None:
        """
        コマンドレジストリの初期化と各コマンドモジュールからのコマンド登録
        """
        self.command_registry = CommandRegistry()
        self.command_registry.set_config(RunSettings(
            threads=self.config["DEFAULT_THREADS"],
            output_dir=str(self.config["OUTPUT_DIR"]),
            default_trials=self.config["DEFAULT_TRIALS"],
        ))
        setup_run_command(self.command_registry, self.store, self.experiments)
        setup_report_command(self.command_registry, self.store, self.experiments)
        setup_selftest_command(self.command_registry, self.store, self.experiments)
        self.logger.debug("Command registry initialized")

    def build_parser(self) -> argparse.ArgumentParser:
        """グローバルフラグとサブコマンドを持つ引数パーサーを構築する"""
        parser = build_global_parser()
        subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
        self.command_registry.setup_all(subparsers)
        return parser

    def run(self, argv: Optional[List[str]] = None) -> int:
        """
        コマンドラインを解釈してコマンドを実行する

        Returns:
            int: 終了コード（0=合格、1=検査の不合格、2=使用法・設定のエラー、3=資源の不足）
        """
        parser = self.build_parser()
        args = parser.parse_args(argv)
        handler = getattr(args, "handler", None)
        if handler is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE

        if args.threads is not None and args.threads < 1:
            parser.error(f"--threads は1以上である必要があります: {args.threads}")
        if args.seed is not None and not 0 <= args.seed < 2**64:
            parser.error(f"--seed は 0〜2^64−1 の範囲である必要があります: {args.seed}")

        settings = RunSettings(
            seed=args.seed,
            threads=args.threads or self.config["DEFAULT_THREADS"],
            mode=args.mode,
            output_dir=args.out or str(self.config["OUTPUT_DIR"]),
            default_trials=self.config["DEFAULT_TRIALS"],
        )
        self.store.root = settings.output_dir
        self.command_registry.set_config(settings)
        self.logger.debug(f"Run settings: {settings}")

        try:
            return handler.execute_with_framework(args)
        except Exception as e:
            if self.logger:
                self.logger.critical(f"Critical error: {e}", exc_info=True)
            return handle_dlab_error(e, "Critical error")

    def get_config(self, key: str, default: Any = None) -> Any:
        """
        設定値の取得

        Args:
            key: 設定キー
            default: デフォルト値

        Returns:
            設定値
        """
        return self.config.get(key, default)


def build_global_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dlab",
        description="ランダムな分数に対する Khintchine 型定理の卓上検証ラボ",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {dlab.__version__}")
    parser.add_argument("--config", help="アプリケーション設定ファイル（既定: DLAB_CONFIG または dlab.yaml）")
    parser.add_argument("--seed", type=int, help="マスターシード（設定ファイルの値より優先）")
    parser.add_argument("--threads", type=int, help="試行の並列数（結果は並列数に依存しない）")
    parser.add_argument("--mode", choices=MODES, help="測度の計算方式")
    parser.add_argument("--out", help="成果物の出力ディレクトリ（OUTPUT_DIR より優先）")
    return parser


def run_cli(argv: Optional[List[str]] = None) -> int:
    """
    CLI起動のエントリーポイント関数
    main.py とコンソールスクリプトから呼び出される
    """
    # --config だけを先に読み取り、設定ファイルを決める
    pre_parser = argparse.ArgumentParser(add_help=False)
    pre_parser.add_argument("--config")
    known, _ = pre_parser.parse_known_args(argv)
    try:
        lab = DiophantineLab(known.config)
    except Exception as e:
        return handle_dlab_error(e, "Initialization failed")
    return lab.run(argv)


def run_cli_exit() -> None:
    """コンソールスクリプト用: 終了コードでプロセスを終了する"""
    sys.exit(run_cli())
