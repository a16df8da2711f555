"""
dlab/framework/experiment_base.py

実験フレームワークの基盤クラス群
検査結果の記録形式、実験の登録、実行時設定の解決を統一化
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Type

from dlab.data import ExperimentConfig
from dlab.errors import ConfigError
from dlab.framework.command_base import RunSettings

logger = logging.getLogger(__name__)

STATUS_PASS = "pass"
STATUS_FAIL = "fail"
STATUS_INFO = "info"     # 参考値（合否に影響しない）


@dataclass
class CheckRow:
    """
    1つの検査結果
    passed=None は参考として記録するだけの行
    """
    check: str
    tag: str
    passed: Optional[bool]
    detail: Dict[str, Any] = field(default_factory=dict)

    @property
    def status(self) -> str:
        if self.passed is None:
            return STATUS_INFO
        return STATUS_PASS if self.passed else STATUS_FAIL


@dataclass
class ExperimentResult:
    """実験1回分の検査行・表・要約"""
    kind: str
    name: str
    checks: List[CheckRow] = field(default_factory=list)
    tables: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(row.passed is not False for row in self.checks)

    @property
    def failures(self) -> List[CheckRow]:
        return [row for row in self.checks if row.passed is False]


class BaseExperiment(ABC):
    """
    すべての実験の基底クラス
    シード・スレッド数・測度モードの解決と結果の記録を提供
    """

    kind = ""
    description = ""

    def __init__(self, config: ExperimentConfig, settings: RunSettings):
        self.config = config
        self.settings = settings
        self.seed = settings.resolve_seed(config.master_seed)
        self.mode = settings.resolve_mode(config.mode)
        self.threads = max(1, settings.threads)
        self.result = ExperimentResult(self.kind, config.name)

    def check(self, check: str, tag: str, passed: Optional[bool], **detail) -> CheckRow:
        """検査結果を1行記録する"""
        row = CheckRow(check, tag, None if passed is None else bool(passed), detail)
        self.result.checks.append(row)
        if passed is False:
            logger.warning(f"[{self.kind}] check failed: {check} ({tag}) {detail}")
        else:
            logger.debug(f"[{self.kind}] {row.status}: {check}")
        return row

    def table(self, name: str, rows: List[Dict[str, Any]]) -> None:
        """回帰用の表（軌跡など）を記録する"""
        self.result.tables[name] = rows

    def run(self) -> ExperimentResult:
        """
        実験を実行して結果を返す
        実験固有の処理は execute_impl に実装する
        """
        logger.info(f"Experiment {self.kind} '{self.config.name}' started "
                    f"(seed={self.seed}, mode={self.mode}, threads={self.threads})")
        self.result.summary.update({"kind": self.kind, "name": self.config.name,
                                    "seed": self.seed, "mode": self.mode})
        self.execute_impl()
        self.result.summary["passed"] = self.result.passed
        self.result.summary["checks"] = len(self.result.checks)
        self.result.summary["failures"] = len(self.result.failures)
        logger.info(f"Experiment {self.kind} '{self.config.name}' finished: "
                    f"{len(self.result.checks)} checks, {len(self.result.failures)} failures")
        return self.result

    @abstractmethod
    def execute_impl(self) -> None:
        """
        実験の実際の処理内容
        各サブクラスで実装必須
        """


class ExperimentRegistry:
    """
    実験の種類と実装クラスの対応を管理するレジストリクラス
    """

    def __init__(self):
        self.experiments: Dict[str, Type[BaseExperiment]] = {}

    def register(self, experiment_cls: Type[BaseExperiment]) -> "ExperimentRegistry":
        if not experiment_cls.kind:
            raise ValueError(f"{experiment_cls.__name__} に kind が設定されていません")
        self.experiments[experiment_cls.kind] = experiment_cls
        return self

    def kinds(self) -> List[str]:
        return sorted(self.experiments)

    def create(self, config: ExperimentConfig, settings: RunSettings) -> BaseExperiment:
        """設定の種類に対応する実験を生成する"""
        experiment_cls = self.experiments.get(config.kind)
        if experiment_cls is None:
            raise ConfigError(f"実験の種類 {config.kind} は登録されていません",
                              config.line_of("experiment", "kind"))
        return experiment_cls(config, settings)


def experiment(kind: str, description: str):
    """
    実験クラスにメタデータを設定するデコレータ

    Args:
        kind: 実験の種類（設定ファイルの experiment.kind）
        description: 実験の説明
    """
    def decorator(cls):
        cls.kind = kind
        cls.description = description
        return cls
    return decorator
