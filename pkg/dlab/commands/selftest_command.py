"""
dlab/commands/selftest_command.py

組み込みの検証スイートの実行コマンドの実装
受け入れ条件の実験をメモリ上の設定として構築し、run と同じ経路で実行する
"""

import argparse
import logging
from fractions import Fraction
from typing import Any, Dict, List

from dlab.blocks import MODE_BOUNDED, suggest_base
from dlab.data import ExperimentConfig, config_from_mapping
from dlab.errors import EXIT_CHECK_FAILED, EXIT_OK, ConfigError
from dlab.framework.command_base import BaseCommand, CommandRegistry, command
from dlab.framework.experiment_base import ExperimentRegistry
from dlab.impl.artifact_store import ArtifactStore
from dlab.commands.run_command import execute_experiment
from dlab.ui import ICONS, render_table

logger = logging.getLogger(__name__)

SELFTEST_DIR = "selftest"

COUNTEREXAMPLE_SECTION = {"c": "geometric 1/2", "tau": "loglog_sqrt", "M": [0, 3, 5, 8]}

# f ≡ 1 は N/2 ≤ Σ_{n≤N} f(n) ≤ N を満たす
BOUNDED_BASE = suggest_base(Fraction(1, 2), Fraction(1), MODE_BOUNDED)

# 組み込みスイート（名前 → 設定）
SELFTEST_SUITE: List[Dict[str, Any]] = [
    {
        "experiment": {"kind": "sieve-checks", "name": "sieve-checks"},
        "checks": {"N": 10**6, "n_max": 10**4, "interval": "1/3,2/3", "identity_n_max": 10**4,
                   "witness_limit": 10**5, "elementary_n_max": 100, "residue_n_max": 500},
    },
    {
        "experiment": {"kind": "concentration", "name": "concentration-x"},
        "profile": {"spec": "phi", "sampler": "shuffle"},
        "scheme": {"k": 2},
        "seeds": {"trials": 1000},
        "checks": {"hypergeometric": [10, 5, 4], "frequency_trials": 10**5, "chi_square_trials": 20000,
                   "binomial_N": 1000, "binomial_trials": 10**4, "statistic": "X_t", "regime": "both",
                   "t": 8, "interval": "0,1"},
    },
    {
        "experiment": {"kind": "concentration", "name": "concentration-z"},
        "profile": {"spec": "constant 1", "sampler": "shuffle"},
        "scheme": {"k": BOUNDED_BASE},
        "seeds": {"trials": 1000},
        "checks": {"hypergeometric": [10, 5, 4], "frequency_trials": 10**4, "chi_square_trials": 5000,
                   "binomial_N": 100, "binomial_trials": 1000, "statistic": "Z_t", "t": 3,
                   "interval": "0,1", "correlation_trials": 5000},
    },
    {
        "experiment": {"kind": "ubiquity", "name": "ubiquity"},
        "profile": {"spec": "phi", "sampler": "shuffle"},
        "scheme": {"k": 2, "t_min": 5, "t_max": 12},
        "intervals": {"dyadic_min": 1, "dyadic_max": 4},
        "checks": {"kappa_floor": "1/100"},
    },
    {
        "experiment": {"kind": "truncated-measure", "name": "truncated-measure"},
        "profile": {"spec": "full"},
        "psi": {"spec": "closed_form c=1/2 alpha=2"},
        "checks": {"N0": 0, "N1": 1000, "points": 10**5},
    },
    {
        "experiment": {"kind": "counterexample", "name": "counterexample"},
        "counterexample": dict(COUNTEREXAMPLE_SECTION),
    },
    {
        "experiment": {"kind": "catlin", "name": "catlin"},
        "counterexample": dict(COUNTEREXAMPLE_SECTION),
        "checks": {"points": 1000, "point_denominator": 10**6},
    },
]


def selftest_configs(only: List[str] = None) -> List[ExperimentConfig]:
    """
    組み込みスイートの設定を構築する

    Args:
        only: 実行する名前または種類の一覧（省略時はすべて）

    Raises:
        ConfigError: only に未知の名前が含まれる場合
    """
    configs = [config_from_mapping(data, f"<selftest:{data['experiment']['name']}>") for data in SELFTEST_SUITE]
    if not only:
        return configs
    known = {c.name for c in configs} | {c.kind for c in configs}
    unknown = [name for name in only if name not in known]
    if unknown:
        raise ConfigError(f"未知のセルフテスト名です: {', '.join(unknown)}")
    return [c for c in configs if c.name in only or c.kind in only]


@command("selftest", "組み込みの検証スイートを実行する")
class SelftestCommand(BaseCommand):
    """
    すべての受け入れ実験を実行し、OUTPUT_DIR/selftest/ に成果物を書き出す
    1つでも不合格があれば 1 を返す
    """

    def __init__(self, store: ArtifactStore, experiments: ExperimentRegistry):
        super().__init__(store)
        self.experiments = experiments

    def setup_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--only", nargs="+", metavar="NAME",
                            help="実行する実験の名前または種類（省略時はすべて）")

    def execute_impl(self, args: argparse.Namespace) -> int:
        rows = []
        failed = 0
        for config in selftest_configs(getattr(args, "only", None)):
            result, directory = execute_experiment(config, self.experiments, self.store, self.settings,
                                                   run_name=f"{SELFTEST_DIR}/{config.name}")
            failed += not result.passed
            rows.append({
                "": ICONS["pass"] if result.passed else ICONS["fail"],
                "name": config.name,
                "kind": config.kind,
                "checks": str(len(result.checks)),
                "failures": str(len(result.failures)),
                "artifact": directory,
            })
        print(render_table(rows, ("", "name", "kind", "checks", "failures", "artifact")))
        if failed:
            logger.warning(f"Selftest: {failed} of {len(rows)} experiments failed")
            return EXIT_CHECK_FAILED
        logger.info(f"Selftest: all {len(rows)} experiments passed")
        return EXIT_OK


def setup_selftest_command(registry: CommandRegistry, store: ArtifactStore, experiments: ExperimentRegistry) -> None:
    registry.register(SelftestCommand(store, experiments))
