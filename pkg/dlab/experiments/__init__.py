"""
dlab/experiments/__init__.py

実験の種類ごとの実装と登録
"""

from dlab.framework.experiment_base import ExperimentRegistry

from .catlin import CatlinExperiment
from .concentration import ConcentrationExperiment
from .counterexample import CounterexampleExperiment
from .sieve_checks import SieveChecksExperiment
from .truncated_measure import TruncatedMeasureExperiment
from .ubiquity import UbiquityExperiment


def setup_experiments(registry: ExperimentRegistry) -> ExperimentRegistry:
    """すべての実験クラスをレジストリに登録する"""
    for experiment_cls in (SieveChecksExperiment, ConcentrationExperiment, UbiquityExperiment,
                           TruncatedMeasureExperiment, CounterexampleExperiment, CatlinExperiment):
        registry.register(experiment_cls)
    return registry
