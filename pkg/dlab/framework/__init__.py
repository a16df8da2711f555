"""
dlab/framework/__init__.py

コマンド・実験フレームワークのパッケージ初期化
"""

from .command_base import BaseCommand, CommandRegistry, RunSettings, command
from .experiment_base import BaseExperiment, CheckRow, ExperimentRegistry, ExperimentResult, experiment

__all__ = [
    'BaseCommand',
    'CommandRegistry',
    'RunSettings',
    'command',
    'BaseExperiment',
    'CheckRow',
    'ExperimentRegistry',
    'ExperimentResult',
    'experiment',
]
