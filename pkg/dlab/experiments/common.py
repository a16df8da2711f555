"""
dlab/experiments/common.py

実験間で共有する設定の解釈
"""

from typing import List, Optional, Tuple

from dlab.blocks import BlockScheme, build_scheme, from_cut_points
from dlab.counterexample import CoefficientSpec, CounterexampleSpec, TauSpec, build
from dlab.data import ExperimentConfig
from dlab.errors import InputError, ValidationError
from dlab.model import CardinalityProfile


def scheme_from_config(config: ExperimentConfig, profile: CardinalityProfile,
                       default_range: Tuple[int, int]) -> BlockScheme:
    """scheme セクションから幾何的または利用者指定のブロックスキームを構築する"""
    cut_points = config.integer_list("scheme", "cut_points")
    try:
        if cut_points is not None:
            return from_cut_points(profile, cut_points, config.integer("scheme", "t_min", 0))
        k = config.integer("scheme", "k", 2)
        t_min = config.integer("scheme", "t_min", default_range[0])
        t_max = config.integer("scheme", "t_max", default_range[1])
        return build_scheme(profile, k, (t_min, t_max))
    except (InputError, ValidationError) as e:
        raise config.error(f"scheme: {e}", "scheme")


def counterexample_from_config(config: ExperimentConfig,
                               default_M: Optional[List[int]] = None) -> Optional[CounterexampleSpec]:
    """counterexample セクションから反例を構成する（セクションも既定の M もなければ None）"""
    if "counterexample" not in config.sections and default_M is None:
        return None
    c = config.interpret("counterexample", "c", CoefficientSpec.parse, "geometric 1/2")
    tau = config.interpret("counterexample", "tau", lambda text: TauSpec(str(text)), "loglog_sqrt")
    M = config.integer_list("counterexample", "M", default_M)
    if M is None:
        raise config.error("counterexample.M が指定されていません", "counterexample")
    try:
        return build(c, tau, M)
    except (InputError, ValidationError) as e:
        raise config.error(f"counterexample: {e}", "counterexample", "M")
