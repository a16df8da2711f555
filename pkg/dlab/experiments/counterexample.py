"""
dlab/experiments/counterexample.py

階乗による反例の実験
構成した Ψ について、キーの順序・包含・層の測度・発散の連鎖・
φ 級数・limsup の縮約をブロックごとに厳密に検証し台帳を出力する
"""

import logging
from fractions import Fraction

from dlab.counterexample import (TAG_COLLAPSE, TAG_CONTAINMENT, TAG_DEFPSI, TAG_KEYS, TAG_MEASURE, TAG_MJ,
                                 TAG_MUSTDIV, TAG_PHI_SERIES, collapse_check, divergence_ledger, growth_profile,
                                 phi_series_check, sweet_spot_profile, verify_containment, verify_measure_vanishing)
from dlab.experiments.common import counterexample_from_config
from dlab.framework.experiment_base import BaseExperiment, experiment

logger = logging.getLogger(__name__)

DEFAULT_M = [0, 3, 5, 8]


@experiment("counterexample", "階乗キーによる反例の台帳")
class CounterexampleExperiment(BaseExperiment):

    def execute_impl(self) -> None:
        config = self.config
        spec = counterexample_from_config(config, DEFAULT_M)
        J = config.integer("checks", "J", spec.J)
        if not 1 <= J <= spec.J:
            raise config.error(f"J は 1〜{spec.J} の範囲である必要があります: J={J}", "checks", "J")

        keys = spec.all_keys()
        self.check("key-distinctness", TAG_DEFPSI, len(set(keys)) == len(keys), keys=len(keys))
        self.check("key-ordering", TAG_KEYS,
                   all(a > b for j in range(1, J + 1) for a, b in zip(spec.keys(j), spec.keys(j)[1:])),
                   blocks=J)

        ledger = verify_measure_vanishing(spec, J)
        chain = divergence_ledger(spec, growth_profile(spec), J)
        phi_rows = phi_series_check(spec, J)
        rows = []
        for measure_row, chain_row, phi_row in zip(ledger.rows, chain, phi_rows):
            j = measure_row.j
            containment = verify_containment(spec, j)
            self.check(f"layer-measure-{j}", TAG_MEASURE, measure_row.holds,
                       K=measure_row.K, measure=measure_row.measure, bound=measure_row.bound,
                       capped=measure_row.capped)
            self.check(f"containment-{j}", TAG_CONTAINMENT, containment.holds,
                       method=containment.method, witness=containment.witness)
            steps = chain_row.steps
            self.check(f"divergence-chain-{j}", TAG_MUSTDIV, chain_row.holds,
                       S=chain_row.S, T1=chain_row.T1, T2=chain_row.T2, T3=chain_row.T3,
                       certified=" ".join(f"{name}={'yes' if certified else 'equal' if witnessed else 'no'}"
                                          for name, _, certified, witnessed in steps),
                       not_refuted=chain_row.not_refuted)
            self.check(f"phi-series-{j}", TAG_PHI_SERIES, phi_row.holds,
                       value=phi_row.value, c=phi_row.c, complete=phi_row.complete)
            # (Mj) は漸近的な条件なので参考値として記録する
            self.check(f"Mj-advisory-{j}", TAG_MJ, None,
                       value=chain_row.advisory, satisfied=chain_row.mj_satisfied)
            rows.append({
                "j": j, "M_j": spec.M[j], "K_j": measure_row.K, "c_j": measure_row.c,
                "measure": measure_row.measure, "bound_2c": measure_row.bound,
                "containment": containment.holds, "chain": chain_row.holds,
                "chain_S": chain_row.S, "chain_T3": chain_row.T3,
                "phi_series": phi_row.value, "Mj_advisory": float(chain_row.advisory.mid),
            })
        self.check("measure-series", TAG_MEASURE, ledger.holds,
                   total=ledger.total, bound=ledger.bound, convergence=spec.c.convergence)

        collapse = collapse_check(spec, J)
        if collapse.checked:
            self.check("limsup-collapse", TAG_COLLAPSE, collapse.holds,
                       all_layers=collapse.all_layers, top_layers=collapse.top_layers)
        else:
            self.check("limsup-collapse", TAG_COLLAPSE, None, skipped="too many balls to enumerate")

        C = config.fraction("counterexample", "C")
        if C is not None:
            profile = sweet_spot_profile(spec, C)
            sweet = divergence_ledger(spec, profile, J)
            self.check("sweet-spot-series", TAG_MUSTDIV, all(row.holds for row in sweet),
                       C=C, partial_sum=sum((row.S for row in sweet), Fraction(0)))

        self.table("ledger", rows)
        self.result.summary.update({
            "spec": spec.describe(),
            "total_measure": ledger.total,
            "bound_sum": ledger.bound,
            "bound_status": "holds" if ledger.holds else "fails",
        })
