"""
dlab/experiments/truncated_measure.py

打ち切った limsup 集合 ∪_{N0<n≤N1} A_n^P(Ψ) の測度の実験
厳密エンジンの値を和の上界とモンテカルロの所属判定で照合する
"""

import logging

from dlab.framework.experiment_base import BaseExperiment, experiment
from dlab.model import FullProfile, NumeratorChoice
from dlab.psi import parse_psi, series_partial
from dlab.ubiquity import (TAG_TRUNCATED, TAG_UNION_BOUND, monte_carlo_membership, truncated_limsup_measure,
                           union_bound)

logger = logging.getLogger(__name__)

DEFAULT_PSI = "closed_form c=1/2 alpha=2"


@experiment("truncated-measure", "打ち切った limsup 集合の厳密測度とモンテカルロ検証")
class TruncatedMeasureExperiment(BaseExperiment):

    def execute_impl(self) -> None:
        config = self.config
        profile = config.profile if config.has("profile", "spec") else FullProfile()
        psi = config.psi or parse_psi(DEFAULT_PSI)
        N0 = config.integer("checks", "N0", 0)
        N1 = config.integer("checks", "N1", 1000)
        points = config.integer("checks", "points", 100_000)
        if not 0 <= N0 < N1:
            raise config.error(f"打ち切り範囲は 0 ≤ N0 < N1 である必要があります: N0={N0}, N1={N1}", "checks", "N1")

        P = NumeratorChoice(profile, self.seed, config.sampler)
        checkpoints = sorted({N0 + (N1 - N0) // 10, N0 + (N1 - N0) // 2, N1} - {N0})
        rows = []
        for end in checkpoints:
            measure = truncated_limsup_measure(P, psi, N0, end, self.mode)
            bound = union_bound(P, psi, N0, end)
            estimate = monte_carlo_membership(P, psi, N0, end, points, self.seed)
            centre = (measure.lower + measure.upper) / 2
            agrees = estimate.agrees_with(centre)
            rows.append({"N0": N0, "N1": end, "measure": measure, "union_bound": bound,
                         "monte_carlo": estimate.estimate, "sigma": estimate.sigma(float(centre)),
                         "agrees": agrees})
            if end == N1:
                self.check("monte-carlo-oracle", TAG_TRUNCATED, agrees,
                           N0=N0, N1=end, measure=measure, monte_carlo=estimate.estimate,
                           sigma=estimate.sigma(float(centre)), points=points)
                self.check("union-bound", TAG_UNION_BOUND, measure.lower <= bound,
                           N0=N0, N1=end, measure=measure, bound=bound)
        # 測度は N1 について単調
        lowers = [row["measure"].lower for row in rows]
        uppers = [row["measure"].upper for row in rows]
        self.check("monotone-in-N1", TAG_TRUNCATED,
                   all(lo <= hi for lo, hi in zip(lowers, uppers[1:])), checkpoints=checkpoints)
        self.table("measure", rows)

        if not profile.random_cardinality:
            partial = series_partial(profile, psi, N1)
            self.check("series-partial", "sum f(n) Psi(n)", None, N=N1, value=partial)
        self.result.summary.update({"psi": psi.to_text(), "profile": profile.to_text(),
                                    "measure": rows[-1]["measure"]})
