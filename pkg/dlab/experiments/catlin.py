"""
dlab/experiments/catlin.py

Catlin 変換 Ψ̄ の実験
Ψ̄ による近似の証人が Ψ の証人に持ち上がることを有理点で厳密に確認し、
Σ φ(n)Ψ(n) と Σ φ(n)Ψ̄(n) の部分和を比較する
"""

import logging
from fractions import Fraction

from dlab.experiments.common import counterexample_from_config
from dlab.framework.experiment_base import BaseExperiment, experiment
from dlab.model import PhiProfile
from dlab.psi import SparsePsi, catlin_series_partial, catlin_support, lift_witnesses, series_partial
from dlab.streams import DOMAIN_POINTS, stream

logger = logging.getLogger(__name__)

TAG_CATLIN = "Lemma overlinePsi"

DEFAULT_M = [0, 3, 5, 8]


@experiment("catlin", "Catlin 変換による証人の持ち上げ")
class CatlinExperiment(BaseExperiment):

    def _psi(self) -> SparsePsi:
        config = self.config
        psi = config.psi
        if psi is None:
            return counterexample_from_config(config, DEFAULT_M).psi
        if not isinstance(psi, SparsePsi):
            raise config.error("catlin 実験には疎写像の Ψ（sparse {...}）が必要です", "psi", "spec")
        return psi

    def execute_impl(self) -> None:
        config = self.config
        psi = self._psi()
        count = config.integer("checks", "points", 1000)
        denominator = config.integer("checks", "point_denominator", 10**6)
        if count < 1 or denominator < 1:
            raise config.error("points と point_denominator は1以上である必要があります", "checks")

        rng = stream(self.seed, DOMAIN_POINTS, 1)
        points = [Fraction(int(a), denominator) for a in rng.integers(0, denominator + 1, size=count)]
        report = lift_witnesses(psi, points)
        self.check("witness-lifting", TAG_CATLIN, report.passed,
                   points=report.points, witnesses=report.witnesses, lifted=report.lifted,
                   failures=len(report.failures))

        table = catlin_support(psi)
        dominated = all(table[k].value >= v for k, v in psi.items())
        self.check("catlin-dominates", TAG_CATLIN, dominated, support=len(psi.keys), catlin_support=len(table))

        profile = PhiProfile()
        keys = psi.keys
        series_N = config.integer("checks", "series_N")
        if series_N is not None:
            checkpoints = [series_N]
        else:
            checkpoints = sorted({keys[len(keys) // 4], keys[len(keys) // 2], keys[-1]}) if keys else []
        rows = []
        for N in checkpoints:
            plain = series_partial(profile, psi, N)
            lifted = catlin_series_partial(profile, psi, N)
            rows.append({"N": N, "phi_psi": plain, "phi_catlin": lifted})
        self.check("catlin-series-dominates", TAG_CATLIN,
                   all(row["phi_catlin"] >= row["phi_psi"] for row in rows), checkpoints=len(rows))
        self.table("series", rows)
        self.result.summary.update({"witnesses": report.witnesses, "psi_support": len(psi.keys)})
