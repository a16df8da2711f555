"""
dlab/experiments/ubiquity.py

局所ユビキティの実験
ブロックスキームの平均オーダーの分類と正則性を確認し、
検査区間の族に対する密度比の軌跡から κ を推定する
"""

import logging
from fractions import Fraction

from dlab import intervals
from dlab.blocks import check_regularity, classify_bounded, classify_linear, suggest_base, sumfphi_ratios
from dlab.experiments.common import scheme_from_config
from dlab.framework.experiment_base import BaseExperiment, experiment
from dlab.intervals import MODE_CERTIFIED, MODE_EXACT
from dlab.model import NumeratorChoice
from dlab.ubiquity import TAG_LOCAL_UBIQUITY, UbiquityReport, kappa_report

logger = logging.getLogger(__name__)


@experiment("ubiquity", "ブロックごとの局所ユビキティ密度比と κ の推定")
class UbiquityExperiment(BaseExperiment):

    def execute_impl(self) -> None:
        config = self.config
        profile = config.profile
        scheme = scheme_from_config(config, profile, (5, 12))
        kappa_floor = config.fraction("checks", "kappa_floor", Fraction(1, 100))
        suite = config.interval_suite()

        linear_a = config.fraction("checks", "linear_a", Fraction(1, 8))
        linear = classify_linear(scheme, linear_a)
        self.check("linear-on-average", linear.tag, None,
                   a=linear_a, holds_from=linear.holds_from,
                   suggested_k=suggest_base(linear_a))
        if config.has("checks", "bounded_c1"):
            bounded = classify_bounded(scheme, config.fraction("checks", "bounded_c1"),
                                       config.fraction("checks", "bounded_c2"))
            self.check("bounded-on-average", bounded.tag, None, holds_from=bounded.holds_from)

        if len(scheme.ts) > 1:
            lam = config.fraction("checks", "regularity_lambda", Fraction(1, 2))
            regularity = check_regularity(scheme, lam)
            self.check("regularity", regularity.tag, regularity.holds_everywhere,
                       **{"lambda": lam, "holds_from": regularity.holds_from})

        if not profile.random_cardinality and scheme.N(scheme.t_max + 1) <= 1 << 24:
            ratios = sumfphi_ratios(scheme)
            self.check("sum-f-phi", ratios.tag, None, c=ratios.constants.get("c"))

        report = UbiquityReport(scheme.describe(), kappa_floor)
        rows = []
        for t in scheme.ts:
            # 厳密エンジンの上限を超えるブロックは認証付きの下界で評価する
            mode = self.mode
            if mode == MODE_EXACT and scheme.F(t) > intervals.EXACT_COMPONENT_LIMIT:
                mode = MODE_CERTIFIED
                logger.info(f"Block t={t} has {scheme.F(t)} balls, using certified bounds")
            P = NumeratorChoice(profile, self.seed, config.sampler)
            part = kappa_report(P, scheme, suite, mode, kappa_floor, ts=[t])
            report.records.extend(part.records)
            minimum = part.per_t_minimum()[t]
            rows.append({"t": t, "N_t": scheme.N(t), "F_t": scheme.F(t), "mode": mode,
                         "min_ratio": minimum, "min_ratio_float": float(minimum),
                         "passed": minimum >= kappa_floor})

        kappa = report.kappa_estimate
        self.check("local-ubiquity-floor", TAG_LOCAL_UBIQUITY, report.passed,
                   kappa=kappa, floor=kappa_floor, intervals=len(suite), blocks=len(scheme.ts))
        for I in suite:
            start = report.least_passing_t(I)
            if start is None or start > scheme.t_min:
                logger.info(f"Interval {I}: floor first holds from t={start}")
        self.table("kappa_trajectory", rows)
        self.result.summary.update({"kappa_estimate": kappa, "kappa_floor": kappa_floor,
                                    "scheme": scheme.describe()})
