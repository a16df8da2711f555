"""
dlab/experiments/sieve_checks.py

数論的な基礎事実の検証実験
φ の平均値、Σ n/φ(n) の定数、ファレイ数の下界、約数和の恒等式、
φ の極小値の証人、初等的な不等式、完全剰余系の測度の閉形式を確認する
"""

import logging
from fractions import Fraction

import mpmath

from dlab.arith import (divisor_sum_identity_holds, farey_min_gap, niederreiter_threshold, phi_extremal_witness,
                        shared_sieve, totient_mean_ratio, totient_ratio_sum)
from dlab.framework.experiment_base import BaseExperiment, experiment
from dlab.intervals import full_residue_measure, layer_measure, residue_sweep_measures
from dlab.model import lemma_elementary_check

logger = logging.getLogger(__name__)

TOLERANCE = Fraction(1, 1000)

# 篩で検証する既定の上限
DEFAULT_N = 10**6
NIEDERREITER_N0_MAX = 100
FAREY_SPACING_Q = 100


@experiment("sieve-checks", "篩に基づく数論的な事実の厳密検証")
class SieveChecksExperiment(BaseExperiment):

    def execute_impl(self) -> None:
        config = self.config
        N = config.integer("checks", "N", DEFAULT_N)
        sieve = shared_sieve(N)

        with mpmath.workdps(30):
            mean_target = Fraction(mpmath.nstr(3 / mpmath.pi ** 2, 25))
            ratio_target = Fraction(mpmath.nstr(315 * mpmath.zeta(3) / (2 * mpmath.pi ** 4), 25))

        mean = totient_mean_ratio(N, sieve)
        self.check("totient-mean", "Remark average order of phi (6n/pi^2)",
                   abs(mean - mean_target) <= TOLERANCE,
                   N=N, value=float(mean), target=float(mean_target))

        ratio = totient_ratio_sum(N, sieve) / N
        self.check("n-over-phi-mean", "eq (n/phi) 315 zeta(3)/(2 pi^4)",
                   abs(ratio - ratio_target) <= TOLERANCE,
                   N=N, value=float(ratio), target=float(ratio_target))

        interval = config.interval(default="1/3,2/3")
        n_max = config.integer("checks", "n_max", 10**4)
        report = niederreiter_threshold(interval, n_max, sieve=shared_sieve(n_max))
        self.check("niederreiter-threshold", "Lemma niederreiter",
                   report.n0 <= NIEDERREITER_N0_MAX,
                   interval=interval, n_max=n_max, n0=report.n0, failures=len(report.failures))

        identity_n_max = config.integer("checks", "identity_n_max", 10**4)
        self.check("divisor-sum-identity", "sum_{d|n} phi(d) = n",
                   divisor_sum_identity_holds(identity_n_max, shared_sieve(identity_n_max)),
                   n_max=identity_n_max)

        witness_limit = config.integer("checks", "witness_limit", 10**5)
        witnesses = phi_extremal_witness(witness_limit, shared_sieve(witness_limit))
        self.check("phi-extremal-witness", "phi(n) < n/(e^gamma loglog n) infinitely often",
                   bool(witnesses),
                   search_limit=witness_limit, count=len(witnesses),
                   first=witnesses[0].n if witnesses else None,
                   primorial=witnesses[0].is_primorial if witnesses else None)

        gap = farey_min_gap(FAREY_SPACING_Q)
        self.check("farey-spacing", "Prop randomlocalubiquity (distance between Farey points)",
                   gap >= Fraction(1, FAREY_SPACING_Q ** 2), Q=FAREY_SPACING_Q, min_gap=gap)

        elementary_n_max = config.integer("checks", "elementary_n_max", 100)
        violations = lemma_elementary_check(elementary_n_max)
        self.check("lemma-elementary", "Lemma elementary (1 - m/n <= (1 - 1/n)^m)",
                   not violations, n_max=elementary_n_max, violations=len(violations))

        self._residue_grid(config.integer("checks", "residue_n_max", 500))

    def _residue_grid(self, n_max: int) -> None:
        """半径 j/(4n²)（j = 0..8n）の格子で閉形式と列挙を比較する"""
        mismatches = []
        compared = 0
        for n in range(1, n_max + 1):
            den = 4 * n * n
            numerators = list(range(8 * n + 1))
            swept = residue_sweep_measures(n, numerators, den)
            for j, value in zip(numerators, swept):
                compared += 1
                if value != full_residue_measure(n, Fraction(j, den)):
                    mismatches.append((n, j))
        # 汎用の球の和集合エンジンでも一部を照合する
        for n in (1, 2, 7, min(n_max, 60)):
            den = 4 * n * n
            for j in (1, 2 * n - 1, 2 * n, 2 * n + 1, 8 * n):
                compared += 1
                r = Fraction(j, den)
                if layer_measure(n, range(1, n + 1), r).value != full_residue_measure(n, r):
                    mismatches.append((n, j))
        if mismatches:
            logger.warning(f"Closed form mismatches: {mismatches[:10]}")
        self.check("full-residue-closed-form", "closed form vs enumeration of A_n(Psi)",
                   not mismatches, n_max=n_max, compared=compared, mismatches=len(mismatches))
