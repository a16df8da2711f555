"""
dlab/experiments/concentration.py

集中不等式の実験
超幾何モーメントの全列挙、サンプラーの一様性、二項モデルの集中、
ブロック統計 X_t(I)・Z_t のチェビシェフ上界と負の相関を確認する
"""

import logging
from fractions import Fraction
from math import sqrt

import numpy as np
from scipy import stats

from dlab.experiments.common import scheme_from_config
from dlab.framework.experiment_base import BaseExperiment, experiment
from dlab.model import (binomial_concentration_experiment, cardinality_histogram_check, chi_square_uniformity,
                        hypergeometric_bruteforce, hypergeometric_moments, inclusion_frequencies)
from dlab.ubiquity import (REGIME_REALIZED, REGIME_URN, REGIMES, STATISTIC_X, STATISTIC_Z, TAG_CHEBYSHEV_X,
                           TAG_EXPECTATION, TAG_EXPECTATION_LOWER, TAG_NEGATIVE_CORRELATION, TAG_VARIANCE,
                           TAG_VARIANCE_BOUND, X_VARIANCE_CONSTANT, chebyshev_experiment,
                           negative_correlation_check, x_coupon_bounds)

logger = logging.getLogger(__name__)

# 要素ごとの包含頻度を 3σ 相当の族全体の有意水準で判定する
FAMILY_ALPHA = 0.0027

# realized を主とし、urn の標本平均と突き合わせる
REGIME_BOTH = "both"

DEFAULT_C1_FLOOR = Fraction(1, 10)


@experiment("concentration", "超幾何・二項モデルとブロック統計の集中")
class ConcentrationExperiment(BaseExperiment):

    def execute_impl(self) -> None:
        self._hypergeometric()
        self._sampler_uniformity()
        self._binomial()
        self._block_statistics()

    def _hypergeometric(self) -> None:
        config = self.config
        n, m, D = config.integer_list("checks", "hypergeometric", [10, 5, 4])
        mean, bound = hypergeometric_moments(n, m, D)
        brute_mean, brute_variance = hypergeometric_bruteforce(n, m, D)
        self.check("hypergeometric-mean", TAG_EXPECTATION, brute_mean == mean,
                   n=n, m=m, D=D, enumerated=brute_mean, formula=mean)
        self.check("hypergeometric-variance-bound", TAG_VARIANCE, brute_variance <= bound,
                   n=n, m=m, D=D, enumerated=brute_variance, bound=bound)

    def _sampler_uniformity(self) -> None:
        config = self.config
        method = config.sampler
        n, m, _ = config.integer_list("checks", "hypergeometric", [10, 5, 4])
        trials = config.integer("checks", "frequency_trials", 100_000)
        counts = inclusion_frequencies(n, m, trials, self.seed, method)
        p = m / n
        sigma = sqrt(p * (1 - p) / trials)
        z = float(stats.norm.isf((1 - (1 - FAMILY_ALPHA) ** (1 / n)) / 2))
        deviations = np.abs(counts / trials - p)
        self.check("inclusion-frequencies", "uniform m-subset: P(a in P_n) = m/n",
                   bool(np.all(deviations <= z * sigma)),
                   n=n, m=m, trials=trials, sampler=method,
                   max_deviation=float(deviations.max()), sigma=sigma, z=z)

        chi_trials = config.integer("checks", "chi_square_trials", 20_000)
        chi = chi_square_uniformity(6, 3, chi_trials, self.seed, method)
        self.check("subset-chi-square", "uniform m-subset over all C(n, m) subsets",
                   chi.passed, n=6, m=3, trials=chi_trials, statistic=chi.statistic,
                   dof=chi.dof, p_value=chi.p_value)

        histogram = cardinality_histogram_check(40, chi_trials, self.seed)
        self.check("uniform-subset-cardinality", "Theorem 1 model: #P_n ~ Binomial(n, 1/2)",
                   histogram.passed, n=40, trials=chi_trials, statistic=histogram.statistic,
                   dof=histogram.dof, p_value=histogram.p_value)

    def _binomial(self) -> None:
        config = self.config
        N = config.integer("checks", "binomial_N", 1000)
        trials = config.integer("checks", "binomial_trials", 10_000)
        summary = binomial_concentration_experiment(N, trials, self.seed)
        self.check("binomial-concentration", "Lemma P(L)=1 / Chebyshev",
                   summary.passed, N=N, trials=trials, failures=summary.failures,
                   rate=summary.failure_rate, bound=summary.bound)

    def _block_statistics(self) -> None:
        config = self.config
        profile = config.profile
        t = config.integer("checks", "t", 10)
        scheme = scheme_from_config(config, profile, (t, t))
        interval = config.interval()
        trials = config.trials(self.settings.default_trials)
        regime = config.get("checks", "regime", REGIME_REALIZED)
        if regime not in REGIMES + (REGIME_BOTH,):
            raise config.error(f"不明なサンプリング方式です: {regime}", "checks", "regime")
        statistic = config.get("checks", "statistic", STATISTIC_X)
        if statistic not in (STATISTIC_X, STATISTIC_Z, "both"):
            raise config.error(f"不明な統計量です: {statistic}", "checks", "statistic")

        rows = []
        statistics = (STATISTIC_X, STATISTIC_Z) if statistic == "both" else (statistic,)
        for name in statistics:
            result = chebyshev_experiment(
                name, profile, scheme, t, interval, trials, self.seed,
                regime=REGIME_URN if name == STATISTIC_X and regime == REGIME_URN else REGIME_REALIZED,
                method=config.sampler, threads=self.threads,
            )
            self.check(f"chebyshev-{name}", result.tag, result.passed,
                       t=t, interval=interval, trials=trials, failures=result.failures,
                       bound=result.chebyshev_bound)
            if name == STATISTIC_X:
                # 𝔼(X_t) は厳密値なので標本平均と比較できる
                self.check("x-mean", TAG_EXPECTATION, result.mean_within(result.expectation),
                           t=t, sample_mean=result.sample_mean, expectation=result.expectation)
                self._x_bounds(profile, scheme, t, interval)
                if regime == REGIME_BOTH:
                    urn = chebyshev_experiment(name, profile, scheme, t, interval, trials, self.seed,
                                               regime=REGIME_URN, method=config.sampler, threads=self.threads)
                    self.check("x-regime-agreement", TAG_EXPECTATION, result.agrees_with(urn),
                               t=t, realized_mean=result.sample_mean, urn_mean=urn.sample_mean,
                               variance_bound=result.variance_bound)
            else:
                self.check("z-mean", result.tag,
                           result.sample_mean >= float(result.expectation) - 3 * sqrt(result.sample_variance / trials),
                           t=t, sample_mean=result.sample_mean, expectation_bound=result.expectation)
            rows.append({
                "statistic": name, "t": t, "interval": interval, "regime": result.regime,
                "trials": trials, "expectation": result.expectation, "variance_bound": result.variance_bound,
                "failures": result.failures, "chebyshev_bound": result.chebyshev_bound,
                "rate": result.failure_rate, "sample_mean": result.sample_mean, "passed": result.passed,
            })
        self.table("chebyshev", rows)

        correlation_trials = config.integer("checks", "correlation_trials", 0)
        if correlation_trials:
            pairs = negative_correlation_check(profile, scheme, t, interval, correlation_trials,
                                               self.seed, config.sampler, self.threads)
            for pair in pairs:
                self.check(f"negative-correlation-{pair.k}-{pair.l}", TAG_NEGATIVE_CORRELATION, pair.passed,
                           t=t, covariance=pair.covariance, sigma=pair.sigma, p_k=pair.p_k, p_l=pair.p_l)
        logger.debug(f"Block statistics at t={t} done ({TAG_CHEBYSHEV_X})")

    def _x_bounds(self, profile, scheme, t, interval) -> None:
        floor = self.config.fraction("checks", "x_c1_floor", DEFAULT_C1_FLOOR)
        bounds = x_coupon_bounds(profile, interval, scheme, t)
        self.check("x-expectation-lower", TAG_EXPECTATION_LOWER, bounds.expectation_holds(floor),
                   t=t, interval=interval, F_t=bounds.F_t, expectation=bounds.expectation,
                   C1=bounds.c1, floor=floor)
        self.check("x-variance-bound", TAG_VARIANCE_BOUND, bounds.variance_holds,
                   t=t, F_t=bounds.F_t, variance=bounds.variance, limit=bounds.variance_limit,
                   C2=X_VARIANCE_CONSTANT)
