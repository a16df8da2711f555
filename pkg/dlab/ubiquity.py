"""
dlab/ubiquity.py

ユビキティ実験
ブロックごとの計数統計 X_t(I)、格子統計 Z_t、局所ユビキティ密度比、
チェビシェフ集中実験、打ち切った limsup 集合の測度とモンテカルロ検証を提供
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import sqrt
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from dlab.arith import farey_count, shared_sieve
from dlab.blocks import BlockScheme
from dlab.errors import InputError
from dlab.intervals import (MODE_EXACT, UNIT_INTERVAL, BallUnion, MeasureBracket,
                            RationalInterval)
from dlab.model import CardinalityProfile, NumeratorChoice, SHUFFLE
from dlab.psi import PsiSpec, SparsePsi
from dlab.streams import DOMAIN_POINTS, DOMAIN_URN, stream, trial_seed

logger = logging.getLogger(__name__)

STATISTIC_X = "X_t"
STATISTIC_Z = "Z_t"

REGIME_REALIZED = "realized"
REGIME_URN = "urn"
REGIMES = (REGIME_REALIZED, REGIME_URN)

# σ²(X_t) ≤ C2·F_t の定数（D(n−D)/n² ≤ 1/4）
X_VARIANCE_CONSTANT = Fraction(1, 4)

TAG_EXPECTATION = "Lemma fareycoupons / eq (exp)"
TAG_VARIANCE = "Lemma fareycoupons / eq (var)"
TAG_EXPECTATION_LOWER = "Lemma fareycoupons / eq (expectation)"
TAG_VARIANCE_BOUND = "Lemma fareycoupons / eq (variance)"
TAG_CHEBYSHEV_X = "Prop fareycoupons / Chebyshev"
TAG_CHEBYSHEV_Z = "Prop expectedubiquitybddsubseq / Chebyshev"
TAG_LOCAL_UBIQUITY = "Prop randomlocalubiquity"
TAG_NEGATIVE_CORRELATION = "Prop expectedubiquitybddsubseq / negative correlation"
TAG_TRUNCATED = "Theorem 1 / W^P(Psi) truncated"
TAG_UNION_BOUND = "Theorem 1 / union bound"


def dyadic_suite(min_level: int = 1, max_level: int = 6) -> List[RationalInterval]:
    """長さ 2^-min_level 〜 2^-max_level の全位置の二進区間"""
    if not 0 <= min_level <= max_level:
        raise InputError(f"二進区間のレベルが不正です: {min_level}..{max_level}")
    return [
        RationalInterval(Fraction(j, 2**level), Fraction(j + 1, 2**level))
        for level in range(min_level, max_level + 1)
        for j in range(2**level)
    ]


def count_X_t(P: NumeratorChoice, I: RationalInterval, scheme: BlockScheme, t: int) -> int:
    """
    X_t(I) = Σ_{n∈block} #(P_n ∩ Q_n ∩ I)
    既約な a/n（gcd(a, n) = 1）で I に入るものだけを数える
    """
    lo, hi = scheme.block(t)
    total = 0
    for n, chosen in P.block(lo, hi):
        first, last = I.numerator_range(n)
        if first > last or len(chosen) == 0:
            continue
        window = chosen[(chosen >= first) & (chosen <= last)]
        total += int(np.count_nonzero(np.gcd(window, n) == 1))
    return total


@dataclass(frozen=True)
class GridCells:
    """I ⊇ I′ = ∪_{ℓ=ℓ1+1}^{ℓ2} [ℓ/N_t, (ℓ+1)/N_t) の格子"""
    l1: int
    l2: int
    N_t: int
    below_t0: bool

    @property
    def count(self) -> int:
        return max(0, self.l2 - self.l1)

    @property
    def measure(self) -> Fraction:
        return Fraction(self.count, self.N_t)


def grid_cells(I: RationalInterval, N_t: int) -> GridCells:
    """I に含まれる格子セルを求め、λ(I′) < λ(I)/2 なら t_0 未満と判定する"""
    first = -(-I.lo.numerator * N_t // I.lo.denominator)   # ⌈lo·N_t⌉
    end = I.hi.numerator * N_t // I.hi.denominator           # ⌊hi·N_t⌋
    l1, l2 = first - 1, end - 1
    cells = GridCells(l1, l2, N_t, False)
    below = cells.count <= 0 or cells.measure < I.length / 2
    return GridCells(l1, l2, N_t, below)


@dataclass
class ZCount:
    value: Optional[int]
    cells: GridCells

    @property
    def below_t0(self) -> bool:
        return self.cells.below_t0


def occupied_cells(P: NumeratorChoice, scheme: BlockScheme, t: int, cells: GridCells) -> np.ndarray:
    """選ばれた a/n（n∈block）を含む格子セル ℓ の一覧（昇順、重複なし）"""
    lo, hi = scheme.block(t)
    found = []
    for n, chosen in P.block(lo, hi):
        if len(chosen):
            ell = (chosen * cells.N_t) // n
            found.append(ell[(ell > cells.l1) & (ell <= cells.l2)])
    if not found:
        return np.zeros(0, dtype=np.int64)
    return np.unique(np.concatenate(found))


def count_Z_t(P: NumeratorChoice, I: RationalInterval, scheme: BlockScheme, t: int) -> ZCount:
    """
    Z_t = 選ばれた分数を含む格子セルの個数
    I が短すぎてセルを含まない場合は t_0 未満として value=None を返す
    """
    cells = grid_cells(I, scheme.N(t))
    if cells.below_t0:
        return ZCount(None, cells)
    return ZCount(int(len(occupied_cells(P, scheme, t, cells))), cells)


def z_expectation_bound(scheme: BlockScheme, t: int, cells: GridCells) -> Fraction:
    """𝔼(Z_t) ≥ (ℓ2 − ℓ1)(1 − (1 − 1/N_{t+1})^{F_t})"""
    miss = (1 - Fraction(1, scheme.N(t + 1))) ** scheme.F(t)
    return cells.count * (1 - miss)


def x_moments(profile: CardinalityProfile, I: RationalInterval, scheme: BlockScheme, t: int) -> Tuple[Fraction, Fraction]:
    """
    𝔼(X_t(I)) = Σ f(n)#(Q_n∩I)/n と分散の上界 Σ f(n)D(n−D)/n²（D = #(Q_n∩I)）
    """
    lo, hi = scheme.block(t)
    sieve = shared_sieve(hi)
    mean = Fraction(0)
    variance = Fraction(0)
    for n in range(lo + 1, hi + 1):
        m = profile.value(n)
        if m == 0:
            continue
        D = farey_count(n, I, sieve)
        mean += Fraction(m * D, n)
        variance += Fraction(m * D * (n - D), n * n)
    return mean, variance


@dataclass(frozen=True)
class XCouponBounds:
    """
    X_t(I) のモーメントとブロック和 F_t の比較
    𝔼(X_t(I)) ≥ C1·F_t·λ(I) の C1 を実測し、σ²(X_t(I)) ≤ F_t/4 を確認する
    """
    t: int
    interval: RationalInterval
    expectation: Fraction
    variance: Fraction
    F_t: int

    @property
    def c1(self) -> Fraction:
        return self.expectation / (self.F_t * self.interval.length)

    @property
    def variance_limit(self) -> Fraction:
        return X_VARIANCE_CONSTANT * self.F_t

    @property
    def variance_holds(self) -> bool:
        return self.variance <= self.variance_limit

    def expectation_holds(self, c1_floor: Fraction) -> bool:
        return self.c1 >= c1_floor


def x_coupon_bounds(profile: CardinalityProfile, I: RationalInterval, scheme: BlockScheme, t: int) -> XCouponBounds:
    """
    Raises:
        InputError: λ(I) = 0 またはブロック和が 0 の場合
    """
    if I.length == 0 or scheme.F(t) == 0:
        raise InputError(f"C1 を定義できません: I={I}, F_{t}={scheme.F(t)}")
    expectation, variance = x_moments(profile, I, scheme, t)
    return XCouponBounds(t, I, expectation, variance, scheme.F(t))


def block_ball_union(P: NumeratorChoice, scheme: BlockScheme, t: int,
                     radius: Optional[Fraction] = None) -> BallUnion:
    """∪_{n∈block} ∪_{a∈P_n} B(a/n, 1/F_t)"""
    lo, hi = scheme.block(t)
    r = scheme.rho(t) if radius is None else Fraction(radius)
    return BallUnion.from_layers((n, chosen, r) for n, chosen in P.block(lo, hi))


def local_ubiquity_ratio(P: NumeratorChoice, I: RationalInterval, scheme: BlockScheme, t: int,
                         mode: str = MODE_EXACT, radius: Optional[Fraction] = None,
                         union: Optional[BallUnion] = None) -> MeasureBracket:
    """
    λ(I ∩ ∪∪ B(a/n, ρ)) / λ(I) を返す（認証モードでは包含）

    Raises:
        InputError: λ(I) = 0 の場合
    """
    if I.length == 0:
        raise InputError(f"長さ0の区間では密度比を定義できません: {I}")
    union = union if union is not None else block_ball_union(P, scheme, t, radius)
    return union.measure(I, mode).scale(1 / I.length).clamp()


@dataclass
class UbiquityRecord:
    t: int
    interval: RationalInterval
    ratio: MeasureBracket
    passed: bool
    statistic: Optional[int] = None
    expectation_bound: Optional[Fraction] = None
    variance_bound: Optional[Fraction] = None
    tag: str = TAG_LOCAL_UBIQUITY


@dataclass
class UbiquityReport:
    """(I, t) ごとの密度比の軌跡と κ の推定値"""
    scheme: str
    kappa_floor: Fraction
    records: List[UbiquityRecord] = field(default_factory=list)

    @property
    def kappa_estimate(self) -> Optional[Fraction]:
        if not self.records:
            return None
        return min(r.ratio.lower for r in self.records)

    def per_t_minimum(self) -> Dict[int, Fraction]:
        result: Dict[int, Fraction] = {}
        for r in self.records:
            result[r.t] = min(result.get(r.t, r.ratio.lower), r.ratio.lower)
        return result

    def least_passing_t(self, interval: RationalInterval) -> Optional[int]:
        start = None
        for r in sorted((r for r in self.records if r.interval == interval), key=lambda r: -r.t):
            if not r.passed:
                break
            start = r.t
        return start

    @property
    def passed(self) -> bool:
        kappa = self.kappa_estimate
        return kappa is not None and kappa >= self.kappa_floor


def kappa_report(P: NumeratorChoice, scheme: BlockScheme, suite: Sequence[RationalInterval],
                 mode: str = MODE_EXACT, kappa_floor: Fraction = Fraction(1, 100),
                 ts: Optional[Iterable[int]] = None) -> UbiquityReport:
    """検査区間の族と全ブロックにわたる密度比を計算し κ を推定する"""
    report = UbiquityReport(scheme.describe(), Fraction(kappa_floor))
    for t in (ts if ts is not None else scheme.ts):
        union = block_ball_union(P, scheme, t)
        for I in suite:
            ratio = local_ubiquity_ratio(P, I, scheme, t, mode, union=union)
            report.records.append(UbiquityRecord(t, I, ratio, ratio.lower >= report.kappa_floor))
        logger.info(f"Local ubiquity t={t}: {len(union)} balls, min ratio "
                    f"{float(report.per_t_minimum()[t]):.6f}")
        # 大きなブロックの実現値を保持しない
        P.clear()
    return report


@dataclass
class ChebyshevResult:
    """チェビシェフ集中実験の結果"""
    statistic: str
    t: int
    interval: RationalInterval
    trials: int
    failures: int
    expectation: Fraction
    variance_bound: Fraction
    regime: str
    sample_mean: float
    sample_variance: float
    tag: str

    @property
    def chebyshev_bound(self) -> Fraction:
        if self.expectation <= 0:
            return Fraction(1)
        return min(Fraction(1), 4 * self.variance_bound / (self.expectation * self.expectation))

    @property
    def failure_rate(self) -> float:
        return self.failures / self.trials

    @property
    def passed(self) -> bool:
        bound = float(self.chebyshev_bound)
        return self.failure_rate <= bound + 3 * sqrt(bound * (1 - bound) / self.trials)

    def mean_within(self, expected: Fraction, sigmas: float = 3.0) -> bool:
        """標本平均が expected から 3σ 以内か（σ² は分散の上界/試行数）"""
        spread = sigmas * sqrt(float(self.variance_bound) / self.trials)
        return abs(self.sample_mean - float(expected)) <= spread + 1e-12

    def agrees_with(self, other: "ChebyshevResult", sigmas: float = 3.0) -> bool:
        """2つの実験の標本平均の差が 3σ 以内か"""
        spread = sigmas * sqrt(float(self.variance_bound) * (1 / self.trials + 1 / other.trials))
        return abs(self.sample_mean - other.sample_mean) <= spread + 1e-12


def _run_trials(trial: Callable[[int], int], trials: int, threads: int) -> List[int]:
    # 結果は試行番号の順に並ぶので並列数に依存しない
    if threads <= 1:
        return [trial(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(trial, range(trials)))


def _urn_X(profile: CardinalityProfile, I: RationalInterval, scheme: BlockScheme, t: int):
    lo, hi = scheme.block(t)
    sieve = shared_sieve(hi)
    n = np.arange(lo + 1, hi + 1, dtype=np.int64)
    m = profile.values(lo, hi)
    D = np.array([farey_count(int(k), I, sieve) for k in n], dtype=np.int64)

    def draw(seed: int) -> int:
        rng = stream(seed, DOMAIN_URN, t)
        return int(rng.hypergeometric(D, n - D, m).sum(dtype=np.int64))

    return draw


def chebyshev_experiment(statistic: str, profile: CardinalityProfile, scheme: BlockScheme, t: int,
                         I: RationalInterval = UNIT_INTERVAL, trials: int = 1000, seed: int = 0,
                         regime: str = REGIME_REALIZED, method: str = SHUFFLE,
                         threads: int = 1) -> ChebyshevResult:
    """
    統計量が期待値（の下界）の半分を下回る試行の割合を数え、
    チェビシェフの上界 4σ²/𝔼² と比較する

    Args:
        statistic: "X_t" または "Z_t"
        regime: "realized"（P_n を実現）または "urn"（Y_n を超幾何分布から直接抽出、X_t のみ）
    """
    if trials < 1:
        raise InputError(f"試行回数は1以上である必要があります: {trials}")
    if regime not in REGIMES:
        raise InputError(f"不明なサンプリング方式です: {regime}")

    if statistic == STATISTIC_X:
        expectation, variance = x_moments(profile, I, scheme, t)
        threshold = expectation / 2
        tag = TAG_CHEBYSHEV_X
        if regime == REGIME_URN:
            urn = _urn_X(profile, I, scheme, t)
            trial = lambda i: urn(trial_seed(seed, i))
        else:
            trial = lambda i: count_X_t(NumeratorChoice(profile, trial_seed(seed, i), method), I, scheme, t)
    elif statistic == STATISTIC_Z:
        if regime == REGIME_URN:
            raise InputError("Z_t は realized 方式でのみ計算できます")
        cells = grid_cells(I, scheme.N(t))
        if cells.below_t0:
            raise InputError(f"区間 {I} は t={t} で格子セルを十分に含みません（t_0 未満）")
        expectation = z_expectation_bound(scheme, t, cells)
        # σ²(Z_t) ≤ 𝔼(Z_t)
        variance = expectation
        threshold = expectation / 2
        tag = TAG_CHEBYSHEV_Z
        trial = lambda i: count_Z_t(NumeratorChoice(profile, trial_seed(seed, i), method), I, scheme, t).value
    else:
        raise InputError(f"不明な統計量です: {statistic}")

    values = np.array(_run_trials(trial, trials, threads), dtype=np.float64)
    failures = int(np.count_nonzero(values < float(threshold)))
    # 閾値付近は厳密に判定し直す
    for i in np.flatnonzero(np.abs(values - float(threshold)) < 1):
        failures += int(Fraction(int(values[i])) < threshold) - int(values[i] < float(threshold))
    result = ChebyshevResult(
        statistic=statistic, t=t, interval=I, trials=trials, failures=failures,
        expectation=expectation, variance_bound=variance, regime=regime,
        sample_mean=float(values.mean()), sample_variance=float(values.var()), tag=tag,
    )
    logger.info(f"Chebyshev {statistic} t={t}: {failures}/{trials} failures, "
                f"bound {float(result.chebyshev_bound):.3g}")
    return result


@dataclass
class PairCorrelation:
    k: int
    l: int
    covariance: float
    sigma: float
    p_k: float
    p_l: float

    @property
    def vacuous(self) -> bool:
        """どちらかのセルが常に被覆される（または常に空）なら共分散は恒等的に 0"""
        return self.p_k in (0.0, 1.0) or self.p_l in (0.0, 1.0)

    @property
    def passed(self) -> Optional[bool]:
        if self.vacuous:
            return None
        return self.covariance <= 3 * self.sigma + 1e-12


def negative_correlation_check(profile: CardinalityProfile, scheme: BlockScheme, t: int,
                               I: RationalInterval = UNIT_INTERVAL, trials: int = 10_000, seed: int = 0,
                               method: str = SHUFFLE, threads: int = 1) -> List[PairCorrelation]:
    """
    格子セルの被覆指示変数 (Y_k, Y_ℓ) の標本共分散が 0 + 3σ 以下であることを確認する
    対は隣接・両端・先頭と中央の3組
    """
    cells = grid_cells(I, scheme.N(t))
    if cells.below_t0 or cells.count < 3:
        raise InputError(f"区間 {I} は t={t} で格子セルを十分に含みません")
    first, last = cells.l1 + 1, cells.l2
    middle = (first + last) // 2
    pairs = [(first, first + 1), (first, last), (first, middle)]
    watched = sorted({c for pair in pairs for c in pair})

    def trial(i: int) -> Tuple[bool, ...]:
        occupied = occupied_cells(NumeratorChoice(profile, trial_seed(seed, i), method), scheme, t, cells)
        hits = np.isin(np.array(watched, dtype=np.int64), occupied)
        return tuple(bool(h) for h in hits)

    outcomes = np.array(_run_trials(trial, trials, threads), dtype=np.float64)
    column = {cell: j for j, cell in enumerate(watched)}
    results = []
    for k, l in pairs:
        yk, yl = outcomes[:, column[k]], outcomes[:, column[l]]
        pk, pl = yk.mean(), yl.mean()
        covariance = float((yk * yl).mean() - pk * pl)
        sigma = sqrt(pk * (1 - pk) * pl * (1 - pl) / trials)
        pair = PairCorrelation(k, l, covariance, sigma, float(pk), float(pl))
        if pair.vacuous:
            logger.warning(f"Cells {k}, {l} at t={t}: coverage p=({pair.p_k}, {pair.p_l}), check is vacuous")
        results.append(pair)
    return results


def _layers(P: NumeratorChoice, psi: PsiSpec, N0: int, N1: int):
    if isinstance(psi, SparsePsi):
        denominators = [k for k in psi.keys if N0 < k <= N1]
    else:
        denominators = range(max(N0 + 1, getattr(psi, "min_n", 1)), N1 + 1)
    for n in denominators:
        radius = psi.value(n)
        if radius > 0:
            yield n, P.subset(n), radius


def truncated_limsup_measure(P: NumeratorChoice, psi: PsiSpec, N0: int, N1: int,
                             mode: str = MODE_EXACT) -> MeasureBracket:
    """
    λ(∪_{N0<n≤N1} A_n^P(Ψ)) を返す

    Raises:
        InputError: N0 ≥ N1 の場合
        ResourceError: 厳密モードで球の個数が上限を超える場合
    """
    if not 0 <= N0 < N1:
        raise InputError(f"打ち切り範囲は 0 ≤ N0 < N1 である必要があります: N0={N0}, N1={N1}")
    union = BallUnion.from_layers(_layers(P, psi, N0, N1))
    result = union.measure(mode=mode)
    logger.debug(f"Truncated limsup measure ({N0}, {N1}]: {result}")
    return result


def union_bound(P: NumeratorChoice, psi: PsiSpec, N0: int, N1: int) -> Fraction:
    """Σ_{N0<n≤N1} 2·#P_n·Ψ(n)（打ち切った測度の上界）"""
    total = Fraction(0)
    for n, chosen, radius in _layers(P, psi, N0, N1):
        total += 2 * len(chosen) * radius
    return total


@dataclass
class MonteCarloEstimate:
    hits: int
    points: int

    @property
    def estimate(self) -> float:
        return self.hits / self.points

    def sigma(self, p: float) -> float:
        return sqrt(max(p * (1 - p), 0.0) / self.points)

    def agrees_with(self, value: Fraction, sigmas: float = 3.0) -> bool:
        p = float(value)
        return abs(self.estimate - p) <= sigmas * self.sigma(p) + 1.0 / self.points


def monte_carlo_membership(P: NumeratorChoice, psi: PsiSpec, N0: int, N1: int,
                           points: int = 100_000, seed: int = 0) -> MonteCarloEstimate:
    """
    一様な点が ∪ A_n^P(Ψ) に入る割合を数える独立な検証
    各 n について P_n の中で x·n に最も近い分子だけを調べる
    """
    xs = stream(seed, DOMAIN_POINTS, 0).random(points)
    covered = np.zeros(points, dtype=bool)
    for n, chosen, radius in _layers(P, psi, N0, N1):
        open_idx = np.flatnonzero(~covered)
        if len(open_idx) == 0:
            break
        x = xs[open_idx]
        pos = np.searchsorted(chosen, x * n)
        r = float(radius)
        hit = np.zeros(len(x), dtype=bool)
        for shift in (-1, 0):
            idx = np.clip(pos + shift, 0, len(chosen) - 1)
            hit |= np.abs(x - chosen[idx] / n) < r
        covered[open_idx[hit]] = True
    return MonteCarloEstimate(int(covered.sum()), points)
