"""
dlab/model.py

ランダム分子モデル
濃度プロファイル f、一様な f(n) 元部分集合のサンプラー、
一様部分集合モデルと二項周辺分布、壺モデルの超幾何モーメントを提供
"""

import csv
import logging
import os
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import ceil, comb
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy import stats

from dlab.arith import SieveTable, shared_sieve
from dlab.errors import InputError
from dlab.streams import DOMAIN_BINOMIAL, DOMAIN_SUBSET, DOMAIN_UNIFORM_SUBSET, stream, trial_seed

logger = logging.getLogger(__name__)

# サンプリング方式
SELECTION = "selection"   # 逐次選択（厳密な有理閾値）
SHUFFLE = "shuffle"       # 非復元抽出（Generator.choice）
SAMPLING_METHODS = (SELECTION, SHUFFLE)

# カイ二乗検定の有意水準
CHI_SQUARE_ALPHA = 1e-3


class CardinalityProfile(ABC):
    """
    濃度プロファイル f: ℕ → ℤ（0 ≤ f(n) ≤ n）の基底クラス
    任意精度の n を受け付ける
    """

    name = "profile"

    @abstractmethod
    def value(self, n: int) -> int:
        """f(n) を返す"""

    def values(self, lo: int, hi: int) -> np.ndarray:
        """n ∈ (lo, hi] に対する f(n) の配列（int64）"""
        return np.array([self.value(n) for n in range(lo + 1, hi + 1)], dtype=np.int64)

    def block_sum(self, lo: int, hi: int) -> int:
        """Σ_{n∈(lo,hi]} f(n) を厳密整数で返す"""
        return int(self.values(lo, hi).sum(dtype=np.int64))

    @property
    def random_cardinality(self) -> bool:
        """#P_n 自体がランダムなモデルか（一様部分集合モデル）"""
        return False

    @abstractmethod
    def to_text(self) -> str:
        """設定ファイル用のテキスト表現"""

    def __str__(self) -> str:
        return self.to_text()


class FullProfile(CardinalityProfile):
    name = "full"

    def value(self, n: int) -> int:
        return n

    def values(self, lo: int, hi: int) -> np.ndarray:
        return np.arange(lo + 1, hi + 1, dtype=np.int64)

    def to_text(self) -> str:
        return "full"


class ConstantProfile(CardinalityProfile):
    """f(n) = min(c, n)"""
    name = "constant"

    def __init__(self, c: int):
        if c < 0:
            raise InputError(f"定数プロファイルの値は非負である必要があります: {c}")
        self.c = int(c)

    def value(self, n: int) -> int:
        return min(self.c, n)

    def values(self, lo: int, hi: int) -> np.ndarray:
        return np.minimum(self.c, np.arange(lo + 1, hi + 1, dtype=np.int64))

    def to_text(self) -> str:
        return f"constant {self.c}"


class LinearProfile(CardinalityProfile):
    """f(n) = ⌈pn/q⌉（0 < p/q ≤ 1）"""
    name = "linear"

    def __init__(self, ratio: Fraction):
        ratio = Fraction(ratio)
        if not 0 < ratio <= 1:
            raise InputError(f"線形プロファイルの比は (0, 1] である必要があります: {ratio}")
        self.ratio = ratio

    def value(self, n: int) -> int:
        return ceil(self.ratio * n)

    def values(self, lo: int, hi: int) -> np.ndarray:
        p, q = self.ratio.numerator, self.ratio.denominator
        n = np.arange(lo + 1, hi + 1, dtype=np.int64)
        return (p * n + q - 1) // q

    def to_text(self) -> str:
        return f"linear {self.ratio}"


class PhiProfile(CardinalityProfile):
    """f(n) = φ(n)"""
    name = "phi"

    def __init__(self, sieve: Optional[SieveTable] = None):
        self._sieve = sieve

    def _table(self, limit: int) -> SieveTable:
        if self._sieve is not None and self._sieve.limit >= limit:
            return self._sieve
        return shared_sieve(limit)

    def value(self, n: int) -> int:
        return self._table(min(max(n, 2), 1 << 20)).totient(n)

    def values(self, lo: int, hi: int) -> np.ndarray:
        table = self._table(hi)
        return np.array(table.phi[lo + 1:hi + 1], dtype=np.int64)

    def to_text(self) -> str:
        return "phi"


class ExplicitProfile(CardinalityProfile):
    """明示的な対応表 n → f(n)（表にない n では 0）"""
    name = "explicit"

    def __init__(self, mapping: Mapping[int, int], source: str = ""):
        self.mapping: Dict[int, int] = {}
        for n, f in mapping.items():
            n, f = int(n), int(f)
            if n < 1 or not 0 <= f <= n:
                raise InputError(f"明示プロファイルは 0 ≤ f(n) ≤ n を満たす必要があります: f({n})={f}")
            self.mapping[n] = f
        self.source = source

    @classmethod
    def from_csv(cls, path: str) -> "ExplicitProfile":
        """'n,f' 形式のCSVを読み込む（見出し行と # で始まる行は無視）"""
        if not os.path.exists(path):
            raise InputError(f"明示プロファイルのファイルが見つかりません: {path}")
        mapping = {}
        with open(path, "r", encoding="utf-8", newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#") or not row[0].strip().isdigit():
                    continue
                if len(row) < 2:
                    raise InputError(f"明示プロファイルの行が不正です: {row}")
                mapping[int(row[0])] = int(row[1])
        logger.debug(f"Loaded explicit profile with {len(mapping)} entries from {path}")
        return cls(mapping, source=path)

    def value(self, n: int) -> int:
        return self.mapping.get(n, 0)

    def to_text(self) -> str:
        return f"explicit file={self.source}" if self.source else "explicit"


class UniformSubsetProfile(CardinalityProfile):
    """
    一様部分集合モデル: P_n は [n] の全部分集合から一様に選ばれる
    #P_n は Binomial(n, 1/2) に従うため f(n) は定まらない
    """
    name = "uniform"

    @property
    def random_cardinality(self) -> bool:
        return True

    def value(self, n: int) -> int:
        raise InputError("一様部分集合モデルでは f(n) はランダムです（期待値は n/2）")

    def expected(self, n: int) -> Fraction:
        return Fraction(n, 2)

    def to_text(self) -> str:
        return "uniform"


def parse_profile(text: str, base_dir: str = ".") -> CardinalityProfile:
    """
    設定ファイルのテキスト表現を解析する
    'full' / 'constant 3' / 'linear 1/2' / 'phi' / 'explicit file=...' / 'uniform'

    Raises:
        InputError: 形式が不正な場合
    """
    parts = str(text).split()
    if not parts:
        raise InputError("プロファイルが空です")
    kind, args = parts[0], parts[1:]
    try:
        if kind == "full" and not args:
            return FullProfile()
        if kind == "phi" and not args:
            return PhiProfile()
        if kind == "uniform" and not args:
            return UniformSubsetProfile()
        if kind == "constant" and len(args) == 1:
            return ConstantProfile(int(args[0]))
        if kind == "linear" and len(args) == 1:
            return LinearProfile(Fraction(args[0]))
        if kind == "explicit" and len(args) == 1 and args[0].startswith("file="):
            path = args[0][len("file="):]
            return ExplicitProfile.from_csv(path if os.path.isabs(path) else os.path.join(base_dir, path))
    except ValueError as e:
        raise InputError(f"プロファイルの引数を解析できません: {text}") from e
    raise InputError(f"プロファイルの形式が不正です: {text}")


def sample_subset(n: int, m: int, rng: np.random.Generator, method: str = SELECTION) -> np.ndarray:
    """
    [n] の m 元部分集合を一様に選ぶ

    Args:
        n: 全体集合の大きさ
        m: 選ぶ個数（0 ≤ m ≤ n）
        rng: 決定的な乱数ストリーム
        method: "selection"（逐次選択）または "shuffle"（非復元抽出）

    Returns:
        np.ndarray: 昇順の分子 a ∈ [n]（int64）
    """
    if not 0 <= m <= n:
        raise InputError(f"選択数は 0 ≤ m ≤ n である必要があります: n={n}, m={m}")
    if m == 0:
        return np.zeros(0, dtype=np.int64)
    if m == n:
        return np.arange(1, n + 1, dtype=np.int64)
    if method == SHUFFLE:
        return np.sort(rng.choice(n, size=m, replace=False)).astype(np.int64) + 1
    if method != SELECTION:
        raise InputError(f"不明なサンプリング方式です: {method}")

    # 要素 a を確率 (m − 選択済み)/(n − a + 1) で採用する
    draws = rng.integers(0, np.arange(n, 0, -1, dtype=np.int64))
    chosen: List[int] = []
    for index in range(n):
        needed = m - len(chosen)
        if needed == 0:
            break
        if needed == n - index:
            chosen.extend(range(index + 1, n + 1))
            break
        if draws[index] < needed:
            chosen.append(index + 1)
    return np.array(chosen, dtype=np.int64)


def sample_uniform_subset(n: int, rng: np.random.Generator) -> np.ndarray:
    """[n] の部分集合を一様に選ぶ（各要素を独立に確率 1/2 で採用）"""
    if n < 1:
        raise InputError(f"n は1以上である必要があります: n={n}")
    return np.flatnonzero(rng.integers(0, 2, size=n)).astype(np.int64) + 1


@dataclass
class NumeratorChoice:
    """
    実現された分子の選択 P = (P_n)
    (profile, master_seed, n) が P_n を完全に決定し、n ごとに独立なストリームを使う
    """
    profile: CardinalityProfile
    master_seed: int
    method: str = SELECTION
    _cache: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def stream_key(self, n: int) -> Tuple[int, int, int]:
        domain = DOMAIN_UNIFORM_SUBSET if self.profile.random_cardinality else DOMAIN_SUBSET
        return self.master_seed, domain, n

    def subset(self, n: int) -> np.ndarray:
        """P_n を昇順の配列で返す（初回のみ生成）"""
        cached = self._cache.get(n)
        if cached is not None:
            return cached
        rng = stream(*self.stream_key(n))
        if self.profile.random_cardinality:
            chosen = sample_uniform_subset(n, rng)
        else:
            chosen = sample_subset(n, self.profile.value(n), rng, self.method)
        chosen.setflags(write=False)
        self._cache[n] = chosen
        return chosen

    def block(self, lo: int, hi: int):
        """n ∈ (lo, hi] について (n, P_n) を順に返す"""
        for n in range(lo + 1, hi + 1):
            yield n, self.subset(n)

    def clear(self) -> None:
        self._cache.clear()


def hypergeometric_moments(n: int, m: int, D: int) -> Tuple[Fraction, Fraction]:
    """
    n 個中 D 個が区別された壺から m 個を非復元で引いたときの区別数の
    平均 mD/n と分散の上界 mD(n−D)/n²
    """
    if n < 1 or not 0 <= m <= n or not 0 <= D <= n:
        raise InputError(f"超幾何分布のパラメータが不正です: n={n}, m={m}, D={D}")
    return Fraction(m * D, n), Fraction(m * D * (n - D), n * n)


def hypergeometric_bruteforce(n: int, m: int, D: int) -> Tuple[Fraction, Fraction]:
    """
    全 C(n, m) 通りの抽出を列挙して平均と分散を厳密に求める
    区別された要素は 1..D とする
    """
    if n > 24:
        raise InputError(f"全列挙は n ≤ 24 に限ります: n={n}")
    total = comb(n, m)
    first = second = 0
    for draw in combinations(range(1, n + 1), m):
        hits = sum(1 for a in draw if a <= D)
        first += hits
        second += hits * hits
    mean = Fraction(first, total)
    return mean, Fraction(second, total) - mean * mean


@dataclass
class ConcentrationTrial:
    """二項モデルの1試行: X_N = Σ_{n≤N} #P_n と期待値の半分との比較"""
    N: int
    X: int
    expected: Fraction

    @property
    def passed(self) -> bool:
        return self.X >= self.expected / 2


def binomial_concentration_trial(N: int, rng: np.random.Generator) -> ConcentrationTrial:
    """#P_n ~ Binomial(n, 1/2) を n ≤ N で独立に引き、X_N を計算する"""
    if N < 1:
        raise InputError(f"N は1以上である必要があります: N={N}")
    sizes = rng.binomial(np.arange(1, N + 1, dtype=np.int64), 0.5)
    return ConcentrationTrial(N, int(sizes.sum(dtype=np.int64)), Fraction(N * (N + 1), 4))


def binomial_chebyshev_bound(N: int) -> Fraction:
    """4σ²(X_N)/𝔼(X_N)² = 8/(N(N+1))（σ² = Σ n/4、𝔼 = Σ n/2）"""
    variance = Fraction(N * (N + 1), 8)
    expected = Fraction(N * (N + 1), 4)
    return 4 * variance / (expected * expected)


@dataclass
class ConcentrationSummary:
    N: int
    trials: int
    failures: int
    bound: Fraction

    @property
    def failure_rate(self) -> float:
        return self.failures / self.trials

    @property
    def passed(self) -> bool:
        return self.failure_rate <= float(self.bound) + 3 * (float(self.bound) * (1 - float(self.bound)) / self.trials) ** 0.5


def binomial_concentration_experiment(N: int, trials: int, seed: int) -> ConcentrationSummary:
    """試行ごとに派生シードを使い、X_N < 𝔼/2 となる割合を数える"""
    failures = 0
    for trial in range(trials):
        outcome = binomial_concentration_trial(N, stream(trial_seed(seed, trial), DOMAIN_BINOMIAL, N))
        failures += not outcome.passed
    logger.debug(f"Binomial concentration N={N}: {failures}/{trials} failures")
    return ConcentrationSummary(N, trials, failures, binomial_chebyshev_bound(N))


@dataclass
class ChiSquareReport:
    statistic: float
    dof: int
    p_value: float

    @property
    def passed(self) -> bool:
        return self.p_value >= CHI_SQUARE_ALPHA


def _chi_square(observed: np.ndarray, expected: np.ndarray) -> ChiSquareReport:
    if len(observed) < 2:
        return ChiSquareReport(0.0, 0, 1.0)
    result = stats.chisquare(observed, expected)
    return ChiSquareReport(float(result.statistic), len(observed) - 1, float(result.pvalue))


def chi_square_uniformity(n: int, m: int, trials: int, seed: int, method: str = SELECTION) -> ChiSquareReport:
    """全 C(n, m) 通りの部分集合の出現頻度を一様分布とカイ二乗検定で比較する"""
    index = {subset: i for i, subset in enumerate(combinations(range(1, n + 1), m))}
    counts = np.zeros(len(index), dtype=np.int64)
    for trial in range(trials):
        chosen = sample_subset(n, m, stream(trial_seed(seed, trial), DOMAIN_SUBSET, n), method)
        counts[index[tuple(int(a) for a in chosen)]] += 1
    return _chi_square(counts, np.full(len(index), trials / len(index)))


def cardinality_histogram_check(n: int, trials: int, seed: int) -> ChiSquareReport:
    """
    一様部分集合モデルの #P_n の分布を Binomial(n, 1/2) と比較する
    期待度数が5未満の裾はまとめる
    """
    sizes = np.array([
        len(sample_uniform_subset(n, stream(trial_seed(seed, trial), DOMAIN_UNIFORM_SUBSET, n)))
        for trial in range(trials)
    ])
    observed = np.bincount(sizes, minlength=n + 1).astype(np.float64)
    expected = stats.binom.pmf(np.arange(n + 1), n, 0.5) * trials
    pooled_obs, pooled_exp = [], []
    acc_obs = acc_exp = 0.0
    for o, e in zip(observed, expected):
        acc_obs += o
        acc_exp += e
        if acc_exp >= 5:
            pooled_obs.append(acc_obs)
            pooled_exp.append(acc_exp)
            acc_obs = acc_exp = 0.0
    if acc_exp and pooled_obs:
        pooled_obs[-1] += acc_obs
        pooled_exp[-1] += acc_exp
    pooled_exp = np.array(pooled_exp)
    pooled_exp *= sum(pooled_obs) / pooled_exp.sum()
    return _chi_square(np.array(pooled_obs), pooled_exp)


def inclusion_frequencies(n: int, m: int, trials: int, seed: int, method: str = SELECTION) -> np.ndarray:
    """各要素 a ∈ [n] が選ばれた回数"""
    counts = np.zeros(n + 1, dtype=np.int64)
    for trial in range(trials):
        counts[sample_subset(n, m, stream(trial_seed(seed, trial), DOMAIN_SUBSET, n), method)] += 1
    return counts[1:]


def lemma_elementary_check(n_max: int = 100) -> List[Tuple[int, int]]:
    """
    1 − m/n ≤ (1 − 1/n)^m を 1 ≤ n ≤ n_max、0 ≤ m ≤ n で厳密に検証する

    Returns:
        List[Tuple[int, int]]: 不等式が破れる (n, m) の一覧（空なら成立）
    """
    violations = []
    for n in range(1, n_max + 1):
        base = 1 - Fraction(1, n)
        power = Fraction(1)
        for m in range(n + 1):
            if 1 - Fraction(m, n) > power:
                violations.append((n, m))
            power *= base
    return violations
