"""
dlab/blocks.py

ブロックスキーム N_t = k^t、ブロック和 F_t、ユビキティ関数 ρ
「十分大きな t」は検査窓の中で不等式が最後まで成り立つ最小の t として報告する
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from dlab.arith import exact_sum, shared_sieve
from dlab.errors import DegenerateSchemeError, InputError
from dlab.model import CardinalityProfile

logger = logging.getLogger(__name__)

MODE_LINEAR = "linear"
MODE_BOUNDED = "bounded"


@dataclass(frozen=True)
class BlockScheme:
    """
    切断点 N_{t_min} < … < N_{t_max+1} とブロック和 F_t
    ブロック t は (N_t, N_{t+1}]、ρ(n) = 1/F_t
    """
    profile: CardinalityProfile
    base: Optional[int]
    t_min: int
    cut_points: Tuple[int, ...]
    block_sums: Tuple[int, ...]

    @property
    def t_max(self) -> int:
        return self.t_min + len(self.block_sums) - 1

    @property
    def ts(self) -> range:
        return range(self.t_min, self.t_max + 1)

    def _index(self, t: int) -> int:
        if not self.t_min <= t <= self.t_max:
            raise InputError(f"t={t} はスキームの範囲 [{self.t_min}, {self.t_max}] の外です")
        return t - self.t_min

    def N(self, t: int) -> int:
        """切断点 N_t（t_max + 1 まで）"""
        if not self.t_min <= t <= self.t_max + 1:
            raise InputError(f"N_{t} はスキームの範囲外です")
        return self.cut_points[t - self.t_min]

    def F(self, t: int) -> int:
        return self.block_sums[self._index(t)]

    def block(self, t: int) -> Tuple[int, int]:
        """ブロック t の端点 (N_t, N_{t+1})"""
        i = self._index(t)
        return self.cut_points[i], self.cut_points[i + 1]

    def rho(self, t: int) -> Fraction:
        """ブロック t 上のユビキティ関数 ρ = 1/F_t"""
        return Fraction(1, self.F(t))

    def t_of(self, n: int) -> int:
        """n ∈ (N_t, N_{t+1}] となる t"""
        for t in self.ts:
            lo, hi = self.block(t)
            if lo < n <= hi:
                return t
        raise InputError(f"n={n} はスキームのどのブロックにも属しません")

    def rho_at(self, n: int) -> Fraction:
        return self.rho(self.t_of(n))

    def describe(self) -> str:
        base = f"k={self.base}" if self.base else "lacunary"
        return f"{self.profile.to_text()}, {base}, t∈[{self.t_min}, {self.t_max}]"


def _block_sums(profile: CardinalityProfile, cut_points: Sequence[int], t_min: int) -> Tuple[int, ...]:
    if profile.random_cardinality:
        raise InputError("一様部分集合モデルにはブロック和が定まりません")
    sums = []
    for i in range(len(cut_points) - 1):
        F = profile.block_sum(cut_points[i], cut_points[i + 1])
        if F <= 0:
            raise DegenerateSchemeError(t_min + i)
        sums.append(F)
    return tuple(sums)


def build_scheme(f: CardinalityProfile, k: int, t_range: Tuple[int, int]) -> BlockScheme:
    """
    幾何的なブロックスキーム N_t = k^t を構築する

    Args:
        f: 濃度プロファイル
        k: 底（2以上）
        t_range: (t_min, t_max)

    Returns:
        BlockScheme: 厳密な F_t を持つスキーム

    Raises:
        DegenerateSchemeError: F_t = 0 となる t がある場合
    """
    t_min, t_max = t_range
    if k < 2:
        raise InputError(f"底 k は2以上である必要があります: k={k}")
    if not 0 <= t_min <= t_max:
        raise InputError(f"t の範囲が不正です: [{t_min}, {t_max}]")
    cut_points = tuple(k**t for t in range(t_min, t_max + 2))
    scheme = BlockScheme(f, k, t_min, cut_points, _block_sums(f, cut_points, t_min))
    logger.debug(f"Built block scheme {scheme.describe()}")
    return scheme


def from_cut_points(f: CardinalityProfile, cut_points: Sequence[int], t_min: int = 0) -> BlockScheme:
    """利用者指定の疎な切断点列 {N_t} からスキームを構築する"""
    points = tuple(int(p) for p in cut_points)
    if len(points) < 2:
        raise InputError("切断点は2個以上必要です")
    if points[0] < 0 or any(b <= a for a, b in zip(points, points[1:])):
        raise InputError(f"切断点は狭義単調増加の非負整数列である必要があります: {list(points)}")
    return BlockScheme(f, None, t_min, points, _block_sums(f, points, t_min))


@dataclass
class WindowRecord:
    t: int
    values: Dict[str, Fraction]
    holds: bool


@dataclass
class WindowReport:
    """
    検査窓の中での不等式の軌跡
    holds_from は窓の終わりまで成り立ち続ける最小の t（なければ None）
    """
    check: str
    tag: str
    constants: Dict[str, Fraction]
    records: List[WindowRecord] = field(default_factory=list)

    @property
    def holds_from(self) -> Optional[int]:
        start = None
        for record in reversed(self.records):
            if not record.holds:
                break
            start = record.t
        return start

    @property
    def holds_everywhere(self) -> bool:
        return bool(self.records) and all(r.holds for r in self.records)


def classify_linear(scheme: BlockScheme, a: Fraction = Fraction(1, 4)) -> WindowReport:
    """F_t ≥ a·N_{t+1}² が成り立つ t の窓内での判定"""
    a = Fraction(a)
    report = WindowReport("linear-on-average", "Lemma averageorder", {"a": a})
    for t in scheme.ts:
        ratio = Fraction(scheme.F(t), scheme.N(t + 1) ** 2)
        report.records.append(WindowRecord(t, {"F_t/N_{t+1}^2": ratio}, ratio >= a))
    return report


def classify_bounded(scheme: BlockScheme, c1: Fraction, c2: Fraction) -> WindowReport:
    """c1·N_{t+1} ≤ F_t ≤ c2·N_t が成り立つ t の窓内での判定"""
    c1, c2 = Fraction(c1), Fraction(c2)
    report = WindowReport("bounded-on-average", "Lemma boundedonaverage", {"c1": c1, "c2": c2})
    for t in scheme.ts:
        F = scheme.F(t)
        lower = Fraction(F, scheme.N(t + 1))
        upper = Fraction(F, scheme.N(t)) if scheme.N(t) else None
        holds = lower >= c1 and upper is not None and upper <= c2
        values = {"F_t/N_{t+1}": lower}
        if upper is not None:
            values["F_t/N_t"] = upper
        report.records.append(WindowRecord(t, values, holds))
    return report


def check_regularity(scheme: BlockScheme, lam: Fraction) -> WindowReport:
    """
    F_t ≤ λ·F_{t+1}（すなわち ρ(N_{t+1}) ≤ λ·ρ(N_t)）を t_min..t_max−1 で判定
    """
    lam = Fraction(lam)
    if not 0 < lam < 1:
        raise InputError(f"λ は (0, 1) である必要があります: {lam}")
    report = WindowReport("regularity", "Lemma averageorder (furthermore)", {"lambda": lam})
    for t in range(scheme.t_min, scheme.t_max):
        ratio = Fraction(scheme.F(t), scheme.F(t + 1))
        report.records.append(WindowRecord(t, {"F_t/F_{t+1}": ratio}, ratio <= lam))
    return report


def check_growth(scheme: BlockScheme, A: Fraction, B: Fraction) -> WindowReport:
    """A ≤ F_{t+1}/F_t ≤ B（1 < A ≤ B）の窓内での判定"""
    A, B = Fraction(A), Fraction(B)
    if not 1 < A <= B:
        raise InputError(f"定数は 1 < A ≤ B を満たす必要があります: A={A}, B={B}")
    report = WindowReport("block-sum-growth", "eq blocksumgrowth", {"A": A, "B": B})
    for t in range(scheme.t_min, scheme.t_max):
        ratio = Fraction(scheme.F(t + 1), scheme.F(t))
        report.records.append(WindowRecord(t, {"F_{t+1}/F_t": ratio}, A <= ratio <= B))
    return report


def check_averages(scheme: BlockScheme, c_lo: Fraction, c_hi: Fraction) -> WindowReport:
    """c_lo ≤ F_t/(N_t f(N_t)) ≤ c_hi の窓内での判定"""
    c_lo, c_hi = Fraction(c_lo), Fraction(c_hi)
    report = WindowReport("averages", "eq averages", {"c_lo": c_lo, "c_hi": c_hi})
    for t in scheme.ts:
        N = scheme.N(t)
        scale = N * scheme.profile.value(N) if N else 0
        if scale == 0:
            report.records.append(WindowRecord(t, {}, False))
            continue
        ratio = Fraction(scheme.F(t), scale)
        report.records.append(WindowRecord(t, {"F_t/(N_t f(N_t))": ratio}, c_lo <= ratio <= c_hi))
    return report


def suggest_base(a: Fraction, b: Optional[Fraction] = None, mode: str = MODE_LINEAR) -> int:
    """
    証明中の条件を満たす最小の底 k を返す
    linear: a/2 − 1/(2k²) ≥ a/4 かつ a/(4k²) < 1
    bounded: k > b/a かつ a − b/k ≥ a/2
    """
    a = Fraction(a)
    if a <= 0:
        raise InputError(f"a は正である必要があります: a={a}")
    if mode == MODE_LINEAR:
        k = 2
        while not (a / 2 - Fraction(1, 2 * k * k) >= a / 4 and a / (4 * k * k) < 1):
            k += 1
        return k
    if mode == MODE_BOUNDED:
        if b is None or Fraction(b) <= a:
            raise InputError(f"bounded モードでは a < b が必要です: a={a}, b={b}")
        b = Fraction(b)
        k = int(b / a) + 1
        while a - b / k < a / 2:
            k += 1
        return k
    raise InputError(f"不明なモードです: {mode}")


def exact_products(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """要素ごとの積（int64 に収まらない場合は Python の整数で計算）"""
    if len(a) == 0 or int(np.abs(a).max()) * int(np.abs(b).max()) < 2**63:
        return a.astype(np.int64) * b.astype(np.int64)
    return a.astype(object) * b.astype(object)


def sumfphi_ratios(scheme: BlockScheme) -> WindowReport:
    """
    Σ_{n∈block} f(n)φ(n)/n と F_t の比の軌跡
    定数は最小比として記録する
    """
    report = WindowReport("sum-f-phi", "Lemma sumfphi", {})
    sieve = shared_sieve(scheme.N(scheme.t_max + 1))
    for t in scheme.ts:
        lo, hi = scheme.block(t)
        f = scheme.profile.values(lo, hi)
        phi = sieve.phi[lo + 1:hi + 1]
        n = np.arange(lo + 1, hi + 1, dtype=np.int64)
        weighted = exact_sum(exact_products(f, phi), n)
        ratio = weighted / scheme.F(t)
        report.records.append(WindowRecord(t, {"sum_f_phi_over_n/F_t": ratio}, True))
    if report.records:
        report.constants["c"] = min(r.values["sum_f_phi_over_n/F_t"] for r in report.records)
    return report


@dataclass
class NormComparisonResult:
    applicable: bool
    nonzero: int
    bound: Fraction

    @property
    def holds(self) -> bool:
        return not self.applicable or self.nonzero >= self.bound


def check_norm_comparison(x: Sequence[int], c1: Fraction, c2: Fraction) -> NormComparisonResult:
    """
    x_i² ≤ c1·d かつ |x|₂ ≥ d√c2 ならば非零成分の個数 ≥ (c2/c1)·d を確認する
    仮定を満たさない x は applicable=False
    """
    c1, c2 = Fraction(c1), Fraction(c2)
    d = len(x)
    squares = [int(v) * int(v) for v in x]
    applicable = d > 0 and all(s <= c1 * d for s in squares) and sum(squares) >= c2 * d * d
    return NormComparisonResult(applicable, sum(1 for v in x if v), c2 / c1 * d)


def norm_comparison_exhaustive(d: int, c1: Fraction, c2: Fraction) -> bool:
    """
    非零成分 k 個のベクトルの |x|₂² の最大は k·⌊√(c1 d)⌋² なので、
    仮定を満たし得る k がすべて (c2/c1)·d 以上であることを確認する
    """
    c1, c2 = Fraction(c1), Fraction(c2)
    cap = c1 * d
    largest = isqrt(cap.numerator // cap.denominator)
    for k in range(0, d + 1):
        if k * largest * largest >= c2 * d * d and k < c2 / c1 * d:
            return False
    return True
