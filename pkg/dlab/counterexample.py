"""
dlab/counterexample.py

階乗による反例の構成と検証
係数列 c_j、減少関数 τ、整数列 M_j から疎な Ψ を構成し、
層の測度・包含・発散の不等式連鎖・φ級数の収束を厳密に確認する
"""

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, factorial
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath

from dlab.arith import (CERTIFIED_DPS, LOGLOG_FLOOR, RealBracket, bracket_from_mpf, exact_bracket,
                        exact_sum, harmonic_number, loglog_bracket, shared_sieve)
from dlab.errors import InputError, InternalError, ValidationError
from dlab.intervals import BallUnion, approx_set, contains, full_residue_measure
from dlab.model import CardinalityProfile
from dlab.psi import SparsePsi

logger = logging.getLogger(__name__)

TAG_DIFF2 = "Theorem counterex / eq (diff2)"
TAG_KEYS = "Theorem counterex / eq (k<k)"
TAG_DEFPSI = "Theorem counterex / eq (defpsi)"
TAG_MEASURE = "Theorem counterex / Borel-Cantelli sum 2c_j"
TAG_CONTAINMENT = "Theorem counterex / A_{k_i} subset A_{k_1}"
TAG_MUSTDIV = "Theorem counterex / eq (mustdiv)"
TAG_MJ = "Theorem counterex / eq (Mj)"
TAG_PHI_SERIES = "Remark after Theorem counterex / sum phi Psi"
TAG_COLLAPSE = "Theorem counterex / limsup collapse"

# 包含を区間集合で列挙する K_j の上限
CONTAINMENT_ENUMERATION_LIMIT = 100_000

# 和集合の崩壊を厳密に確認する球の総数の上限
COLLAPSE_BALL_LIMIT = 2_000_000

# φ 級数で素因数分解する M_j の上限
PHI_SERIES_MAX_M = 1000

# τ(n) = 1/logloglog(max(n, 10^7)) の定義域下限
LOGLOGLOG_FLOOR = 10**7

GEOMETRIC = "geometric"
INVERSE_SQUARE = "inverse_square"
EXPLICIT = "explicit"

TAU_LOGLOG_SQRT = "loglog_sqrt"
TAU_LOGLOGLOG = "logloglog"
TAU_KINDS = (TAU_LOGLOG_SQRT, TAU_LOGLOGLOG)


@dataclass(frozen=True)
class CoefficientSpec:
    """
    収束級数 Σ c_j の係数
    geometric: c_j = r^j、inverse_square: c_j = s/j²、explicit: 値の列
    """
    kind: str
    parameter: Fraction = Fraction(1, 2)
    values: Tuple[Fraction, ...] = ()

    def __post_init__(self):
        if self.kind == GEOMETRIC:
            if not 0 < self.parameter < 1:
                raise InputError(f"geometric の公比は (0, 1) である必要があります: {self.parameter}")
        elif self.kind == INVERSE_SQUARE:
            if self.parameter <= 0:
                raise InputError(f"inverse_square の係数は正である必要があります: {self.parameter}")
        elif self.kind == EXPLICIT:
            if not self.values or any(v <= 0 for v in self.values):
                raise InputError("explicit の係数は正の有理数の列である必要があります")
        else:
            raise InputError(f"不明な係数の形式です: {self.kind}")

    def __call__(self, j: int) -> Fraction:
        if j < 1:
            raise InputError(f"係数の添字は1以上です: j={j}")
        if self.kind == GEOMETRIC:
            return self.parameter ** j
        if self.kind == INVERSE_SQUARE:
            return self.parameter / (j * j)
        if j > len(self.values):
            raise InputError(f"explicit の係数が不足しています: j={j}")
        return self.values[j - 1]

    @property
    def convergence(self) -> str:
        """収束の根拠（比較判定の種類）"""
        return {
            GEOMETRIC: "geometric series, ratio < 1",
            INVERSE_SQUARE: "comparison with sum 1/j^2",
            EXPLICIT: "finite explicit list (not proved)",
        }[self.kind]

    def total(self, J: int) -> Fraction:
        return sum((self(j) for j in range(1, J + 1)), Fraction(0))

    def to_text(self) -> str:
        if self.kind == EXPLICIT:
            return f"explicit [{', '.join(str(v) for v in self.values)}]"
        return f"{self.kind} {self.parameter}"

    @classmethod
    def parse(cls, text: str) -> "CoefficientSpec":
        """'geometric 1/2'、'inverse_square 1'、'explicit [1/2, 1/4]' を解釈する"""
        text = str(text).strip()
        match = re.match(r"^explicit\s*\[(.*)\]$", text)
        try:
            if match:
                values = tuple(Fraction(v.strip()) for v in match.group(1).split(",") if v.strip())
                return cls(EXPLICIT, values=values)
            kind, _, parameter = text.partition(" ")
            return cls(kind, Fraction(parameter.strip()))
        except (ValueError, ZeroDivisionError) as e:
            raise InputError(f"係数の指定を解釈できません: {text}") from e


@dataclass(frozen=True)
class TauSpec:
    """
    0 に減少する τ
    loglog_sqrt: τ(n) = loglog(max(n,16))^{-1/2}
    logloglog: τ(n) = 1/logloglog(max(n, 10^7))
    """
    kind: str = TAU_LOGLOG_SQRT

    def __post_init__(self):
        if self.kind not in TAU_KINDS:
            raise InputError(f"不明な τ の形式です: {self.kind}（{', '.join(TAU_KINDS)}）")

    @property
    def floor(self) -> int:
        """τ はこの値未満の n で定数"""
        return LOGLOG_FLOOR if self.kind == TAU_LOGLOG_SQRT else LOGLOGLOG_FLOOR

    def bracket(self, n: int) -> RealBracket:
        """τ(n) の認証付き包含（任意精度の整数に対応）"""
        with mpmath.workdps(CERTIFIED_DPS):
            if self.kind == TAU_LOGLOG_SQRT:
                x = mpmath.mpf(max(n, self.floor))
                value = 1 / mpmath.sqrt(mpmath.log(mpmath.log(x)))
            else:
                x = mpmath.mpf(max(n, self.floor))
                value = 1 / mpmath.log(mpmath.log(mpmath.log(x)))
        return bracket_from_mpf(value)

    def to_text(self) -> str:
        return self.kind


def _growth_bound(tau: TauSpec, n: int) -> RealBracket:
    """n/(τ(n)·loglog n) の包含"""
    return (tau.bracket(n) * loglog_bracket(n)).reciprocal().scale(Fraction(n))


class GrowthProfile(CardinalityProfile):
    """f(n) = min(n, ⌈n/(τ(n)·loglog n)⌉)（包含の上端で切り上げ）"""
    name = "growth"

    def __init__(self, tau: TauSpec):
        self.tau = tau

    def value(self, n: int) -> int:
        return min(n, ceil(_growth_bound(self.tau, n).upper))

    def to_text(self) -> str:
        return f"growth tau={self.tau.to_text()}"


class SweetSpotProfile(CardinalityProfile):
    """
    台のキーでは n/(τ(n)·loglog n) 以上、それ以外では C·n/loglog n 程度の f
    """
    name = "sweet_spot"

    def __init__(self, keys: Sequence[int], tau: TauSpec, C: Fraction):
        C = Fraction(C)
        if C <= 0:
            raise InputError(f"台の外の定数 C は正である必要があります: {C}")
        self.keys = frozenset(keys)
        self.tau = tau
        self.C = C
        self._growth = GrowthProfile(tau)

    def value(self, n: int) -> int:
        if n in self.keys:
            return self._growth.value(n)
        off_support = loglog_bracket(n).reciprocal().scale(self.C * n)
        return min(n, ceil(off_support.upper))

    def to_text(self) -> str:
        return f"sweet_spot C={self.C} tau={self.tau.to_text()}"


@dataclass(frozen=True)
class CounterexampleSpec:
    """
    構成済みの反例
    K_j = M_j!、k_i^{(j)} = K_j/i（i = 1..M_j）、Ψ(k_i^{(j)}) = c_j/K_j
    """
    c: CoefficientSpec
    tau: TauSpec
    M: Tuple[int, ...]
    K: Tuple[int, ...]
    psi: SparsePsi = field(repr=False)

    @property
    def J(self) -> int:
        return len(self.M) - 1

    def c_j(self, j: int) -> Fraction:
        return self.c(j)

    def keys(self, j: int) -> List[int]:
        """ブロック j のキー k_1 > k_2 > … > k_{M_j}"""
        self._check_block(j)
        K = self.K[j - 1]
        return [K // i for i in range(1, self.M[j] + 1)]

    def radius(self, j: int) -> Fraction:
        self._check_block(j)
        return self.c(j) / self.K[j - 1]

    def all_keys(self) -> List[int]:
        return [k for j in range(1, self.J + 1) for k in self.keys(j)]

    def advisory(self, j: int) -> RealBracket:
        """c_j/τ((M_j − 1)!)（無限に多くの j で ≫ 1 となるべき量）"""
        return self.tau.bracket(factorial(self.M[j] - 1)).reciprocal().scale(self.c(j))

    def _check_block(self, j: int) -> None:
        if not 1 <= j <= self.J:
            raise InputError(f"ブロック番号は 1〜{self.J} の範囲である必要があります: j={j}")

    def describe(self) -> str:
        return f"M={list(self.M)} c={self.c.to_text()} tau={self.tau.to_text()}"


def build(c: CoefficientSpec, tau: TauSpec, M: Sequence[int]) -> CounterexampleSpec:
    """
    (c_j, τ, M_j) から反例の Ψ を構成し、キーの順序と重複なしを検証する

    Raises:
        ValidationError: M_0 ≠ 0、単調でない、または隣接差が2未満の場合
        InternalError: ブロック間でキーが衝突した場合
    """
    M = tuple(int(m) for m in M)
    if len(M) < 2 or M[0] != 0:
        raise ValidationError("M は M_0 = 0 から始まり、1つ以上のブロックを含む必要があります")
    for j in range(1, len(M)):
        if M[j] - M[j - 1] < 2:
            raise ValidationError(
                f"M の隣接する項の差は2以上である必要があります: M_{j - 1}={M[j - 1]}, M_{j}={M[j]} [{TAG_DIFF2}]"
            )

    K = tuple(factorial(m) for m in M[1:])
    support: Dict[int, Fraction] = {}
    previous_max = 0
    for j in range(1, len(M)):
        keys = [K[j - 1] // i for i in range(1, M[j] + 1)]
        if any(keys[i] * (i + 1) != K[j - 1] for i in range(len(keys))):
            raise InternalError(f"K_{j} が 1..M_{j} で割り切れません")
        if any(a <= b for a, b in zip(keys, keys[1:])):
            raise InternalError(f"ブロック {j} のキーが狭義減少していません [{TAG_KEYS}]")
        if keys[-1] <= previous_max:
            raise InternalError(f"ブロック {j} の最小キー {keys[-1]} が前のブロックの最大 {previous_max} 以下です")
        radius = c(j) / K[j - 1]
        for k in keys:
            if k in support:
                raise InternalError(f"キー {k} がブロック間で衝突しました [{TAG_DEFPSI}]")
            support[k] = radius
        previous_max = keys[0]

    spec = CounterexampleSpec(c, tau, M, K, SparsePsi.from_mapping(support))
    for j in range(1, spec.J + 1):
        advisory = spec.advisory(j)
        logger.debug(f"Block {j}: K={K[j - 1]}, c_j/tau((M_j-1)!) ~ {float(advisory.mid):.6g}")
    logger.info(f"Built counterexample {spec.describe()} with {len(support)} keys")
    return spec


@dataclass
class MeasureRow:
    j: int
    K: int
    c: Fraction
    measure: Fraction
    bound: Fraction
    capped: bool

    @property
    def holds(self) -> bool:
        return self.measure <= self.bound


@dataclass
class MeasureLedger:
    rows: List[MeasureRow]

    @property
    def total(self) -> Fraction:
        return sum((r.measure for r in self.rows), Fraction(0))

    @property
    def bound(self) -> Fraction:
        return sum((r.bound for r in self.rows), Fraction(0))

    @property
    def holds(self) -> bool:
        return all(r.holds for r in self.rows) and self.total <= self.bound


def verify_measure_vanishing(spec: CounterexampleSpec, J: Optional[int] = None) -> MeasureLedger:
    """
    λ(A_{K_j}(Ψ)) を閉形式で求め、各 j で 2c_j 以下であることを確認する
    c_j ≥ 1/2 の層は [0,1] で打ち切られるため capped として記録する
    """
    J = spec.J if J is None else J
    rows = []
    for j in range(1, J + 1):
        K = spec.K[j - 1]
        c = spec.c_j(j)
        measure = full_residue_measure(K, spec.radius(j))
        capped = 2 * c >= 1
        if not capped and measure != 2 * c - c / K:
            raise InternalError(f"閉形式の測度が 2c_j − c_j/K_j と一致しません: j={j}")
        rows.append(MeasureRow(j, K, c, measure, 2 * c, capped))
    return MeasureLedger(rows)


@dataclass
class ContainmentResult:
    j: int
    method: str            # "exact" または "structural"
    holds: bool
    failures: List[int] = field(default_factory=list)

    @property
    def witness(self) -> str:
        if self.holds:
            return f"all {self.method} containments hold"
        return f"fails for i={self.failures}"


def verify_containment(spec: CounterexampleSpec, j: int) -> ContainmentResult:
    """
    A_{k_i^{(j)}}(Ψ) ⊂ A_{K_j}(Ψ) を確認する
    K_j ≤ 10^5 なら区間集合で厳密に、それ以外は中心 a/k_i = (a·i)/K_j の整除関係で確認する
    """
    keys = spec.keys(j)
    K = spec.K[j - 1]
    radius = spec.radius(j)
    failures = []
    if K <= CONTAINMENT_ENUMERATION_LIMIT:
        outer = approx_set(K, range(1, K + 1), radius)
        for i, k in enumerate(keys, start=1):
            if spec.psi.value(k) != radius or not contains(outer, approx_set(k, range(1, k + 1), radius)):
                failures.append(i)
        return ContainmentResult(j, "exact", not failures, failures)
    for i, k in enumerate(keys, start=1):
        # a ≤ k ⇒ a·i ≤ K なので中心は b/K（b ∈ [K]）の部分集合
        if k * i != K or spec.psi.value(k) != spec.psi.value(K):
            failures.append(i)
    return ContainmentResult(j, "structural", not failures, failures)


@dataclass
class ChainRow:
    """
    ブロック j の発散の不等式連鎖 S_j ≥ T1 ≥ T2 ≥ T3
    各段は包含による認証か、両辺が同一の実数である構造的な証人で成立とする
    """
    j: int
    S: Fraction
    T1: RealBracket
    T2: RealBracket
    T3: RealBracket
    advisory: RealBracket
    # T1 と T2 の各項の τ・loglog の引数が下限で一致し、T1 = T2
    equal_terms: bool = False

    @property
    def steps(self) -> List[Tuple[str, bool, bool, bool]]:
        """(段, 否定されない, 認証された, 等号の証人) の組"""
        S = exact_bracket(self.S)
        return [
            ("fbound", S.possibly_ge(self.T1), S.certainly_ge(self.T1), False),
            ("k<k", self.T1.possibly_ge(self.T2), self.T1.certainly_ge(self.T2), self.equal_terms),
            ("harmonic", self.T2.possibly_ge(self.T3), self.T2.certainly_ge(self.T3), False),
        ]

    @property
    def holds(self) -> bool:
        return all(certified or witnessed for _, _, certified, witnessed in self.steps)

    @property
    def not_refuted(self) -> bool:
        return all(possible for _, possible, _, _ in self.steps)

    @property
    def mj_satisfied(self) -> bool:
        return self.advisory.lower >= 1


def _terms_coincide(tau: TauSpec, keys: List[int]) -> bool:
    """全キーが τ と loglog の下限以下に収まり、T1 と T2 が同じ式になるか"""
    return all(max(k, tau.floor) == max(keys[-1], tau.floor) and max(k, LOGLOG_FLOOR) == max(keys[0], LOGLOG_FLOOR)
               for k in keys)


def divergence_ledger(spec: CounterexampleSpec, f: CardinalityProfile,
                      J: Optional[int] = None) -> List[ChainRow]:
    """
    各ブロックの S_j = Σ_i f(k_i)·c_j/K_j と、発散の証明に現れる下界の連鎖を計算する
    T1 = Σ_i c_j/(i·τ(k_i)·loglog k_i)、T2 = c_j·H_{M_j}/(τ(k_{M_j})·loglog k_1)、
    T3 = c_j·log M_j/(τ((M_j−1)!)·loglog(M_j!))
    """
    J = spec.J if J is None else J
    rows = []
    for j in range(1, J + 1):
        keys = spec.keys(j)
        K = spec.K[j - 1]
        c = spec.c_j(j)
        M = spec.M[j]
        weights = [f.value(k) for k in keys]
        S = exact_sum([w * c.numerator for w in weights], [K * c.denominator] * len(keys))

        T1 = exact_bracket(Fraction(0))
        for i, k in enumerate(keys, start=1):
            T1 = T1 + (spec.tau.bracket(k) * loglog_bracket(k)).reciprocal().scale(c / i)
        inner = spec.tau.bracket(keys[-1]) * loglog_bracket(keys[0])
        T2 = inner.reciprocal().scale(c * harmonic_number(M))
        with mpmath.workdps(CERTIFIED_DPS):
            log_M = bracket_from_mpf(mpmath.log(M))
        T3 = (spec.tau.bracket(factorial(M - 1)) * loglog_bracket(K)).reciprocal().scale(c) * log_M
        row = ChainRow(j, S, T1, T2, T3, spec.advisory(j), _terms_coincide(spec.tau, keys))
        if not row.holds:
            logger.warning(f"Divergence chain fails at block {j}: {row.steps}")
        rows.append(row)
    return rows


@dataclass
class PhiSeriesRow:
    j: int
    value: Optional[Fraction]
    c: Fraction

    @property
    def complete(self) -> bool:
        return self.value is not None

    @property
    def holds(self) -> bool:
        return self.value is None or self.value <= self.c


def phi_series_check(spec: CounterexampleSpec, J: Optional[int] = None) -> List[PhiSeriesRow]:
    """
    Σ_i φ(k_i^{(j)})·c_j/K_j ≤ c_j をブロックごとに厳密に確認する
    M_j が素因数分解の予算を超えるブロックは value=None（部分的な報告）
    """
    J = spec.J if J is None else J
    sieve = shared_sieve(max(1024, PHI_SERIES_MAX_M))
    rows = []
    for j in range(1, J + 1):
        c = spec.c_j(j)
        if spec.M[j] > PHI_SERIES_MAX_M:
            logger.warning(f"Block {j}: M_j={spec.M[j]} exceeds the factorization budget, skipped")
            rows.append(PhiSeriesRow(j, None, c))
            continue
        total = sum(sieve.totient(k) for k in spec.keys(j))
        rows.append(PhiSeriesRow(j, Fraction(total, spec.K[j - 1]) * c, c))
    return rows


def sweet_spot_profile(spec: CounterexampleSpec, C: Fraction) -> SweetSpotProfile:
    """台のキーで成長し、台の外では C·n/loglog n で抑えられるプロファイル"""
    return SweetSpotProfile(spec.all_keys(), spec.tau, C)


def growth_profile(spec: CounterexampleSpec) -> GrowthProfile:
    """f(n) = min(n, ⌈n/(τ(n)·loglog n)⌉)"""
    return GrowthProfile(spec.tau)


@dataclass
class CollapseResult:
    all_layers: Optional[Fraction]
    top_layers: Optional[Fraction]

    @property
    def checked(self) -> bool:
        return self.all_layers is not None

    @property
    def holds(self) -> bool:
        return self.all_layers is None or self.all_layers == self.top_layers


def collapse_check(spec: CounterexampleSpec, J: Optional[int] = None) -> CollapseResult:
    """
    λ(∪_j ∪_i A_{k_i^{(j)}}) = λ(∪_j A_{K_j}) を確認する
    球の総数が上限を超える場合は上位の層の測度だけを返す
    """
    J = spec.J if J is None else J
    top_layers = [(spec.K[j - 1], range(1, spec.K[j - 1] + 1), spec.radius(j)) for j in range(1, J + 1)]
    all_layers = [(k, range(1, k + 1), spec.radius(j)) for j in range(1, J + 1) for k in spec.keys(j)]
    if sum(len(a) for _, a, _ in all_layers) > COLLAPSE_BALL_LIMIT:
        logger.info("Collapse check skipped: too many balls to enumerate")
        return CollapseResult(None, None)
    top = BallUnion.from_layers(top_layers).measure().value
    every = BallUnion.from_layers(all_layers).measure().value
    return CollapseResult(every, top)
