"""
dlab/psi.py

近似関数Ψの表現と評価
閉形式 c/(n^α (ln n)^β)、有限台の疎写像、恒等的に0の3種類を扱い、
級数 Σ f(n)Ψ(n) の部分和とCatlin変換 Ψ̄(n) = max_k Ψ(kn) を提供
"""

import logging
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Dict, Iterable, List, Mapping, Optional, Tuple, Union

import mpmath

from dlab.arith import RealBracket, SieveTable, exact_bracket, exact_sum, shared_sieve
from dlab.errors import DomainError, InputError

if TYPE_CHECKING:
    from dlab.model import CardinalityProfile

logger = logging.getLogger(__name__)

# 閉形式の有理数近似の相対許容誤差
PSI_REL_TOL = Fraction(1, 10**12)

# 有理数近似の仮数ビット数（2^-44 < 10^-12）
_MANTISSA_BITS = 44

# 単調性の検証に使う標本点
_MONOTONE_SAMPLES = list(range(2, 65)) + [2**k for k in range(7, 31)]


class PsiSpec(ABC):
    """近似関数Ψ: ℕ → ℚ_{≥0} の基底クラス"""

    monotone_decreasing: bool = False

    @abstractmethod
    def value(self, n: int) -> Fraction:
        """Ψ(n) を非負の有理数で返す"""

    def bracket(self, n: int) -> RealBracket:
        """Ψ(n) の真値を囲む認証付き包含"""
        return exact_bracket(self.value(n))

    @abstractmethod
    def to_text(self) -> str:
        """設定ファイル用のテキスト表現"""

    @property
    def is_sparse(self) -> bool:
        return False

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class ZeroPsi(PsiSpec):
    monotone_decreasing: bool = True

    def value(self, n: int) -> Fraction:
        if n < 1:
            raise DomainError(f"Ψ は正の整数でのみ定義されます: n={n}")
        return Fraction(0)

    def to_text(self) -> str:
        return "zero"


@dataclass(frozen=True)
class ClosedFormPsi(PsiSpec):
    """
    Ψ(n) = c / (n^alpha (ln n)^beta)
    alpha が整数かつ beta = 0 のときは厳密、それ以外は相対誤差 10^-12 の二進有理数
    """
    c: Fraction
    alpha: Fraction
    beta: Fraction = Fraction(0)
    monotone_decreasing: bool = True

    def __post_init__(self):
        object.__setattr__(self, "c", Fraction(self.c))
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        object.__setattr__(self, "beta", Fraction(self.beta))
        if self.c <= 0:
            raise InputError(f"Ψ の係数 c は正である必要があります: c={self.c}")
        if self.monotone_decreasing:
            previous = None
            for n in _MONOTONE_SAMPLES:
                if n < self.min_n:
                    continue
                current = self.value(n)
                if previous is not None and current > previous:
                    raise InputError(f"Ψ が単調減少ではありません（n={n} で増加）: {self.to_text()}")
                previous = current

    @property
    def min_n(self) -> int:
        return 2 if self.beta != 0 else 1

    @property
    def is_exact(self) -> bool:
        return self.alpha.denominator == 1 and self.beta == 0

    def value(self, n: int) -> Fraction:
        if n < 1:
            raise DomainError(f"Ψ は正の整数でのみ定義されます: n={n}")
        if n < self.min_n:
            raise DomainError(f"beta ≠ 0 の Ψ は n=1 で定義されません（ln 1 = 0）")
        if self.is_exact:
            return self.c / Fraction(n) ** int(self.alpha)
        with mpmath.workdps(30):
            real = (mpmath.mpf(self.c.numerator) / self.c.denominator
                    / mpmath.power(n, mpmath.mpf(self.alpha.numerator) / self.alpha.denominator)
                    / mpmath.power(mpmath.log(n), mpmath.mpf(self.beta.numerator) / self.beta.denominator))
            exponent = int(mpmath.floor(mpmath.log(real, 2)))
            shift = _MANTISSA_BITS - exponent
            scaled = int(mpmath.nint(real * mpmath.mpf(2) ** shift))
        if shift >= 0:
            return Fraction(scaled, 2**shift)
        return Fraction(scaled * 2**(-shift))

    def bracket(self, n: int) -> RealBracket:
        value = self.value(n)
        if self.is_exact:
            return exact_bracket(value)
        return RealBracket(value * (1 - PSI_REL_TOL), value * (1 + PSI_REL_TOL))

    def to_text(self) -> str:
        return f"closed_form c={self.c} alpha={self.alpha} beta={self.beta}"


@dataclass(frozen=True)
class SparsePsi(PsiSpec):
    """
    有限台の Ψ: 台の外では 0
    キーは任意精度の整数（K_j = M_j! など）
    """
    support: Tuple[Tuple[int, Fraction], ...]
    monotone_decreasing: bool = False
    _lookup: Dict[int, Fraction] = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        items = tuple(sorted((int(k), Fraction(v)) for k, v in self.support))
        keys = [k for k, _ in items]
        if len(set(keys)) != len(keys):
            raise InputError("疎写像のキーが重複しています")
        for k, v in items:
            if k < 1:
                raise InputError(f"疎写像のキーは正の整数である必要があります: {k}")
            if v <= 0:
                raise InputError(f"疎写像の値は正の有理数である必要があります: Ψ({k})={v}")
        object.__setattr__(self, "support", items)
        object.__setattr__(self, "_lookup", dict(items))

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, Fraction]) -> "SparsePsi":
        return cls(tuple(mapping.items()))

    @property
    def is_sparse(self) -> bool:
        return True

    @property
    def keys(self) -> List[int]:
        return [k for k, _ in self.support]

    def value(self, n: int) -> Fraction:
        if n < 1:
            raise DomainError(f"Ψ は正の整数でのみ定義されます: n={n}")
        return self._lookup.get(n, Fraction(0))

    def items(self) -> Iterable[Tuple[int, Fraction]]:
        return iter(self.support)

    def to_text(self) -> str:
        body = ", ".join(f"{k}:{v}" for k, v in self.support)
        return f"sparse {{{body}}}"


def evaluate(psi: PsiSpec, n: int) -> Fraction:
    """Ψ(n) を評価する"""
    return psi.value(n)


def eval_bracket(psi: PsiSpec, n: int) -> RealBracket:
    """Ψ(n) の認証付き包含"""
    return psi.bracket(n)


_CLOSED_FORM = re.compile(r"^closed_form((?:\s+\w+=\S+)*)\s*$")
_SPARSE = re.compile(r"^sparse\s*\{(.*)\}\s*$", re.S)


def parse_psi(text: str) -> PsiSpec:
    """
    設定ファイルのテキスト表現を解析する
    'zero' / 'closed_form c=1 alpha=2 beta=1' / 'sparse {6:1/12, 120:1/480}'

    Raises:
        InputError: 形式が不正な場合
    """
    text = str(text).strip()
    if text == "zero":
        return ZeroPsi()
    match = _CLOSED_FORM.match(text)
    if match:
        params = dict(pair.split("=", 1) for pair in match.group(1).split())
        unknown = set(params) - {"c", "alpha", "beta", "monotone"}
        if unknown:
            raise InputError(f"closed_form の未知のパラメータ: {', '.join(sorted(unknown))}")
        try:
            return ClosedFormPsi(
                c=Fraction(params.get("c", "1")),
                alpha=Fraction(params.get("alpha", "0")),
                beta=Fraction(params.get("beta", "0")),
                monotone_decreasing=params.get("monotone", "true").lower() == "true",
            )
        except ValueError as e:
            raise InputError(f"closed_form のパラメータを有理数として解析できません: {text}") from e
    match = _SPARSE.match(text)
    if match:
        body = match.group(1).strip()
        mapping = {}
        for entry in filter(None, (e.strip() for e in body.split(","))):
            try:
                key, value = entry.split(":", 1)
                mapping[int(key)] = Fraction(value.strip())
            except ValueError as e:
                raise InputError(f"sparse の要素を解析できません: {entry}") from e
        return SparsePsi.from_mapping(mapping)
    raise InputError(f"Ψ の形式が不正です: {text}")


def series_partial(f: "CardinalityProfile", psi: PsiSpec, N: int) -> Fraction:
    """
    Σ_{n≤N} f(n)Ψ(n) を厳密有理数で返す
    疎写像では台のキーだけを走査する（N は任意精度でよい）

    Args:
        f: 濃度プロファイル
        psi: 近似関数
        N: 上限（1以上）
    """
    if N < 1:
        raise InputError(f"N は1以上である必要があります: N={N}")
    if isinstance(psi, ZeroPsi):
        return Fraction(0)
    if isinstance(psi, SparsePsi):
        terms = [(f.value(k) * v) for k, v in psi.items() if k <= N]
    else:
        terms = [f.value(n) * psi.value(n) for n in range(psi.min_n, N + 1)]
    terms = [t for t in terms if t]
    return exact_sum([t.numerator for t in terms], [t.denominator for t in terms])


def series_trajectory(f: "CardinalityProfile", psi: PsiSpec, checkpoints: Iterable[int]) -> List[Tuple[int, Fraction]]:
    """
    チェックポイントごとの部分和の軌跡（発散の診断用、収束・発散は主張しない）
    """
    points = sorted(set(int(c) for c in checkpoints))
    trajectory = []
    total = Fraction(0)
    previous = 0
    for checkpoint in points:
        if isinstance(psi, SparsePsi):
            terms = [f.value(k) * v for k, v in psi.items() if previous < k <= checkpoint]
        elif isinstance(psi, ClosedFormPsi):
            terms = [f.value(n) * psi.value(n) for n in range(max(previous + 1, psi.min_n), checkpoint + 1)]
        else:
            terms = []
        terms = [t for t in terms if t]
        total += exact_sum([t.numerator for t in terms], [t.denominator for t in terms])
        trajectory.append((checkpoint, total))
        previous = checkpoint
    return trajectory


@dataclass(frozen=True)
class CatlinValue:
    """
    Ψ̄(n) の評価結果
    multiplier は最大を与える k（値が0なら None）、
    exact=False は有限の k で打ち切った下界であることを示す
    """
    value: Fraction
    multiplier: Optional[int]
    exact: bool


def catlin_transform(psi: PsiSpec, n: int, bound: Union[int, str] = "support") -> CatlinValue:
    """
    Ψ̄(n) = max_{k∈ℕ} Ψ(kn) を最大が達成される範囲で計算する

    Args:
        psi: 近似関数
        n: 正の整数
        bound: "support"（疎写像の台全体）または k の上限

    Returns:
        CatlinValue: 値・最大を与える k・厳密性のフラグ
    """
    if n < 1:
        raise DomainError(f"Ψ̄ は正の整数でのみ定義されます: n={n}")
    if bound != "support" and (not isinstance(bound, int) or bound < 1):
        raise InputError(f"bound は 'support' または正の整数である必要があります: {bound}")

    if isinstance(psi, ZeroPsi):
        return CatlinValue(Fraction(0), None, True)

    if isinstance(psi, SparsePsi):
        best_value, best_k = Fraction(0), None
        truncated = False
        for key, value in psi.items():
            if key % n:
                continue
            k = key // n
            if bound != "support" and k > bound:
                truncated = True
                continue
            if value > best_value or (value == best_value and best_k is not None and k < best_k):
                best_value, best_k = value, k
        return CatlinValue(best_value, best_k, not truncated)

    if psi.monotone_decreasing:
        if n < psi.min_n:
            # ln 1 = 0 のため k=1 は除外し、単調性から k=2 で最大
            return CatlinValue(psi.value(2 * n), 2, True)
        return CatlinValue(psi.value(n), 1, True)

    if bound == "support":
        raise InputError("単調でない閉形式の Ψ̄ には有限の bound が必要です")
    candidates = [(psi.value(k * n), k) for k in range(1, bound + 1) if k * n >= psi.min_n]
    best_value, best_k = max(candidates, key=lambda pair: (pair[0], -pair[1]))
    logger.debug(f"Catlin transform of non-monotone closed form truncated at k={bound}")
    return CatlinValue(best_value, best_k, False)


def catlin_support(psi: SparsePsi, sieve: Optional[SieveTable] = None) -> Dict[int, CatlinValue]:
    """
    Ψ̄(n) > 0 となる n（台のキーの約数）と Ψ̄(n) の対応表
    """
    sieve = sieve or shared_sieve(1 << 16)
    table: Dict[int, CatlinValue] = {}
    for key, value in psi.items():
        for d in sieve.divisors(key):
            k = key // d
            current = table.get(d)
            if current is None or value > current.value or (value == current.value and k < current.multiplier):
                table[d] = CatlinValue(value, k, True)
    return table


def catlin_series_partial(f: "CardinalityProfile", psi: PsiSpec, N: int,
                          sieve: Optional[SieveTable] = None) -> Fraction:
    """Σ_{n≤N} f(n)Ψ̄(n)（疎写像と単調な閉形式に対応）"""
    if isinstance(psi, SparsePsi):
        table = catlin_support(psi, sieve)
        terms = [f.value(d) * cv.value for d, cv in table.items() if d <= N]
        terms = [t for t in terms if t]
        return exact_sum([t.numerator for t in terms], [t.denominator for t in terms])
    if isinstance(psi, ClosedFormPsi) and not psi.monotone_decreasing:
        raise InputError("単調でない閉形式の Ψ̄ の級数は計算できません")
    return series_partial(f, psi, N)


@dataclass
class WitnessLiftReport:
    """Ψ̄ による近似の証人 (a, n) を Ψ の証人 (ka, kn) に持ち上げた結果"""
    points: int
    witnesses: int
    lifted: int
    failures: List[Tuple[Fraction, int, int]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def lift_witnesses(psi: SparsePsi, points: Iterable[Fraction],
                   sieve: Optional[SieveTable] = None) -> WitnessLiftReport:
    """
    各点 x について |x − a/n| < Ψ̄(n) となる (a, n) を列挙し、
    最大を与える k で |x − ka/(kn)| < Ψ(kn) が成り立つことを厳密に確認する

    Args:
        psi: 疎写像の Ψ
        points: [0,1] 内の有理数の点
    """
    table = catlin_support(psi, sieve)
    denominators = sorted(table)
    points = [Fraction(x) for x in points]
    witnesses = lifted = 0
    failures = []
    for x in points:
        for n in denominators:
            catlin = table[n]
            # |x − a/n| < Ψ̄(n) ≤ 1 の候補は xn の近傍の整数
            radius_cells = int(catlin.value * n) + 1
            center = int(x * n)
            for a in range(max(1, center - radius_cells), min(n, center + radius_cells + 1) + 1):
                if abs(x - Fraction(a, n)) >= catlin.value:
                    continue
                witnesses += 1
                k = catlin.multiplier
                if abs(x - Fraction(k * a, k * n)) < psi.value(k * n):
                    lifted += 1
                else:
                    failures.append((x, a, n))
    logger.debug(f"Witness lifting: {witnesses} witnesses, {lifted} lifted over {len(points)} points")
    return WitnessLiftReport(len(points), witnesses, lifted, failures)
