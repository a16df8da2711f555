"""
dlab/arith.py

数論の基本演算モジュール
オイラーのφ関数・メビウス関数の篩、Farey分数の区間内個数、
証明中で使われる古典的恒等式と厳密有理数の総和を提供
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import ceil, floor
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

import gmpy2
import mpmath
import numpy as np

from dlab.errors import InputError, InternalError, ResourceError

logger = logging.getLogger(__name__)

# e^γ（オイラー定数γの指数）: 20桁
E_GAMMA = 1.7810724179901979852

# loglog の定義域下限（これ未満の引数はクランプ）
LOGLOG_FLOOR = 16

# 篩のメモリ予算（core.pyから設定値が注入される）
SIEVE_LIMIT_MAX = 50_000_000

# 認証付き評価の作業精度（10進桁）
CERTIFIED_DPS = 50


@dataclass(frozen=True)
class RealBracket:
    """
    実数を囲む有理数の区間 [lower, upper]
    超越関数の値を厳密比較するための認証付き包含
    """
    lower: Fraction
    upper: Fraction

    @property
    def mid(self) -> Fraction:
        return (self.lower + self.upper) / 2

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def certainly_ge(self, other: "RealBracket") -> bool:
        """自身が other 以上であることが包含から保証されるか"""
        return self.lower >= other.upper

    def possibly_ge(self, other: "RealBracket", rel_tol: Fraction = Fraction(1, 10**12)) -> bool:
        """
        相対許容誤差の範囲で自身 ≥ other が否定されないか
        等号が成立する比較（両辺が同一の実数）を通すために使用
        """
        slack = rel_tol * max(abs(other.upper), abs(self.upper))
        return self.upper + slack >= other.lower

    def __mul__(self, other: "RealBracket") -> "RealBracket":
        # 正の量同士の積のみを扱う
        return RealBracket(self.lower * other.lower, self.upper * other.upper)

    def scale(self, factor: Fraction) -> "RealBracket":
        if factor >= 0:
            return RealBracket(self.lower * factor, self.upper * factor)
        return RealBracket(self.upper * factor, self.lower * factor)

    def reciprocal(self) -> "RealBracket":
        if self.lower <= 0:
            raise InputError("0 を含む包含の逆数は定義されません")
        return RealBracket(1 / self.upper, 1 / self.lower)

    def __add__(self, other: "RealBracket") -> "RealBracket":
        return RealBracket(self.lower + other.lower, self.upper + other.upper)


def bracket_from_mpf(value, rel_margin_digits: int = CERTIFIED_DPS - 8) -> RealBracket:
    """
    mpmathの高精度値を有理数の包含に変換する
    10進文字列化の丸めを含めて相対マージンで外側に広げる
    """
    center = Fraction(mpmath.nstr(value, CERTIFIED_DPS - 2, strip_zeros=False))
    margin = abs(center) / (10 ** rel_margin_digits)
    return RealBracket(center - margin, center + margin)


def exact_bracket(value: Fraction) -> RealBracket:
    return RealBracket(Fraction(value), Fraction(value))


@dataclass(frozen=True)
class SieveTable:
    """
    φ(n)、μ(n)、最小素因数の表（1..limit）
    構築後は読み取り専用で、並列ワーカー間で共有可能
    """
    limit: int
    phi: np.ndarray                    # int64、phi[0] は未使用
    mu: np.ndarray                     # int8、mu[0] は未使用
    smallest_prime_factor: np.ndarray  # int64、spf[0], spf[1] は 0/1
    primes: np.ndarray = field(repr=False)

    def totient(self, n: int) -> int:
        """
        φ(n) を返す（表の範囲外は素因数分解から計算）

        Args:
            n: 正の整数（任意精度）

        Returns:
            int: オイラーのφ関数の値
        """
        if n < 1:
            raise InputError(f"φ は正の整数でのみ定義されます: n={n}")
        if n <= self.limit:
            return int(self.phi[n])
        result = n
        for p in self.factorize(n):
            result -= result // p
        return result

    def mobius(self, n: int) -> int:
        if n <= self.limit:
            return int(self.mu[n])
        factors = self.factorize(n)
        if any(e > 1 for e in factors.values()):
            return 0
        return -1 if len(factors) % 2 else 1

    def factorize(self, n: int) -> Dict[int, int]:
        """
        素因数分解 {素数: 指数} を返す
        表の範囲内は最小素因数表、範囲外は篩の素数による試し割り

        Raises:
            ResourceError: 残余因子の素数判定が予算を超える場合
        """
        if n < 1:
            raise InputError(f"素因数分解は正の整数でのみ定義されます: n={n}")
        factors: Dict[int, int] = {}
        if n <= self.limit:
            while n > 1:
                p = int(self.smallest_prime_factor[n])
                while n % p == 0:
                    n //= p
                    factors[p] = factors.get(p, 0) + 1
            return factors

        for p in self.primes:
            p = int(p)
            if p * p > n:
                break
            while n % p == 0:
                n //= p
                factors[p] = factors.get(p, 0) + 1
            if n <= self.limit:
                for q, e in self.factorize(n).items():
                    factors[q] = factors.get(q, 0) + e
                return factors
        if n > 1:
            if n > self.limit * self.limit and not gmpy2.is_prime(n):
                raise ResourceError(
                    f"素因数分解の予算を超えました: 篩の上限 {self.limit} では {n} を分解できません"
                )
            factors[n] = factors.get(n, 0) + 1
        return factors

    def divisors(self, n: int) -> List[int]:
        """n の正の約数を昇順で返す"""
        divs = [1]
        for p, e in self.factorize(n).items():
            divs = [d * p**k for d in divs for k in range(e + 1)]
        return sorted(divs)

    def squarefree_divisors(self, n: int) -> List[Tuple[int, int]]:
        """(d, μ(d)) の組を n の無平方約数 d について返す"""
        pairs = [(1, 1)]
        for p in self.factorize(n):
            pairs += [(d * p, -s) for d, s in pairs]
        return pairs


def _smallest_prime_factors(limit: int) -> np.ndarray:
    """
    線形篩: 合成数 n = p·i（p = spf(n)、spf(i) ≥ p）を一度だけ書き込む
    素数 p の段では、段の開始時点で未記入か spf = p の i ∈ [p, N/p] が spf(i) ≥ p を満たす
    """
    spf = np.zeros(limit + 1, dtype=np.int64)
    p = 2
    while p * p <= limit:
        spf[p] = p
        window = spf[p:limit // p + 1]
        cofactors = np.flatnonzero((window == 0) | (window == p)) + p
        spf[p * cofactors] = p
        p += 1
        while spf[p] != 0:
            p += 1
    index = np.arange(limit + 1, dtype=np.int64)
    unmarked = spf == 0
    spf[unmarked] = index[unmarked]
    spf[0] = 0
    return spf


def build_sieve(limit: int, max_limit: Optional[int] = None) -> SieveTable:
    """
    φ・μ・最小素因数の篩を線形時間で構築する
    φ と μ は n = p·m（p = spf(n)）の漸化式で [L, 2L) ごとにベクトル化して埋める

    Args:
        limit: 篩の上限 N_max（1以上）
        max_limit: メモリ予算としての上限（省略時は SIEVE_LIMIT_MAX）

    Returns:
        SieveTable: 不変条件を満たす篩表

    Raises:
        InputError: limit < 1 の場合
        ResourceError: limit が予算を超える場合
    """
    if limit < 1:
        raise InputError(f"篩の上限は1以上である必要があります: limit={limit}")
    max_limit = max_limit or SIEVE_LIMIT_MAX
    if limit > max_limit:
        raise ResourceError(f"篩の上限 {limit} がメモリ予算 {max_limit} を超えています")

    spf = _smallest_prime_factors(limit)
    index = np.arange(limit + 1, dtype=np.int64)
    primes = np.nonzero((spf == index) & (index >= 2))[0].astype(np.int64)

    phi = np.zeros(limit + 1, dtype=np.int64)
    mu = np.zeros(limit + 1, dtype=np.int8)
    phi[1], mu[1] = 1, 1
    lo = 2
    while lo <= limit:
        # m = n/p ≤ n/2 < lo は計算済み
        hi = min(2 * lo - 1, limit)
        p = spf[lo:hi + 1]
        m = index[lo:hi + 1] // p
        repeated = spf[m] == p
        phi[lo:hi + 1] = np.where(repeated, phi[m] * p, phi[m] * (p - 1))
        mu[lo:hi + 1] = np.where(repeated, 0, -mu[m].astype(np.int64))
        lo = hi + 1

    for array in (phi, mu, spf, primes):
        array.setflags(write=False)
    logger.debug(f"Sieve built up to {limit} ({len(primes)} primes)")
    return SieveTable(limit=limit, phi=phi, mu=mu, smallest_prime_factor=spf, primes=primes)


@lru_cache(maxsize=4)
def _cached_sieve(size: int) -> SieveTable:
    return build_sieve(size)


def set_sieve_budget(max_limit: int) -> None:
    """篩のメモリ予算を設定する（core.pyから呼び出される）"""
    global SIEVE_LIMIT_MAX
    SIEVE_LIMIT_MAX = max_limit
    _cached_sieve.cache_clear()


def shared_sieve(limit: int) -> SieveTable:
    """
    プロセス内で共有する篩表を返す
    2の冪に切り上げてキャッシュし、再構築を避ける
    """
    if limit > SIEVE_LIMIT_MAX:
        raise ResourceError(f"篩の上限 {limit} がメモリ予算 {SIEVE_LIMIT_MAX} を超えています")
    size = 1 << max(10, (max(limit, 1) - 1).bit_length())
    return _cached_sieve(size if size <= SIEVE_LIMIT_MAX else limit)


def _endpoints(interval) -> Tuple[Fraction, Fraction]:
    if isinstance(interval, tuple):
        lo, hi = interval
    else:
        lo, hi = interval.lo, interval.hi
    lo, hi = Fraction(lo), Fraction(hi)
    if not (0 <= lo <= hi <= 1):
        raise InputError(f"区間は [0,1] の部分区間である必要があります: [{lo}, {hi}]")
    return lo, hi


def grid_count(d: int, lo: Fraction, hi: Fraction) -> int:
    """θ_I(d) = #{a ∈ [d] : a/d ∈ [lo, hi]}"""
    first = max(1, ceil(lo * d))
    last = min(d, floor(hi * d))
    return max(0, last - first + 1)


def farey_count(n: int, interval, sieve: Optional[SieveTable] = None) -> int:
    """
    #(Q_n ∩ I) を厳密に数える
    θ_I(d) = Σ_{e|d} #(Q_e ∩ I) のメビウス反転による

    Args:
        n: 分母（1以上）
        interval: 有理端点の閉区間（lo, hi を持つオブジェクトまたはタプル）
        sieve: 素因数分解に使う篩（省略時は共有篩）

    Returns:
        int: 既約分数 a/n（a ∈ [n]）で I に含まれるものの個数
    """
    if n < 1:
        raise InputError(f"分母は1以上である必要があります: n={n}")
    lo, hi = _endpoints(interval)
    sieve = sieve or shared_sieve(min(max(n, 2), 1 << 20))
    return sum(mu * grid_count(n // e, lo, hi) for e, mu in sieve.squarefree_divisors(n))


@dataclass
class NiederreiterReport:
    """区間 I に対する下界 #(Q_n ∩ I) ≥ c·φ(n)·λ(I) の検証結果"""
    interval: Tuple[Fraction, Fraction]
    factor: Fraction
    n_max: int
    n0: int
    failures: List[int]


def niederreiter_threshold(interval, n_max: int, factor: Fraction = Fraction(1, 2),
                           sieve: Optional[SieveTable] = None) -> NiederreiterReport:
    """
    n ∈ [n0, n_max] の全てで下界が成り立つ最小の n0 を求める

    Args:
        interval: 検証対象の区間
        n_max: 検証範囲の上限
        factor: 下界の係数（既定 1/2）
    """
    lo, hi = _endpoints(interval)
    length = hi - lo
    sieve = sieve or shared_sieve(n_max)
    failures = []
    for n in range(1, n_max + 1):
        count = farey_count(n, (lo, hi), sieve)
        if count < factor * sieve.totient(n) * length:
            failures.append(n)
    n0 = failures[-1] + 1 if failures else 1
    logger.debug(f"Niederreiter threshold for [{lo}, {hi}] up to {n_max}: n0={n0}")
    return NiederreiterReport((lo, hi), factor, n_max, n0, failures)


def _pairwise_sum(terms: List) -> "gmpy2.mpq":
    # 二分割で足し合わせ、分母の成長を均等にする
    if not terms:
        return gmpy2.mpq(0)
    while len(terms) > 1:
        paired = [terms[i] + terms[i + 1] for i in range(0, len(terms) - 1, 2)]
        if len(terms) % 2:
            paired.append(terms[-1])
        terms = paired
    return terms[0]


def mpq_to_fraction(value) -> Fraction:
    """gmpy2.mpq を Fraction に変換する（mpq は既約なので gcd を再計算しない）"""
    numerator, denominator = int(value.numerator), int(value.denominator)
    from_coprime = getattr(Fraction, "_from_coprime_ints", None)
    if from_coprime is not None:
        return from_coprime(numerator, denominator)
    return Fraction(numerator, denominator)


def exact_sum(numerators: Iterable[int], denominators: Iterable[int]) -> Fraction:
    """
    Σ numerators[i] / denominators[i] を厳密に計算する
    同じ分母の項をまとめてから、相異なる分母を二分割で足し合わせる

    Args:
        numerators: 分子の列（整数）
        denominators: 分母の列（正の整数）

    Returns:
        Fraction: 厳密な総和
    """
    grouped: Dict[int, int] = {}
    if isinstance(numerators, np.ndarray) and isinstance(denominators, np.ndarray) and len(numerators):
        order = np.argsort(denominators, kind="stable")
        dens = denominators[order]
        starts = np.flatnonzero(np.r_[True, dens[1:] != dens[:-1]])
        nums = numerators[order]
        bound = int(np.abs(nums).max()) * len(nums)
        if nums.dtype != object and bound < 2**62:
            sums = np.add.reduceat(nums.astype(np.int64), starts)
            grouped = {int(d): int(s) for d, s in zip(dens[starts], sums)}
        else:
            for d, s in zip(dens[starts], np.split(nums, starts[1:])):
                grouped[int(d)] = sum(int(v) for v in s)
    else:
        for num, den in zip(numerators, denominators):
            den = int(den)
            grouped[den] = grouped.get(den, 0) + int(num)
    terms = [gmpy2.mpq(num, den) for den, num in sorted(grouped.items()) if num]
    return mpq_to_fraction(_pairwise_sum(terms))


def totient_sum(N: int, sieve: Optional[SieveTable] = None) -> int:
    """Σ_{n≤N} φ(n) を厳密整数で返す"""
    if N < 1:
        raise InputError(f"N は1以上である必要があります: N={N}")
    sieve = sieve or shared_sieve(N)
    return int(np.sum(sieve.phi[1:N + 1], dtype=np.int64))


def totient_mean_ratio(N: int, sieve: Optional[SieveTable] = None) -> Fraction:
    """(Σ_{n≤N} φ(n)) / N²（平均位数 3/π² への収束を観察する）"""
    return Fraction(totient_sum(N, sieve), N * N)


def totient_ratio_sum(N: int, sieve: Optional[SieveTable] = None) -> Fraction:
    """
    Σ_{n≤N} n/φ(n) を厳密有理数で返す
    恒等式 n/φ(n) = Σ_{d|n} μ(d)²/φ(d) から
    Σ_{d≤N} μ(d)² ⌊N/d⌋ / φ(d) として φ の値ごとにまとめて計算する

    Args:
        N: 上限（1以上）

    Returns:
        Fraction: 厳密な部分和
    """
    if N < 1:
        raise InputError(f"N は1以上である必要があります: N={N}")
    sieve = sieve or shared_sieve(N)
    d = np.arange(1, N + 1, dtype=np.int64)
    squarefree = sieve.mu[1:N + 1] != 0
    d = d[squarefree]
    weights = N // d
    values = sieve.phi[1:N + 1][squarefree]
    return exact_sum(weights, values)


def loglog(n) -> float:
    """ln(ln(max(n, 16)))（浮動小数点、ベクトル化対応）"""
    if isinstance(n, np.ndarray):
        return np.log(np.log(np.maximum(n.astype(np.float64), LOGLOG_FLOOR)))
    return float(mpmath.log(mpmath.log(max(n, LOGLOG_FLOOR))))


def loglog_bracket(n: int) -> RealBracket:
    """ln(ln(max(n, 16))) の認証付き包含（任意精度の整数に対応）"""
    with mpmath.workdps(CERTIFIED_DPS):
        value = mpmath.log(mpmath.log(mpmath.mpf(max(n, LOGLOG_FLOOR))))
    return bracket_from_mpf(value)


def log_factorial_bracket(m: int) -> RealBracket:
    """ln(m!) = Σ_{i≤m} ln i の認証付き包含（m! を展開しない）"""
    with mpmath.workdps(CERTIFIED_DPS):
        value = mpmath.fsum(mpmath.log(i) for i in range(2, m + 1))
    if m <= 1:
        return exact_bracket(Fraction(0))
    return bracket_from_mpf(value)


def loglog_factorial_bracket(m: int) -> RealBracket:
    """ln(ln(max(m!, 16))) の認証付き包含"""
    if m <= 3:
        return loglog_bracket(LOGLOG_FLOOR)
    with mpmath.workdps(CERTIFIED_DPS):
        value = mpmath.log(mpmath.fsum(mpmath.log(i) for i in range(2, m + 1)))
    return bracket_from_mpf(value)


@dataclass
class ExtremalWitness:
    """φ(n) < n/(e^γ loglog n) を満たす n とその素因数分解"""
    n: int
    phi: int
    factorization: Dict[int, int]

    @property
    def squarefree(self) -> bool:
        return all(e == 1 for e in self.factorization.values())

    @property
    def is_primorial(self) -> bool:
        primes = sorted(self.factorization)
        return self.squarefree and primes == [int(p) for p in _first_primes(len(primes))]


def _first_primes(count: int) -> List[int]:
    primes: List[int] = []
    candidate = 2
    while len(primes) < count:
        if all(candidate % p for p in primes if p * p <= candidate):
            primes.append(candidate)
        candidate += 1
    return primes


def phi_extremal_witness(search_limit: int, sieve: Optional[SieveTable] = None,
                         margin: float = 1e-9) -> List[ExtremalWitness]:
    """
    φ(n) < n/(e^γ loglog n) を満たす n を探索する
    素数階乗（primorial）を先に試し、続いて篩で全探索する

    Args:
        search_limit: 探索上限（16未満では空リスト）
        margin: 浮動小数点比較の相対マージン

    Returns:
        List[ExtremalWitness]: 素数階乗が先頭、残りは昇順
    """
    if search_limit < LOGLOG_FLOOR:
        return []
    sieve = sieve or shared_sieve(search_limit)

    def satisfies(values: np.ndarray, phis: np.ndarray) -> np.ndarray:
        bound = values / (E_GAMMA * np.log(np.log(values.astype(np.float64))))
        return phis < bound * (1.0 - margin)

    witnesses: List[ExtremalWitness] = []
    seen = set()
    primorial = 1
    for p in _first_primes(16):
        primorial *= p
        if primorial > search_limit:
            break
        if primorial >= LOGLOG_FLOOR and satisfies(np.array([primorial]), np.array([sieve.totient(primorial)]))[0]:
            witnesses.append(ExtremalWitness(primorial, sieve.totient(primorial), sieve.factorize(primorial)))
            seen.add(primorial)

    n = np.arange(LOGLOG_FLOOR, search_limit + 1, dtype=np.int64)
    hits = n[satisfies(n, sieve.phi[LOGLOG_FLOOR:search_limit + 1])]
    for value in hits:
        value = int(value)
        if value not in seen:
            witnesses.append(ExtremalWitness(value, sieve.totient(value), sieve.factorize(value)))
    logger.debug(f"Found {len(witnesses)} extremal witnesses up to {search_limit}")
    return witnesses


def divisor_sum_identity_holds(n_max: int, sieve: Optional[SieveTable] = None) -> bool:
    """Σ_{d|n} φ(d) = n を n ≤ n_max の全てで厳密に検証する"""
    sieve = sieve or shared_sieve(n_max)
    totals = np.zeros(n_max + 1, dtype=np.int64)
    for d in range(1, n_max + 1):
        totals[d::d] += sieve.phi[d]
    return bool(np.array_equal(totals[1:], np.arange(1, n_max + 1)))


def harmonic_number(m: int) -> Fraction:
    """H_m = Σ_{i≤m} 1/i（厳密）"""
    if m <= 0:
        return Fraction(0)
    return exact_sum([1] * m, list(range(1, m + 1)))


def farey_sequence(Q: int) -> Iterator[Tuple[int, int]]:
    """位数 Q のファレイ数列 0/1, 1/Q, …, 1/1 を (a, b) の組で昇順に返す"""
    if Q < 1:
        raise InputError(f"ファレイ数列の位数は1以上である必要があります: Q={Q}")
    a, b, c, d = 0, 1, 1, Q
    yield a, b
    while c <= Q:
        k = (Q + b) // d
        a, b, c, d = c, d, k * c - a, k * d - b
        yield a, b


def farey_min_gap(Q: int) -> Fraction:
    """分母 Q 以下の相異なる既約分数の間隔の最小値（≥ 1/Q² のはず）"""
    previous = None
    gap = None
    for a, b in farey_sequence(Q):
        if previous is not None:
            pa, pb = previous
            if a * pb - pa * b != 1:
                raise InternalError(f"隣接項の行列式が1ではありません: {pa}/{pb}, {a}/{b}")
            step = Fraction(1, b * pb)
            gap = step if gap is None else min(gap, step)
        previous = (a, b)
    return gap if gap is not None else Fraction(1)
