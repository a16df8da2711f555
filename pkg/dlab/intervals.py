"""
dlab/intervals.py

[0,1] 内の有理端点区間の有限和に対する厳密測度エンジン
小規模な集合は Fraction による IntervalSet、大量の球の和集合は
numpy 配列上の BallUnion（厳密モード／二進格子による認証モード）で扱う
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor, gcd
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from dlab.arith import exact_sum
from dlab.errors import InputError, ResourceError

logger = logging.getLogger(__name__)

# 厳密モードで扱う球の個数の上限（core.pyから設定値が注入される）
EXACT_COMPONENT_LIMIT = 10_000_000

# 認証モードの二進格子の分解能（2^-bits）
DYADIC_RESOLUTION_BITS = 48

# 浮動小数点による判定を厳密比較に回す閾値
_FLOAT_TOL = 1e-12

# int64 で端点の分子・分母を保持できる上限
_INT64_SAFE = 2**62

MODE_EXACT = "exact"
MODE_CERTIFIED = "certified"
MODES = (MODE_EXACT, MODE_CERTIFIED)


def configure(exact_component_limit: Optional[int] = None, resolution_bits: Optional[int] = None) -> None:
    """測度エンジンの予算を設定する（core.pyから呼び出される）"""
    global EXACT_COMPONENT_LIMIT, DYADIC_RESOLUTION_BITS
    if exact_component_limit is not None:
        EXACT_COMPONENT_LIMIT = exact_component_limit
    if resolution_bits is not None:
        if not 8 <= resolution_bits <= 52:
            raise InputError(f"二進格子の分解能は 8〜52 ビットで指定してください: {resolution_bits}")
        DYADIC_RESOLUTION_BITS = resolution_bits


@dataclass(frozen=True)
class RationalInterval:
    """
    有理端点の閉区間 [lo, hi] ⊆ [0,1]
    実験の検査区間 I として使用
    """
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        if not (0 <= self.lo <= self.hi <= 1):
            raise InputError(f"区間は [0,1] の部分区間である必要があります: [{self.lo}, {self.hi}]")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def numerator_range(self, n: int) -> Tuple[int, int]:
        """a/n ∈ [lo, hi] となる a ∈ [n] の範囲（空なら first > last）"""
        return max(1, ceil(self.lo * n)), min(n, floor(self.hi * n))

    @classmethod
    def parse(cls, text: str) -> "RationalInterval":
        """'1/3,2/3' または '[1/3, 2/3]' 形式を解析"""
        body = str(text).strip().strip("[]()")
        parts = [p.strip() for p in body.split(",")]
        if len(parts) != 2:
            raise InputError(f"区間の形式が不正です: {text}")
        try:
            return cls(Fraction(parts[0]), Fraction(parts[1]))
        except ValueError as e:
            raise InputError(f"区間の端点を有理数として解析できません: {text}") from e

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


UNIT_INTERVAL = RationalInterval(Fraction(0), Fraction(1))


@dataclass(frozen=True)
class MeasureBracket:
    """
    測度の認証付き包含 [lower, upper]
    厳密値の場合は lower == upper かつ exact=True
    """
    lower: Fraction
    upper: Fraction
    exact: bool

    @classmethod
    def of(cls, value: Fraction) -> "MeasureBracket":
        return cls(Fraction(value), Fraction(value), True)

    @property
    def value(self) -> Fraction:
        """厳密値（認証モードでは中点）"""
        return self.lower if self.exact else (self.lower + self.upper) / 2

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def scale(self, factor: Fraction) -> "MeasureBracket":
        return MeasureBracket(self.lower * factor, self.upper * factor, self.exact)

    def clamp(self, lo: Fraction = Fraction(0), hi: Fraction = Fraction(1)) -> "MeasureBracket":
        return MeasureBracket(min(max(self.lower, lo), hi), min(max(self.upper, lo), hi), self.exact)

    def encloses(self, value: Fraction) -> bool:
        return self.lower <= value <= self.upper

    def __str__(self) -> str:
        if self.exact:
            return str(self.lower)
        return f"[{float(self.lower):.12g}, {float(self.upper):.12g}]"


def _normalize(components: Iterable[Tuple[Fraction, Fraction]]) -> Tuple[Tuple[Fraction, Fraction], ...]:
    # [0,1] に切り詰め、空区間を除き、重なり・接触する区間を併合
    clipped = []
    for lo, hi in components:
        lo, hi = max(Fraction(lo), Fraction(0)), min(Fraction(hi), Fraction(1))
        if lo < hi:
            clipped.append((lo, hi))
    clipped.sort()
    merged: List[Tuple[Fraction, Fraction]] = []
    for lo, hi in clipped:
        if merged and lo <= merged[-1][1]:
            if hi > merged[-1][1]:
                merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return tuple(merged)


class IntervalSet:
    """
    [0,1] 内の開区間の有限和（正規化済み）
    成分は lo の昇順、互いに素で接触もしない
    測度は一度だけ厳密に計算してキャッシュする
    """

    __slots__ = ("_components", "_measure")

    def __init__(self, components: Iterable[Tuple[Fraction, Fraction]] = (), _normalized: bool = False):
        self._components = tuple(components) if _normalized else _normalize(components)
        self._measure: Optional[Fraction] = None

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls((), _normalized=True)

    @classmethod
    def unit(cls) -> "IntervalSet":
        return cls(((Fraction(0), Fraction(1)),), _normalized=True)

    @classmethod
    def from_interval(cls, interval: RationalInterval) -> "IntervalSet":
        return cls([(interval.lo, interval.hi)])

    @property
    def components(self) -> Tuple[Tuple[Fraction, Fraction], ...]:
        return self._components

    @property
    def measure(self) -> Fraction:
        if self._measure is None:
            his = [hi for _, hi in self._components]
            los = [lo for lo, _ in self._components]
            self._measure = exact_sum(
                [f.numerator for f in his] + [-f.numerator for f in los],
                [f.denominator for f in his] + [f.denominator for f in los],
            )
        return self._measure

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self._components + other._components)

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        result = []
        i = j = 0
        a, b = self._components, other._components
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo < hi:
                result.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(result, _normalized=True)

    def contains(self, other: "IntervalSet") -> bool:
        """other ⊆ self（成分単位の厳密判定）"""
        j = 0
        for lo, hi in other._components:
            while j < len(self._components) and self._components[j][1] < hi:
                j += 1
            if j == len(self._components):
                return False
            if not (self._components[j][0] <= lo and hi <= self._components[j][1]):
                return False
        return True

    def covers(self, x: Fraction) -> bool:
        """点 x が開区間成分のいずれかに含まれるか"""
        x = Fraction(x)
        return any(lo < x < hi for lo, hi in self._components)

    def __iter__(self) -> Iterator[Tuple[Fraction, Fraction]]:
        return iter(self._components)

    def __len__(self) -> int:
        return len(self._components)

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalSet) and self._components == other._components

    def __hash__(self) -> int:
        return hash(self._components)

    def __repr__(self) -> str:
        shown = ", ".join(f"({lo}, {hi})" for lo, hi in self._components[:4])
        more = f", ... (+{len(self) - 4})" if len(self) > 4 else ""
        return f"IntervalSet({shown}{more})"


def measure(S: IntervalSet) -> Fraction:
    return S.measure


def union(S1: IntervalSet, S2: IntervalSet) -> IntervalSet:
    return S1.union(S2)


def intersect(S1: IntervalSet, S2: IntervalSet) -> IntervalSet:
    return S1.intersect(S2)


def contains(S1: IntervalSet, S2: IntervalSet) -> bool:
    """S2 ⊆ S1 を判定する"""
    return S1.contains(S2)


def thicken(centers: Iterable[Fraction], radius: Fraction) -> IntervalSet:
    """
    中心の集合を半径 radius で太らせた開球の和集合を返す

    Args:
        centers: [0,1] 内の有理数の中心
        radius: 非負の有理数

    Returns:
        IntervalSet: ∪ (c − radius, c + radius) ∩ [0,1]
    """
    radius = Fraction(radius)
    if radius < 0:
        raise InputError(f"半径は非負である必要があります: {radius}")
    points = sorted(Fraction(c) for c in centers)
    if points and not (0 <= points[0] and points[-1] <= 1):
        raise InputError("中心はすべて [0,1] 内である必要があります")
    if radius == 0:
        return IntervalSet.empty()
    # 共通半径なので中心の順序がそのまま端点の順序
    return IntervalSet((c - radius, c + radius) for c in points)


def full_residue_measure(n: int, radius: Fraction) -> Fraction:
    """
    λ(∪_{a∈[n]} B(a/n, radius) ∩ [0,1]) の閉形式
    K_j = M_j! のように列挙できない分母でも評価可能

    Args:
        n: 分母（1以上、任意精度）
        radius: 非負の有理数

    Returns:
        Fraction: 2rn − r（2r < 1/n）、それ以外は min(1, 1 − 1/n + r)
    """
    if n < 1:
        raise InputError(f"分母は1以上である必要があります: n={n}")
    radius = Fraction(radius)
    if radius < 0:
        raise InputError(f"半径は非負である必要があります: {radius}")
    if radius == 0:
        return Fraction(0)
    if 2 * radius * n < 1:
        return 2 * radius * n - radius
    return min(Fraction(1), 1 - Fraction(1, n) + radius)


def _as_window(window) -> Tuple[Fraction, Fraction]:
    if window is None:
        return Fraction(0), Fraction(1)
    if isinstance(window, RationalInterval):
        return window.lo, window.hi
    lo, hi = window
    return Fraction(lo), Fraction(hi)


class BallUnion:
    """
    開球 B(a_i/n_i, r_i) の和集合を numpy 配列で保持する
    端点 (a q ∓ p n)/(n q) の分子と分母を整数配列で持ち、
    浮動小数点で並べ替えてから曖昧な箇所だけを厳密比較する
    """

    def __init__(self, left_num: np.ndarray, right_num: np.ndarray, den: np.ndarray):
        self._left_num = left_num
        self._right_num = right_num
        self._den = den
        if den.dtype == object:
            self._left = np.array([int(a) / int(d) for a, d in zip(left_num, den)], dtype=np.float64)
            self._right = np.array([int(a) / int(d) for a, d in zip(right_num, den)], dtype=np.float64)
        else:
            self._left = left_num / den
            self._right = right_num / den
        self._exact: Optional[Tuple[np.ndarray, np.ndarray]] = None
        self._grid = {}

    @classmethod
    def empty(cls) -> "BallUnion":
        zero = np.zeros(0, dtype=np.int64)
        return cls(zero, zero, np.ones(0, dtype=np.int64))

    @classmethod
    def from_layer(cls, n: int, numerators: Sequence[int], radius: Fraction) -> "BallUnion":
        return cls.from_layers([(n, numerators, radius)])

    @classmethod
    def from_layers(cls, layers: Iterable[Tuple[int, Sequence[int], Fraction]]) -> "BallUnion":
        """
        (n, 分子の配列, 半径) の層から和集合を構築する
        半径 1 以上は [0,1] 全体を覆うので 1 に切り詰める
        """
        lefts, rights, dens = [], [], []
        wide = False
        for n, numerators, radius in layers:
            radius = min(Fraction(radius), Fraction(1))
            if radius <= 0 or len(numerators) == 0:
                continue
            p, q = radius.numerator, radius.denominator
            den = n * q
            if 2 * den >= _INT64_SAFE:
                wide = True
            if wide:
                a = np.array([int(x) for x in numerators], dtype=object)
            else:
                a = np.asarray(numerators, dtype=np.int64)
            lefts.append(a * q - p * n)
            rights.append(a * q + p * n)
            dens.append(np.full(len(a), den, dtype=object if wide else np.int64))
        if not lefts:
            return cls.empty()
        dtype = object if wide else np.int64
        left_num = np.concatenate([x.astype(dtype) for x in lefts])
        right_num = np.concatenate([x.astype(dtype) for x in rights])
        den = np.concatenate([x.astype(dtype) for x in dens])
        if not wide:
            left_num, right_num, den = _deduplicate(left_num, right_num, den)
        return cls(left_num, right_num, den)

    def __len__(self) -> int:
        return len(self._den)

    def _compare(self, num1: int, den1: int, num2: int, den2: int) -> int:
        lhs, rhs = int(num1) * int(den2), int(num2) * int(den1)
        return (lhs > rhs) - (lhs < rhs)

    def _left_fraction(self, i: int) -> Fraction:
        return Fraction(int(self._left_num[i]), int(self._den[i]))

    def _right_fraction(self, i: int) -> Fraction:
        return Fraction(int(self._right_num[i]), int(self._den[i]))

    def _exact_order(self) -> np.ndarray:
        # 浮動小数点で並べ、ほぼ同値の連続部分だけ厳密な値で並べ直す
        order = np.argsort(self._left, kind="stable")
        if len(order) < 2:
            return order
        near = np.diff(self._left[order]) <= _FLOAT_TOL
        if not near.any():
            return order
        edges = np.diff(np.r_[0, near.astype(np.int8), 0])
        for start, stop in zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)):
            run = order[start:stop + 1]
            order[start:stop + 1] = sorted(run, key=lambda i: self._left_fraction(int(i)))
        return order

    def _exact_max_right(self, order: np.ndarray, right: np.ndarray, run_max: np.ndarray,
                         first: int, last: int) -> int:
        """並べ替え位置 first..last の右端の厳密な最大を持つ球の添字"""
        threshold = run_max[last] - _FLOAT_TOL
        lo = max(first, int(np.searchsorted(run_max, threshold, side="left")))
        candidates = lo + np.flatnonzero(right[lo:last + 1] >= threshold)
        best = int(order[candidates[0]])
        for pos in candidates[1:]:
            k = int(order[pos])
            if self._compare(self._right_num[k], self._den[k], self._right_num[best], self._den[best]) > 0:
                best = k
        return best

    def _exact_components(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        成分ごとに (左端を与える球, 右端を与える球) の添字配列を返す
        境界の判定は浮動小数点で明確な箇所以外すべて厳密比較
        """
        if self._exact is not None:
            return self._exact
        if len(self) > EXACT_COMPONENT_LIMIT:
            raise ResourceError(
                f"球の個数 {len(self)} が厳密モードの上限 {EXACT_COMPONENT_LIMIT} を超えています。"
                f"--mode certified を指定してください"
            )
        if len(self) == 0:
            self._exact = (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
            return self._exact

        order = self._exact_order()
        left = self._left[order]
        right = self._right[order]
        run_max = np.maximum.accumulate(right)
        gap = left[1:] - run_max[:-1]
        boundary = gap > _FLOAT_TOL
        for i in np.flatnonzero(np.abs(gap) <= _FLOAT_TOL):
            j = self._exact_max_right(order, right, run_max, 0, int(i))
            k = int(order[i + 1])
            boundary[i] = self._compare(self._left_num[k], self._den[k], self._right_num[j], self._den[j]) > 0

        starts = np.r_[0, np.flatnonzero(boundary) + 1]
        lasts = np.r_[starts[1:] - 1, len(order) - 1]
        start_balls = order[starts]
        end_balls = np.array(
            [self._exact_max_right(order, right, run_max, int(s), int(e)) for s, e in zip(starts, lasts)],
            dtype=np.int64,
        )
        self._exact = (start_balls, end_balls)
        logger.debug(f"Exact merge: {len(self)} balls -> {len(starts)} components")
        return self._exact

    def _exact_measure(self, window) -> Fraction:
        lo, hi = _as_window(window)
        if lo >= hi or len(self) == 0:
            return Fraction(0)
        start_balls, end_balls = self._exact_components()
        starts_f = self._left[start_balls]
        ends_f = self._right[end_balls]
        # 窓と交わる可能性のある成分の範囲（浮動小数点で余裕を持たせる）
        first = int(np.searchsorted(ends_f, float(lo) - _FLOAT_TOL, side="left"))
        last = int(np.searchsorted(starts_f, float(hi) + _FLOAT_TOL, side="right")) - 1
        while first <= last and self._right_fraction(int(end_balls[first])) <= lo:
            first += 1
        while last >= first and self._left_fraction(int(start_balls[last])) >= hi:
            last -= 1
        if first > last:
            return Fraction(0)

        total = Fraction(0)
        head_start = max(self._left_fraction(int(start_balls[first])), lo)
        head_end = min(self._right_fraction(int(end_balls[first])), hi)
        total += head_end - head_start
        if last > first:
            tail_start = self._left_fraction(int(start_balls[last]))
            tail_end = min(self._right_fraction(int(end_balls[last])), hi)
            total += tail_end - tail_start
        if last > first + 1:
            inner_s = start_balls[first + 1:last]
            inner_e = end_balls[first + 1:last]
            numerators = np.concatenate([self._right_num[inner_e], -self._left_num[inner_s]])
            denominators = np.concatenate([self._den[inner_e], self._den[inner_s]])
            total += exact_sum(numerators, denominators)
        return total

    def _grid_components(self, outward: bool) -> Tuple[np.ndarray, np.ndarray]:
        key = (outward, DYADIC_RESOLUTION_BITS)
        if key in self._grid:
            return self._grid[key]
        scale = float(2 ** DYADIC_RESOLUTION_BITS)
        # 浮動小数点誤差は 1 格子幅未満なので ±1 の余裕で包含が保証される
        if outward:
            lg = np.floor(self._left * scale).astype(np.int64) - 1
            rg = np.ceil(self._right * scale).astype(np.int64) + 1
        else:
            lg = np.ceil(self._left * scale).astype(np.int64) + 1
            rg = np.floor(self._right * scale).astype(np.int64) - 1
        keep = lg < rg
        lg, rg = lg[keep], rg[keep]
        if len(lg) == 0:
            result = (lg, rg)
        else:
            order = np.argsort(lg, kind="stable")
            lg, rg = lg[order], rg[order]
            run_max = np.maximum.accumulate(rg)
            boundary = lg[1:] > run_max[:-1]
            starts = np.r_[0, np.flatnonzero(boundary) + 1]
            lasts = np.r_[starts[1:] - 1, len(lg) - 1]
            result = (lg[starts], run_max[lasts])
        self._grid[key] = result
        return result

    def _grid_measure(self, window, outward: bool) -> Fraction:
        lo, hi = _as_window(window)
        unit = 2 ** DYADIC_RESOLUTION_BITS
        if outward:
            lo_g, hi_g = floor(lo * unit), ceil(hi * unit)
        else:
            lo_g, hi_g = ceil(lo * unit), floor(hi * unit)
        starts, ends = self._grid_components(outward)
        if hi_g <= lo_g or len(starts) == 0:
            return Fraction(0)
        clipped = np.minimum(ends, hi_g) - np.maximum(starts, lo_g)
        covered = int(np.clip(clipped, 0, None).sum(dtype=np.int64))
        return Fraction(covered, unit)

    def measure(self, window=None, mode: str = MODE_EXACT) -> MeasureBracket:
        """
        λ(和集合 ∩ window) を返す

        Args:
            window: RationalInterval または (lo, hi)（省略時は [0,1]）
            mode: "exact"（厳密値）または "certified"（二進格子による包含）

        Returns:
            MeasureBracket: 厳密値または認証付き包含

        Raises:
            ResourceError: 厳密モードで球の個数が上限を超える場合
        """
        if mode == MODE_EXACT:
            return MeasureBracket.of(self._exact_measure(window))
        if mode == MODE_CERTIFIED:
            lo, hi = _as_window(window)
            length = max(hi - lo, Fraction(0))
            lower = max(self._grid_measure(window, outward=False), Fraction(0))
            upper = min(self._grid_measure(window, outward=True), length)
            return MeasureBracket(lower, upper, False)
        raise InputError(f"不明な測度モードです: {mode}（{' / '.join(MODES)}）")

    def to_interval_set(self) -> IntervalSet:
        """厳密な成分を Fraction の IntervalSet に変換する"""
        start_balls, end_balls = self._exact_components()
        return IntervalSet(
            (self._left_fraction(int(s)), self._right_fraction(int(e)))
            for s, e in zip(start_balls, end_balls)
        )

    def component_count(self) -> int:
        return len(self._exact_components()[0])


def _deduplicate(left_num: np.ndarray, right_num: np.ndarray, den: np.ndarray):
    # 端点を既約にして同一の球を除く（a/n = a'/n' かつ同じ半径）
    g = np.gcd(np.gcd(left_num, right_num), den)
    stacked = np.stack([left_num // g, right_num // g, den // g], axis=1)
    unique = np.unique(stacked, axis=0)
    return (np.ascontiguousarray(unique[:, 0]), np.ascontiguousarray(unique[:, 1]),
            np.ascontiguousarray(unique[:, 2]))


def approx_set(n: int, numerators: Iterable[int], radius: Fraction, reduced: bool = False) -> IntervalSet:
    """
    1層分の近似集合 A_n^P(Ψ) = ∪_{a∈P} B(a/n, radius) ∩ [0,1]

    Args:
        n: 分母
        numerators: 分子の集合 ⊆ [n]
        radius: 半径 Ψ(n)
        reduced: True なら gcd(a, n) = 1 の分子のみ使用

    Raises:
        InputError: 分子が [n] の範囲外の場合
    """
    chosen = sorted(set(int(a) for a in numerators))
    if chosen and (chosen[0] < 1 or chosen[-1] > n):
        raise InputError(f"分子は 1〜{n} の範囲である必要があります")
    if reduced:
        chosen = [a for a in chosen if gcd(a, n) == 1]
    return BallUnion.from_layer(n, chosen, Fraction(radius)).to_interval_set()


def layer_measure(n: int, numerators: Union[Sequence[int], np.ndarray], radius: Fraction,
                  mode: str = MODE_EXACT) -> MeasureBracket:
    """λ(A_n^P(Ψ)) を IntervalSet を作らずに計算する"""
    return BallUnion.from_layer(n, numerators, Fraction(radius)).measure(mode=mode)


def residue_sweep_measures(n: int, radius_numerators: Sequence[int], radius_den: int,
                           chunk: int = 1024) -> List[Fraction]:
    """
    半径 j/radius_den（j ∈ radius_numerators）ごとに λ(∪_{a∈[n]} B(a/n, r) ∩ [0,1]) を
    共通分母の整数端点を左から掃引して一括で求める

    Args:
        n: 分母
        radius_numerators: 非負の整数 j の列
        radius_den: 半径の共通分母（n の倍数）
    """
    if n < 1 or radius_den % n:
        raise InputError(f"半径の分母 {radius_den} は n={n} の倍数である必要があります")
    scale = radius_den // n
    centers = np.arange(1, n + 1, dtype=np.int64) * scale
    numerators = np.asarray(radius_numerators, dtype=np.int64)
    if len(numerators) and numerators.min() < 0:
        raise InputError("半径は非負である必要があります")
    covered: List[Fraction] = []
    for start in range(0, len(numerators), chunk):
        j = numerators[start:start + chunk, None]
        left = np.clip(centers[None, :] - j, 0, radius_den)
        right = np.clip(centers[None, :] + j, 0, radius_den)
        reach = np.maximum.accumulate(right, axis=1)
        previous = np.concatenate([np.zeros((len(j), 1), dtype=np.int64), reach[:, :-1]], axis=1)
        lengths = np.maximum(0, right - np.maximum(left, previous)).sum(axis=1, dtype=np.int64)
        covered.extend(Fraction(int(x), radius_den) for x in lengths)
    return covered
