"""
dlab/streams.py

カウンタベースの決定的乱数ストリーム
(シード, 用途, n) の組から独立なストリームを遅延生成する
"""

import logging
from typing import Tuple

import numpy as np

from dlab.errors import InputError

logger = logging.getLogger(__name__)

# ストリームの用途（鍵の上位ビット）
DOMAIN_SUBSET = 1
DOMAIN_UNIFORM_SUBSET = 2
DOMAIN_BINOMIAL = 3
DOMAIN_URN = 4
DOMAIN_POINTS = 5

_DOMAIN_SHIFT = 48
_SEED_MASK = (1 << 64) - 1


def stream_key(seed: int, domain: int, n: int) -> Tuple[int, int]:
    """Philox の鍵 (seed, domain‖n) を返す"""
    if not 0 <= n < (1 << _DOMAIN_SHIFT):
        raise InputError(f"ストリームの添字は 0〜2^48−1 の範囲である必要があります: n={n}")
    if not 0 < domain < (1 << 16):
        raise InputError(f"ストリームの用途番号が不正です: {domain}")
    return seed & _SEED_MASK, (domain << _DOMAIN_SHIFT) | n


def stream(seed: int, domain: int, n: int = 0) -> np.random.Generator:
    """
    (seed, domain, n) で決まる独立な乱数ストリーム
    同じ組からは常にビット単位で同一の系列が得られる
    """
    key = np.array(stream_key(seed, domain, n), dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def trial_seed(master_seed: int, trial: int) -> int:
    """試行ごとの派生シード（SeedSequence によるハッシュ）"""
    sequence = np.random.SeedSequence([master_seed & _SEED_MASK, trial])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
