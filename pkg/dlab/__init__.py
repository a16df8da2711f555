"""
dlab

ランダム分子モデルにおけるKhintchine型定理の計算実験ラボ
厳密有理数による測度計算、ユビキティ実験、反例構成の検証を提供
"""

__version__ = "1.0.0"
