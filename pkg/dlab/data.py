"""
dlab/data.py

実験設定ファイルのモデル定義と読み込み
YAMLのセクション構造の検証、行番号付きのエラー、厳密な有理数への変換を一元化
"""

import hashlib
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import yaml

from dlab.errors import ConfigError, DlabError
from dlab.intervals import MODES, RationalInterval
from dlab.model import SAMPLING_METHODS, SHUFFLE, CardinalityProfile, parse_profile
from dlab.psi import PsiSpec, parse_psi
from dlab.ubiquity import dyadic_suite

logger = logging.getLogger(__name__)

# 実験の種類
KINDS = ("sieve-checks", "concentration", "ubiquity", "truncated-measure", "counterexample", "catlin")

# セクションごとに許可されるキー（未知のキーはエラー）
SECTION_KEYS: Dict[str, Tuple[str, ...]] = {
    "experiment": ("kind", "name"),
    "profile": ("spec", "sampler"),
    "psi": ("spec",),
    "scheme": ("k", "t_min", "t_max", "cut_points"),
    "intervals": ("dyadic_min", "dyadic_max", "explicit"),
    "seeds": ("master", "trials"),
    "output": ("dir",),
    "counterexample": ("c", "tau", "M", "C"),
    "checks": (
        "N", "n_max", "interval", "identity_n_max", "witness_limit", "elementary_n_max",
        "residue_n_max", "binomial_N", "binomial_trials", "hypergeometric", "frequency_trials",
        "chi_square_trials", "statistic", "regime", "t", "correlation_trials", "kappa_floor",
        "x_c1_floor", "linear_a", "bounded_c1", "bounded_c2", "regularity_lambda", "N0", "N1", "points", "series_N",
        "point_denominator", "J",
    ),
}

# セクションを持たない最上位のスカラー
TOP_LEVEL_SCALARS = ("mode",)


def as_fraction(value: Any) -> Fraction:
    """int、"p/q" 形式の文字列、小数表記を厳密な有理数に変換する"""
    if isinstance(value, bool):
        raise ValueError(f"真偽値は数値として使えません: {value}")
    if isinstance(value, float):
        # YAMLの小数表記は10進の文字列として解釈する
        return Fraction(repr(value))
    return Fraction(str(value).strip())


def _walk_lines(root: yaml.MappingNode) -> Dict[Tuple[str, ...], int]:
    lines: Dict[Tuple[str, ...], int] = {}
    for key_node, value_node in root.value:
        section = str(key_node.value)
        lines[(section,)] = key_node.start_mark.line + 1
        if isinstance(value_node, yaml.MappingNode):
            for sub_key, _ in value_node.value:
                lines[(section, str(sub_key.value))] = sub_key.start_mark.line + 1
    return lines


@dataclass
class ExperimentConfig:
    """
    1つの実験設定
    セクション → キー → 値の対応と、エラー報告用の行番号を保持する
    """
    kind: str
    name: str
    sections: Dict[str, Dict[str, Any]]
    mode: Optional[str] = None
    source: str = "<string>"
    text: str = ""
    base_dir: str = "."
    lines: Dict[Tuple[str, ...], int] = field(default_factory=dict, repr=False)

    def line_of(self, section: str, key: Optional[str] = None) -> Optional[int]:
        if key is not None and (section, key) in self.lines:
            return self.lines[(section, key)]
        return self.lines.get((section,))

    def error(self, message: str, section: str, key: Optional[str] = None) -> ConfigError:
        return ConfigError(f"{self.source}: {message}", self.line_of(section, key))

    def has(self, section: str, key: str) -> bool:
        return key in self.sections.get(section, {})

    def get(self, section: str, key: str, default: Any = None) -> Any:
        return self.sections.get(section, {}).get(key, default)

    def fraction(self, section: str, key: str, default: Any = None) -> Optional[Fraction]:
        value = self.get(section, key, default)
        if value is None:
            return None
        try:
            return as_fraction(value)
        except (ValueError, ZeroDivisionError, TypeError):
            raise self.error(f"{section}.{key} は有理数である必要があります: {value!r}", section, key)

    def integer(self, section: str, key: str, default: Optional[int] = None) -> Optional[int]:
        value = self.get(section, key, default)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            try:
                parsed = as_fraction(value)
            except (ValueError, ZeroDivisionError, TypeError):
                parsed = None
            if parsed is None or parsed.denominator != 1:
                raise self.error(f"{section}.{key} は整数である必要があります: {value!r}", section, key)
            value = parsed.numerator
        return int(value)

    def integer_list(self, section: str, key: str, default: Optional[List[int]] = None) -> Optional[List[int]]:
        value = self.get(section, key, default)
        if value is None:
            return None
        if not isinstance(value, (list, tuple)):
            raise self.error(f"{section}.{key} は整数のリストである必要があります: {value!r}", section, key)
        try:
            parsed = [as_fraction(v) for v in value]
            if any(p.denominator != 1 for p in parsed):
                raise ValueError(value)
            return [p.numerator for p in parsed]
        except (ValueError, ZeroDivisionError, TypeError):
            raise self.error(f"{section}.{key} は整数のリストである必要があります: {value!r}", section, key)

    def interpret(self, section: str, key: str, parser, default: Any = None):
        """ライブラリの解析関数を呼び、失敗を行番号付きの設定エラーに変換する"""
        value = self.get(section, key, default)
        if value is None:
            return None
        try:
            return parser(value)
        except DlabError as e:
            raise self.error(f"{section}.{key}: {e}", section, key)

    @property
    def profile(self) -> CardinalityProfile:
        return self.interpret("profile", "spec", lambda text: parse_profile(str(text), self.base_dir), "phi")

    @property
    def sampler(self) -> str:
        method = self.get("profile", "sampler", SHUFFLE)
        if method not in SAMPLING_METHODS:
            raise self.error(f"不明なサンプラーです: {method}（{', '.join(SAMPLING_METHODS)}）", "profile", "sampler")
        return method

    @property
    def psi(self) -> Optional[PsiSpec]:
        return self.interpret("psi", "spec", lambda text: parse_psi(str(text)))

    @property
    def master_seed(self) -> Optional[int]:
        return self.integer("seeds", "master")

    def trials(self, default: int) -> int:
        trials = self.integer("seeds", "trials", default)
        if trials < 1:
            raise self.error(f"試行回数は1以上である必要があります: {trials}", "seeds", "trials")
        return trials

    @property
    def output_dir(self) -> str:
        return str(self.get("output", "dir", self.name))

    def interval(self, section: str = "checks", key: str = "interval", default: str = "0,1") -> RationalInterval:
        return self.interpret(section, key, lambda text: RationalInterval.parse(str(text)), default)

    def interval_suite(self) -> List[RationalInterval]:
        """intervals セクションの検査区間（二進区間と明示区間の和）"""
        suite: List[RationalInterval] = []
        explicit = self.get("intervals", "explicit") or []
        if not isinstance(explicit, list):
            raise self.error("intervals.explicit は区間のリストである必要があります", "intervals", "explicit")
        if not explicit or self.has("intervals", "dyadic_min") or self.has("intervals", "dyadic_max"):
            lo = self.integer("intervals", "dyadic_min", 1)
            hi = self.integer("intervals", "dyadic_max", 4)
            suite.extend(self.interpret("intervals", "dyadic_min", lambda _: dyadic_suite(lo, hi), lo))
        for text in explicit:
            try:
                suite.append(RationalInterval.parse(str(text)))
            except DlabError as e:
                raise self.error(f"intervals.explicit: {e}", "intervals", "explicit")
        return suite

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()


def parse_experiment_config(text: str, base_dir: str = ".", source: str = "<string>") -> ExperimentConfig:
    """
    YAMLテキストから実験設定を構築する

    Raises:
        ConfigError: 構文エラー、空のファイル、未知のセクションやキー、不正な値の場合
    """
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark is not None else None
        raise ConfigError(f"{source}: YAMLの構文エラー: {e.problem}", line)
    except yaml.YAMLError as e:
        raise ConfigError(f"{source}: YAMLの解析に失敗しました: {e}")

    if root is None or data is None:
        raise ConfigError(f"{source}: 設定ファイルが空です")
    if not isinstance(root, yaml.MappingNode) or not isinstance(data, dict):
        raise ConfigError(f"{source}: 最上位はセクションのマッピングである必要があります", root.start_mark.line + 1)

    lines = _walk_lines(root)
    sections: Dict[str, Dict[str, Any]] = {}
    mode = None
    for section, body in data.items():
        section = str(section)
        if section in TOP_LEVEL_SCALARS:
            mode = str(body)
            continue
        if section not in SECTION_KEYS:
            raise ConfigError(f"{source}: 未知のセクションです: {section}", lines.get((section,)))
        if body is None:
            body = {}
        if not isinstance(body, dict):
            raise ConfigError(f"{source}: セクション {section} はマッピングである必要があります", lines.get((section,)))
        for key in body:
            if str(key) not in SECTION_KEYS[section]:
                raise ConfigError(f"{source}: 未知のキーです: {section}.{key}", lines.get((section, str(key))))
        sections[section] = {str(k): v for k, v in body.items()}

    kind = sections.get("experiment", {}).get("kind")
    if kind is None:
        raise ConfigError(f"{source}: experiment.kind が指定されていません", lines.get(("experiment",)))
    if kind not in KINDS:
        raise ConfigError(f"{source}: 不明な実験の種類です: {kind}（{', '.join(KINDS)}）",
                          lines.get(("experiment", "kind")))
    if mode is not None and mode not in MODES:
        raise ConfigError(f"{source}: 不明な測度モードです: {mode}（{' / '.join(MODES)}）", lines.get(("mode",)))

    name = str(sections["experiment"].get("name", kind))
    config = ExperimentConfig(kind, name, sections, mode, source, text, base_dir, lines)
    logger.debug(f"Parsed experiment config {source}: kind={kind}, sections={sorted(sections)}")
    return config


def load_experiment_config(path: str) -> ExperimentConfig:
    """
    設定ファイルを読み込む

    Raises:
        ConfigError: ファイルを読めない、または内容が不正な場合
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"設定ファイルを読み込めません: {path}: {e}")
    return parse_experiment_config(text, base_dir=os.path.dirname(os.path.abspath(path)), source=path)


def config_from_mapping(data: Dict[str, Any], source: str) -> ExperimentConfig:
    """組み込みの設定（selftest）を正規化したYAMLテキスト経由で構築する"""
    text = yaml.safe_dump(data, sort_keys=True, allow_unicode=True)
    return parse_experiment_config(text, source=source)
