"""
dlab/impl/artifact_store.py

実験成果物の保存サービスの実装
検査行のCSV、回帰用の表、JSON要約、実行マニフェストの書き込みと読み込み
"""

import csv
import hashlib
import io
import json
import logging
import os
import platform
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List

import gmpy2
import mpmath
import numpy as np
import scipy
import yaml

import dlab
from dlab.arith import RealBracket
from dlab.errors import ArtifactError
from dlab.framework.experiment_base import ExperimentResult
from dlab.intervals import MeasureBracket, RationalInterval

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
SUMMARY_FILE = "summary.json"
CHECKS_FILE = "checks.csv"

SCHEMA_PREFIX = "dlab"
SCHEMA_VERSION = 1


def schema_of(kind: str) -> str:
    return f"{SCHEMA_PREFIX}/{kind}/{SCHEMA_VERSION}"


def format_value(value: Any) -> str:
    """CSV用の文字列化（有理数は p/q、浮動小数点は repr）"""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (Fraction, int, np.integer)):
        return str(value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, RealBracket):
        return f"[{float(value.lower)!r}, {float(value.upper)!r}]"
    if isinstance(value, (MeasureBracket, RationalInterval)):
        return str(value)
    if isinstance(value, (list, tuple)):
        return " ".join(format_value(v) for v in value)
    return str(value)


def _jsonable(value: Any) -> Any:
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return format_value(value)


def _dump_json(data: Dict[str, Any]) -> str:
    return json.dumps(_jsonable(data), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _dump_csv(rows: List[Dict[str, Any]], leading: List[str]) -> str:
    columns = list(leading)
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: format_value(row.get(k)) for k in columns})
    return buffer.getvalue()


def library_versions() -> Dict[str, str]:
    return {
        "dlab": dlab.__version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "mpmath": mpmath.__version__,
        "gmpy2": gmpy2.version(),
        "PyYAML": yaml.__version__,
    }


@dataclass
class LoadedArtifact:
    """読み込んだ成果物"""
    path: str
    manifest: Dict[str, Any]
    summary: Dict[str, Any]
    checks: List[Dict[str, str]]
    tables: Dict[str, List[Dict[str, str]]]

    @property
    def kind(self) -> str:
        return self.manifest.get("kind", "")


class ArtifactStore:
    """
    ローカルディレクトリを使用した成果物ストア
    出力はタイムスタンプを含まず、同じ (設定, シード) からはバイト単位で同一になる
    """

    def __init__(self, root: str):
        """
        Args:
            root: 成果物の出力先ディレクトリ
        """
        self.root = root
        logger.debug(f"ArtifactStore initialized at: {root}")

    def _write(self, path: str, content: str) -> str:
        try:
            with open(path, "w", encoding="utf-8", newline="") as f:
                f.write(content)
        except OSError as e:
            logger.error(f"Artifact write failed: {path}: {e}")
            raise ArtifactError(f"成果物の書き込みに失敗しました: {path}: {e}")
        return hashlib.sha256(content.encode("utf-8")).hexdigest()

    def write_result(self, result: ExperimentResult, run_name: str, config_hash: str, seed: int) -> str:
        """
        実験結果を OUTPUT_DIR/<run_name>/ に書き込む

        Returns:
            str: 書き込んだディレクトリのパス

        Raises:
            ArtifactError: 書き込みに失敗した場合
        """
        directory = os.path.join(self.root, run_name)
        try:
            os.makedirs(directory, exist_ok=True)
        except OSError as e:
            raise ArtifactError(f"出力ディレクトリを作成できません: {directory}: {e}")

        digests: Dict[str, str] = {}
        check_rows = [{"check": r.check, "tag": r.tag, "status": r.status, **r.detail} for r in result.checks]
        digests[CHECKS_FILE] = self._write(os.path.join(directory, CHECKS_FILE),
                                           _dump_csv(check_rows, ["check", "tag", "status"]))
        for name, rows in sorted(result.tables.items()):
            filename = f"{name}.csv"
            digests[filename] = self._write(os.path.join(directory, filename), _dump_csv(rows, []))
        digests[SUMMARY_FILE] = self._write(os.path.join(directory, SUMMARY_FILE), _dump_json(result.summary))

        manifest = {
            "schema": schema_of(result.kind),
            "kind": result.kind,
            "name": result.name,
            "config_sha256": config_hash,
            "seed": seed,
            "versions": library_versions(),
            "files": digests,
            "tables": sorted(result.tables),
        }
        self._write(os.path.join(directory, MANIFEST_FILE), _dump_json(manifest))
        logger.info(f"Artifacts written: {directory} ({len(digests)} files)")
        return directory

    def read(self, path: str, known_kinds: List[str]) -> LoadedArtifact:
        """
        成果物ディレクトリ（または manifest.json）を読み込む

        Raises:
            ArtifactError: マニフェストがない、スキーマが未知、ファイルが壊れている場合
        """
        directory = os.path.dirname(path) if os.path.basename(path) == MANIFEST_FILE else path
        manifest_path = os.path.join(directory, MANIFEST_FILE)
        try:
            with open(manifest_path, "r", encoding="utf-8") as f:
                manifest = json.load(f)
            with open(os.path.join(directory, SUMMARY_FILE), "r", encoding="utf-8") as f:
                summary = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ArtifactError(f"成果物を読み込めません: {directory}: {e}")

        schema = manifest.get("schema") if isinstance(manifest, dict) else None
        if schema not in {schema_of(kind) for kind in known_kinds}:
            raise ArtifactError(f"未知の成果物スキーマです: {schema}")

        def read_csv(filename: str) -> List[Dict[str, str]]:
            try:
                with open(os.path.join(directory, filename), "r", encoding="utf-8", newline="") as f:
                    return list(csv.DictReader(f))
            except OSError as e:
                raise ArtifactError(f"成果物のファイルを読み込めません: {filename}: {e}")

        tables = {name: read_csv(f"{name}.csv") for name in manifest.get("tables", [])}
        logger.debug(f"Artifact loaded: {directory} ({manifest.get('kind')})")
        return LoadedArtifact(directory, manifest, summary, read_csv(CHECKS_FILE), tables)
