"""
dlab/ui.py

人間向けの表示コンポーネント
成果物の検査結果表、実験ごとの要約表、揃えたテキスト表を提供
"""

import logging
import unicodedata
from typing import Dict, List, Sequence

from dlab.impl.artifact_store import LoadedArtifact

logger = logging.getLogger(__name__)

# 表示用の絵文字アイコン定義
ICONS = {
    "pass": "✅",
    "fail": "❌",
    "info": "ℹ️",
    "kappa": "📐",
    "ledger": "📒",
    "summary": "📋",
}

# 実験ごとに表示する表と列
KIND_TABLES: Dict[str, Sequence[tuple]] = {
    "concentration": (
        ("chebyshev", ("statistic", "t", "expectation", "variance_bound", "failures",
                       "chebyshev_bound", "passed")),
    ),
    "ubiquity": (
        ("kappa_trajectory", ("t", "N_t", "F_t", "min_ratio", "passed")),
    ),
    "counterexample": (
        ("ledger", ("j", "M_j", "c_j", "measure", "bound_2c", "containment", "chain", "phi_series", "Mj_advisory")),
    ),
    "truncated-measure": (
        ("measure", ("N0", "N1", "measure", "union_bound", "monte_carlo", "sigma", "agrees")),
    ),
    "catlin": (
        ("series", ("N", "phi_psi", "phi_catlin")),
    ),
}

# 長い値は表示上で省略する
MAX_CELL_WIDTH = 40


def _width(text: str) -> int:
    return sum(2 if unicodedata.east_asian_width(ch) in ("W", "F") else 1 for ch in text)


def _clip(text: str) -> str:
    if len(text) <= MAX_CELL_WIDTH:
        return text
    return text[:MAX_CELL_WIDTH - 3] + "..."


def render_table(rows: List[Dict[str, str]], columns: Sequence[str]) -> str:
    """辞書の列を揃えたテキスト表に整形する"""
    cells = [[_clip(str(row.get(c, ""))) for c in columns] for row in rows]
    widths = [max([_width(c)] + [_width(r[i]) for r in cells]) for i, c in enumerate(columns)]

    def line(values: Sequence[str]) -> str:
        return "  ".join(v + " " * (w - _width(v)) for v, w in zip(values, widths)).rstrip()

    output = [line(columns), line(["-" * w for w in widths])]
    output.extend(line(r) for r in cells)
    return "\n".join(output)


def render_checks(artifact: LoadedArtifact) -> str:
    rows = [
        {"": ICONS.get(row.get("status", ""), ""), "check": row.get("check", ""),
         "status": row.get("status", ""), "tag": row.get("tag", "")}
        for row in artifact.checks
    ]
    return render_table(rows, ("", "check", "status", "tag"))


def render_report(artifact: LoadedArtifact) -> str:
    """
    成果物の要約を人間向けのテキストにする
    検査ごとの合否と根拠タグ、実験固有の表と要約行を含む
    """
    summary = artifact.summary
    passed = summary.get("passed")
    header = (f"{ICONS['summary']} {artifact.kind} '{artifact.manifest.get('name', '')}' "
              f"seed={artifact.manifest.get('seed')} mode={summary.get('mode', '')} "
              f"{ICONS['pass'] if passed else ICONS['fail']} "
              f"{summary.get('checks', 0) - summary.get('failures', 0)}/{summary.get('checks', 0)} checks passed")
    sections = [header, "", render_checks(artifact)]

    for table, columns in KIND_TABLES.get(artifact.kind, ()):
        rows = artifact.tables.get(table)
        if rows:
            sections.extend(["", f"{ICONS['ledger']} {table}", render_table(rows, columns)])

    if artifact.kind == "ubiquity" and "kappa_estimate" in summary:
        sections.extend(["", f"{ICONS['kappa']} kappa estimate: {summary['kappa_estimate']} "
                             f"(floor {summary.get('kappa_floor', '')})"])
    if artifact.kind == "counterexample" and "bound_status" in summary:
        sections.extend(["", f"{ICONS['ledger']} total measure {summary.get('total_measure')} "
                             f"<= sum 2c_j = {summary.get('bound_sum')}: {summary['bound_status']}"])
    logger.debug(f"Rendered report for {artifact.path}")
    return "\n".join(sections)
