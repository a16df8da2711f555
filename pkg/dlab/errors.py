"""
dlab/errors.py

アプリケーション固有の例外クラスとエラー処理ユーティリティ
統一されたエラーハンドリングと終了コードの対応付けを提供
"""

import logging
import sys

logger = logging.getLogger(__name__)

# 終了コード定義（CLI仕様に準拠）
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


class DlabError(Exception):
    """
    dlabアプリケーションの基底例外クラス
    すべてのdlab固有エラーはこのクラスを継承する
    """
    exit_code = EXIT_CHECK_FAILED


class ConfigError(DlabError):
    """
    設定ファイルの読み込み・解析に関連するエラー
    構文エラー、未知のキー、型不一致等で発生
    """
    exit_code = EXIT_USAGE

    def __init__(self, message: str, line: int = None):
        self.line = line
        if line is not None:
            message = f"{message}（{line}行目）"
        super().__init__(message)


class InputError(DlabError, ValueError):
    """
    ライブラリ関数への不正な入力に関連するエラー
    範囲外の引数、不正な区間等で発生
    """
    exit_code = EXIT_USAGE


class DomainError(InputError):
    """
    関数の定義域外での評価に関連するエラー
    beta ≠ 0 の閉形式Ψを n=1 で評価した場合等に発生
    """
    pass


class ResourceError(DlabError):
    """
    メモリ・計算量の予算超過に関連するエラー
    篩の上限超過、厳密モードの区間数超過等で発生
    """
    exit_code = EXIT_RESOURCE


class ValidationError(DlabError, ValueError):
    """
    構成オブジェクトの不変条件違反に関連するエラー
    反例構成の M 列の間隔違反等で発生
    """
    exit_code = EXIT_USAGE


class DegenerateSchemeError(ValidationError):
    """
    ブロック和 F_t = 0 となる退化したブロックスキームで発生
    """

    def __init__(self, t: int):
        self.t = t
        super().__init__(f"ブロック和 F_{t} が 0 です（t={t} のブロックが空）")


class ArtifactError(DlabError):
    """
    成果物ファイルの書き込み・読み込みに関連するエラー
    未知のスキーマ、書き込み失敗等で発生
    """
    exit_code = EXIT_USAGE


class InternalError(DlabError):
    """
    理論上起こり得ない内部状態の検出時に発生
    反例構成におけるキー衝突等
    """
    exit_code = EXIT_CHECK_FAILED


def handle_dlab_error(error: Exception, log_message: str = "エラーが発生しました") -> int:
    """
    統一されたエラーハンドリング関数
    例外をログに記録し、ユーザーに適切なエラーメッセージを表示

    Args:
        error: 発生した例外
        log_message: ログに記録するメッセージ

    Returns:
        int: 例外に対応する終了コード
    """
    logger.error(f"{log_message}: {error}")

    if isinstance(error, DlabError):
        print(f"⚠️ {error}", file=sys.stderr)
        return error.exit_code

    if isinstance(error, MemoryError):
        print("⚠️ メモリが不足しました。問題の規模を小さくしてください", file=sys.stderr)
        return EXIT_RESOURCE

    # 想定外の例外はスタックトレース付きで記録
    logger.debug("Unexpected exception", exc_info=error)
    print(f"⚠️ 予期しないエラー: {error}", file=sys.stderr)
    return EXIT_CHECK_FAILED
