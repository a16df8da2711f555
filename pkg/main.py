"""
main.py

dlab のエントリーポイント
コマンドラインの起動処理を担当
"""

from dlab.core import run_cli_exit


def main():
    """
    アプリケーションのメイン関数。
    コマンドラインを解釈して実行し、終了コードを返す。
    """
    run_cli_exit()


if __name__ == "__main__":
    main()
