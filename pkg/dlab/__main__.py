"""
dlab/__main__.py

python -m dlab での起動
"""

from dlab.core import run_cli_exit

run_cli_exit()
