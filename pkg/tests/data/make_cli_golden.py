"""Regenerate the end-to-end goldens by running the CLI pipeline on corpus.jsonl.

Only rerun after a deliberate output change, and review the diff.

    python3 tests/data/make_cli_golden.py
"""

from __future__ import annotations

import sys
from pathlib import Path

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE.parent))

from helpers import pipeline_argv  # noqa: E402

from kgsumm.cli import main  # noqa: E402

if __name__ == "__main__":
    for argv in pipeline_argv(HERE / "corpus.jsonl", HERE / "golden"):
        if main(argv) != 0:
            raise SystemExit(f"failed: {argv}")
