#!/usr/bin/env python3
"""
hygienetool.py

Launcher for the hygiene-event classification pipeline.

Typical run:
  python tools/hygienetool.py synth --out generated --n-per-class 30 --seed 7
  python tools/hygienetool.py compare --out generated --k 5 --seed 7

Dependencies:
  pip install -r requirements.txt
"""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from hygiene.cli import main  # noqa: E402

if __name__ == "__main__":
    raise SystemExit(main())
