"""Toy applet, variant B: the recursion and double-free bugs of variant A are fixed."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from toy_core import main  # noqa: E402

if __name__ == "__main__":
    main(frozenset({"recursion", "double-free"}))
