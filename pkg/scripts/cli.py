#!/usr/bin/env python
import sys
from pathlib import Path

SRC = Path(__file__).resolve().parents[1] / "src"
if SRC.is_dir() and str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from miura.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
