#!/usr/bin/env python3
"""Run a tetrahedron-weight verification job.

Thin wrapper around ``tetraweights.cli`` so the suite runs from a checkout
without installation.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from tetraweights.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
