"""
Allow running cadet as a module.

Usage:
    python -m cadet pipeline --config configs/default.cfg --seed 20240101 --out run1/
"""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
