"""
Entry point for running netreg as a module.

Usage:
    python -m netreg check --model logistic --graph regular:4 --n 1000
    python -m netreg --help
"""

import sys

from netreg.cli import main

if __name__ == "__main__":
    sys.exit(main())
