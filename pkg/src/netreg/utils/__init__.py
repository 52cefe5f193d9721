"""
Utility modules for netreg.

This package contains utility functions and helpers:
    - file_utils: File I/O helpers
    - matrix_io: Matrix/vector CSV and JSON serialization
    - random: Philox generators and seed derivation
    - logging: Logging configuration
"""

from netreg.utils.file_utils import ensure_directory, read_json, write_json
from netreg.utils.logging import get_logger, setup_logging
from netreg.utils.matrix_io import load_matrix, load_vector, save_matrix, save_vector
from netreg.utils.random import derive_seed, make_rng

__all__ = [
    "ensure_directory",
    "read_json",
    "write_json",
    "load_matrix",
    "load_vector",
    "save_matrix",
    "save_vector",
    "derive_seed",
    "make_rng",
    "setup_logging",
    "get_logger",
]
