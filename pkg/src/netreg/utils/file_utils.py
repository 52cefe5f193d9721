"""
File I/O utility functions.

This module provides helper functions for file operations
used throughout the netreg package.
"""

import json
from pathlib import Path
from typing import Any, Union

from netreg.exceptions import SerializationError


def ensure_directory(path: Union[str, Path]) -> Path:
    """
    Ensure a directory exists, creating it if necessary.

    Args:
        path: Path to the directory.

    Returns:
        Path: The directory path.
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_json(data: Any, path: Union[str, Path]) -> Path:
    """
    Write a JSON document, creating parent directories.

    Args:
        data: JSON-serializable object.
        path: Output file path.

    Returns:
        Path: The path written.

    Raises:
        SerializationError: If the file cannot be written.
    """
    path = Path(path)
    try:
        if path.parent:
            ensure_directory(path.parent)
        path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    except (OSError, TypeError, ValueError) as e:
        raise SerializationError(f"Cannot write JSON to {path}: {e}") from e
    return path


def read_json(path: Union[str, Path]) -> Any:
    """
    Read a JSON document.

    Raises:
        SerializationError: If the file is missing or not valid JSON.
    """
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise SerializationError(f"File not found: {path}") from e
    except (OSError, ValueError) as e:
        raise SerializationError(f"Cannot read JSON from {path}: {e}") from e
