"""
Matrix and vector serialization.

Two formats are supported, both row-major:

    CSV   first line ``# rows cols``, then one comma-separated row per line
    JSON  ``{"rows": n, "cols": m, "data": [...]}``

Floats are written with ``repr`` (shortest round-trip decimal), so a
float64 array survives a save/load cycle bit for bit. Vectors are stored
as single-column matrices.
"""

import json
from pathlib import Path
from typing import Union

import numpy as np

from netreg.exceptions import SerializationError
from netreg.utils.file_utils import ensure_directory
from netreg.utils.logging import get_logger


logger = get_logger(__name__)

PathLike = Union[str, Path]


def _as_matrix(values: np.ndarray) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        return arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise SerializationError(f"Expected a 1D or 2D array, got {arr.ndim}D")
    return arr


def _format_of(path: Path) -> str:
    return "json" if path.suffix.lower() == ".json" else "csv"


def save_matrix(values: np.ndarray, path: PathLike) -> Path:
    """
    Write a matrix as CSV or JSON, chosen by file suffix.

    Args:
        values: 1D or 2D array; 1D arrays are written as one column.
        path: Output path; ``.json`` selects the JSON envelope.

    Returns:
        Path: The path written.

    Raises:
        SerializationError: If the file cannot be written.
    """
    path = Path(path)
    matrix = _as_matrix(values)
    rows, cols = matrix.shape

    try:
        if path.parent:
            ensure_directory(path.parent)
        if _format_of(path) == "json":
            envelope = {
                "rows": rows,
                "cols": cols,
                "data": [float(v) for v in matrix.ravel()],
            }
            path.write_text(json.dumps(envelope), encoding="utf-8")
        else:
            lines = [f"# {rows} {cols}"]
            lines.extend(",".join(repr(float(v)) for v in row) for row in matrix)
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as e:
        raise SerializationError(f"Cannot write matrix to {path}: {e}") from e

    logger.debug(f"Wrote {rows}x{cols} matrix to {path}")
    return path


def _load_csv(path: Path) -> np.ndarray:
    with path.open("r", encoding="utf-8") as handle:
        header = handle.readline().strip()
    parts = header.lstrip("#").split()
    if not header.startswith("#") or len(parts) != 2:
        raise SerializationError(f"Missing '# rows cols' header in {path}")
    try:
        rows, cols = int(parts[0]), int(parts[1])
    except ValueError as e:
        raise SerializationError(f"Malformed header '{header}' in {path}") from e

    if rows == 0 or cols == 0:
        return np.zeros((rows, cols))

    data = np.loadtxt(path, delimiter=",", comments="#", dtype=np.float64, ndmin=2)
    if data.shape != (rows, cols):
        raise SerializationError(
            f"Header declares {rows}x{cols} but {path} holds {data.shape[0]}x{data.shape[1]}"
        )
    return data


def _load_json(path: Path) -> np.ndarray:
    envelope = json.loads(path.read_text(encoding="utf-8"))
    try:
        rows, cols = int(envelope["rows"]), int(envelope["cols"])
        data = np.asarray(envelope["data"], dtype=np.float64)
    except (KeyError, TypeError) as e:
        raise SerializationError(f"Malformed matrix envelope in {path}: {e}") from e
    if data.size != rows * cols:
        raise SerializationError(
            f"Envelope declares {rows}x{cols} but {path} holds {data.size} values"
        )
    return data.reshape(rows, cols)


def load_matrix(path: PathLike) -> np.ndarray:
    """
    Read a matrix written by :func:`save_matrix`.

    Args:
        path: CSV or JSON file.

    Returns:
        np.ndarray: float64 matrix of the declared shape.

    Raises:
        SerializationError: If the file is missing or malformed.
    """
    path = Path(path)
    if not path.is_file():
        raise SerializationError(f"Matrix file not found: {path}")
    try:
        if _format_of(path) == "json":
            return _load_json(path)
        return _load_csv(path)
    except SerializationError:
        raise
    except (OSError, ValueError) as e:
        raise SerializationError(f"Cannot read matrix from {path}: {e}") from e


def save_vector(values: np.ndarray, path: PathLike) -> Path:
    """Write a vector as a single-column matrix."""
    return save_matrix(np.asarray(values, dtype=np.float64).ravel(), path)


def load_vector(path: PathLike) -> np.ndarray:
    """Read a single-row or single-column matrix file as a flat vector."""
    matrix = load_matrix(path)
    if matrix.ndim == 2 and min(matrix.shape) > 1:
        raise SerializationError(f"Expected a vector in {path}, got shape {matrix.shape}")
    return matrix.ravel()
