"""
Experiment report export.

Writes a RateReport as three files in an output directory:
    errors.csv   - one row per (n, replica) cell
    summary.csv  - one row per sample size
    summary.json - slope, failure count and an echo of the experiment spec

Floats are written with shortest round-trip formatting, so reading the
CSVs back with ``float_precision="round_trip"`` restores them bit-exactly.
"""

import math
from pathlib import Path
from typing import Dict, Union

import pandas as pd

from netreg.exceptions import SerializationError
from netreg.experiments import RateReport
from netreg.utils.file_utils import ensure_directory, write_json
from netreg.utils.logging import get_logger


ERRORS_FILE = "errors.csv"
SUMMARY_FILE = "summary.csv"
SUMMARY_JSON_FILE = "summary.json"

ERRORS_COLUMNS = [
    "n",
    "replica",
    "seed",
    "error",
    "iters",
    "runtime_ms",
    "failed",
    "assumptions_ok",
    "ols_error",
    "kappa_gap",
]
SUMMARY_COLUMNS = ["n", "median", "q25", "q75", "failures", "assumption_flags"]


def _json_float(value: float) -> Union[float, None]:
    return value if math.isfinite(value) else None


class ReportWriter:
    """
    Write experiment reports to a directory.

    Example:
        >>> writer = ReportWriter()
        >>> paths = writer.write(report, Path("runs/regular4"))
        >>> print(paths["summary"])
    """

    def __init__(self) -> None:
        """Initialize the report writer."""
        self._logger = get_logger(__name__)

    def errors_frame(self, report: RateReport) -> pd.DataFrame:
        """Per-cell table in (n, replica) order."""
        return pd.DataFrame([cell.to_dict() for cell in report.cells], columns=ERRORS_COLUMNS)

    def summary_frame(self, report: RateReport) -> pd.DataFrame:
        """Per-n table."""
        return pd.DataFrame(
            [summary.to_dict() for summary in report.summaries], columns=SUMMARY_COLUMNS
        )

    def summary_document(self, report: RateReport) -> dict:
        """JSON payload: slope (None when undefined), failure count and spec echo."""
        return {
            "slope": report.slope,
            "failures": report.failure_count,
            "medians": {
                str(summary.n): _json_float(summary.median) for summary in report.summaries
            },
            "spec": report.spec.to_dict(),
        }

    def write(self, report: RateReport, out_dir: Union[str, Path]) -> Dict[str, Path]:
        """
        Write errors.csv, summary.csv and summary.json under ``out_dir``.

        Args:
            report: Completed experiment report.
            out_dir: Output directory, created if missing.

        Returns:
            Dict[str, Path]: Paths keyed by "errors", "summary" and "summary_json".

        Raises:
            SerializationError: If a file cannot be written.
        """
        out_dir = Path(out_dir)
        paths = {
            "errors": out_dir / ERRORS_FILE,
            "summary": out_dir / SUMMARY_FILE,
            "summary_json": out_dir / SUMMARY_JSON_FILE,
        }

        try:
            ensure_directory(out_dir)
            self.errors_frame(report).to_csv(paths["errors"], index=False)
            self.summary_frame(report).to_csv(paths["summary"], index=False)
        except OSError as e:
            raise SerializationError(f"Cannot write report to {out_dir}: {e}") from e
        write_json(self.summary_document(report), paths["summary_json"])

        self._logger.info(
            f"Wrote {len(report.cells)} cells and {len(report.summaries)} summary rows to {out_dir}"
        )
        return paths


def emit_report(report: RateReport, path: Union[str, Path]) -> Dict[str, Path]:
    """Write a RateReport to the directory ``path``; see :class:`ReportWriter`."""
    return ReportWriter().write(report, path)


def read_errors(path: Union[str, Path]) -> pd.DataFrame:
    """
    Read an errors.csv back with exact float parsing.

    Raises:
        SerializationError: If the file is missing or malformed.
    """
    path = Path(path)
    try:
        return pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError as e:
        raise SerializationError(f"File not found: {path}") from e
    except (OSError, ValueError) as e:
        raise SerializationError(f"Cannot read report table {path}: {e}") from e
