"""
Export modules for experiment output.

This package contains exporters for generating result files:
    - ReportWriter: Write a RateReport as errors.csv, summary.csv and summary.json
"""

from netreg.exporters.report_writer import ReportWriter, emit_report, read_errors

__all__ = ["ReportWriter", "emit_report", "read_errors"]
