"""
Unit tests for netreg.utils modules.
"""

import json
import logging

import numpy as np
import pytest

from netreg.exceptions import SerializationError
from netreg.utils.file_utils import ensure_directory, read_json, write_json
from netreg.utils.logging import LOGGER_NAME, get_logger, set_level, setup_logging
from netreg.utils.matrix_io import load_matrix, load_vector, save_matrix, save_vector
from netreg.utils.random import derive_seed, make_rng


class TestMatrixIO:
    """Tests for save_matrix / load_matrix."""

    def test_csv_roundtrip_is_bit_exact(self, rng, tmp_path):
        """Test that awkward doubles survive a CSV save/load unchanged."""
        values = rng.standard_normal((5, 4)) * 1e-7
        values[0, 0] = 0.1 + 0.2
        values[1, 1] = 1e308
        values[2, 2] = -5e-324

        loaded = load_matrix(save_matrix(values, tmp_path / "a.csv"))

        assert loaded.dtype == np.float64
        assert np.array_equal(loaded, values)

    def test_json_roundtrip_is_bit_exact(self, rng, tmp_path):
        """Test that a JSON save/load returns identical bits."""
        values = rng.standard_normal((3, 6))

        loaded = load_matrix(save_matrix(values, tmp_path / "a.json"))

        assert np.array_equal(loaded, values)

    def test_csv_layout(self, tmp_path):
        """Test the header line and row-major layout."""
        path = save_matrix(np.array([[1.0, 2.5], [-3.0, 0.0]]), tmp_path / "m.csv")

        assert path.read_text().splitlines() == ["# 2 2", "1.0,2.5", "-3.0,0.0"]

    def test_json_envelope(self, tmp_path):
        """Test the JSON envelope keys."""
        path = save_matrix(np.array([[1.0, 2.0, 3.0]]), tmp_path / "m.json")

        assert json.loads(path.read_text()) == {"rows": 1, "cols": 3, "data": [1.0, 2.0, 3.0]}

    def test_single_row_and_column(self, tmp_path):
        """Test that 1 x k and k x 1 matrices keep their shape."""
        row = np.array([[1.0, 2.0, 3.0]])
        column = row.T

        assert load_matrix(save_matrix(row, tmp_path / "row.csv")).shape == (1, 3)
        assert load_matrix(save_matrix(column, tmp_path / "col.csv")).shape == (3, 1)

    def test_empty_matrix(self, tmp_path):
        """Test that a 0-row matrix round-trips."""
        loaded = load_matrix(save_matrix(np.zeros((0, 3)), tmp_path / "empty.csv"))

        assert loaded.shape == (0, 3)

    def test_creates_parent_directory(self, tmp_path):
        """Test that missing parent directories are created."""
        path = save_matrix(np.eye(2), tmp_path / "nested" / "dir" / "a.csv")

        assert path.is_file()

    def test_missing_file(self, tmp_path):
        """Test that a missing file raises SerializationError."""
        with pytest.raises(SerializationError, match="not found"):
            load_matrix(tmp_path / "missing.csv")

    def test_missing_header(self, tmp_path):
        """Test that a CSV without a header raises SerializationError."""
        path = tmp_path / "bad.csv"
        path.write_text("1.0,2.0\n3.0,4.0\n")

        with pytest.raises(SerializationError, match="header"):
            load_matrix(path)

    def test_malformed_header(self, tmp_path):
        """Test that a non-integer header raises SerializationError."""
        path = tmp_path / "bad.csv"
        path.write_text("# two 2\n1.0,2.0\n")

        with pytest.raises(SerializationError, match="Malformed"):
            load_matrix(path)

    def test_header_shape_mismatch(self, tmp_path):
        """Test that a header disagreeing with the data raises SerializationError."""
        path = tmp_path / "bad.csv"
        path.write_text("# 3 2\n1.0,2.0\n3.0,4.0\n")

        with pytest.raises(SerializationError, match="declares 3x2"):
            load_matrix(path)

    def test_json_size_mismatch(self, tmp_path):
        """Test that an envelope with the wrong data length raises SerializationError."""
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"rows": 2, "cols": 2, "data": [1.0, 2.0, 3.0]}))

        with pytest.raises(SerializationError):
            load_matrix(path)

    def test_non_numeric_entry(self, tmp_path):
        """Test that a non-numeric cell raises SerializationError."""
        path = tmp_path / "bad.csv"
        path.write_text("# 1 2\n1.0,abc\n")

        with pytest.raises(SerializationError):
            load_matrix(path)


class TestVectorIO:
    """Tests for save_vector / load_vector."""

    def test_roundtrip(self, rng, tmp_path):
        """Test that vectors are stored as one column and restored flat."""
        values = rng.standard_normal(7)
        path = save_vector(values, tmp_path / "v.csv")

        assert path.read_text().splitlines()[0] == "# 7 1"
        assert np.array_equal(load_vector(path), values)

    def test_rejects_matrix(self, tmp_path):
        """Test that a genuine matrix is not accepted as a vector."""
        path = save_matrix(np.eye(3), tmp_path / "m.csv")

        with pytest.raises(SerializationError, match="Expected a vector"):
            load_vector(path)


class TestRandom:
    """Tests for make_rng and derive_seed."""

    def test_make_rng_is_reproducible(self):
        """Test that the same seed yields the same stream."""
        first = make_rng(42).standard_normal(5)
        second = make_rng(42).standard_normal(5)

        assert np.array_equal(first, second)

    def test_make_rng_uses_philox(self):
        """Test the bit generator type."""
        assert isinstance(make_rng(0).bit_generator, np.random.Philox)

    def test_derive_seed_is_deterministic(self):
        """Test that derived seeds depend only on the inputs."""
        assert derive_seed(7, 500, 3) == derive_seed(7, 500, 3)

    def test_derive_seed_separates_keys(self):
        """Test that different keys give different seeds."""
        seeds = {derive_seed(7, n, r) for n in (100, 200) for r in range(5)}

        assert len(seeds) == 10
        assert derive_seed(7, 1, 2) != derive_seed(7, 2, 1)

    def test_derive_seed_range(self):
        """Test that derived seeds fit in 32 bits."""
        seed = derive_seed(123456789, 1)

        assert 0 <= seed < 2**32


class TestFileUtils:
    """Tests for file_utils."""

    def test_ensure_directory(self, tmp_path):
        """Test nested directory creation."""
        path = ensure_directory(tmp_path / "a" / "b")

        assert path.is_dir()

    def test_json_roundtrip(self, tmp_path):
        """Test write_json / read_json and the trailing newline."""
        path = write_json({"slope": -0.5, "medians": {"100": 0.1}}, tmp_path / "out" / "s.json")

        assert path.read_text().endswith("}\n")
        assert read_json(path) == {"slope": -0.5, "medians": {"100": 0.1}}

    def test_read_missing(self, tmp_path):
        """Test that a missing JSON file raises SerializationError."""
        with pytest.raises(SerializationError, match="File not found"):
            read_json(tmp_path / "missing.json")

    def test_read_invalid(self, tmp_path):
        """Test that invalid JSON raises SerializationError."""
        path = tmp_path / "bad.json"
        path.write_text("{not json")

        with pytest.raises(SerializationError, match="Cannot read JSON"):
            read_json(path)


class TestLogging:
    """Tests for logging helpers."""

    def test_get_logger_namespace(self):
        """Test that module loggers live under the package logger."""
        assert get_logger("netreg.sampling").name == "netreg.sampling"
        assert get_logger("scripts").name == f"{LOGGER_NAME}.scripts"

    def test_setup_logging_replaces_handlers(self):
        """Test that repeated setup leaves a single console handler."""
        setup_logging(level="DEBUG")
        logger = setup_logging(level="WARNING")

        assert logger.level == logging.WARNING
        assert len(logger.handlers) == 1

    def test_setup_logging_file(self, tmp_path):
        """Test that a log file handler is attached on request."""
        log_file = tmp_path / "run.log"
        logger = setup_logging(level="INFO", log_file=str(log_file))
        logger.info("hello")
        for handler in logger.handlers:
            handler.flush()

        assert "hello" in log_file.read_text()
        for handler in list(logger.handlers):
            handler.close()
        logger.handlers.clear()

    def test_set_level(self):
        """Test that set_level changes the package logger level."""
        setup_logging(level="INFO")
        set_level("debug")

        assert logging.getLogger(LOGGER_NAME).level == logging.DEBUG
