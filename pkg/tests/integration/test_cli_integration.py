"""
Integration tests for the command-line interface.

These tests run the subcommands end to end through ``main`` and check
exit codes and the files they write.
"""

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from netreg.cli import (
    EXIT_CHECK_FAILED,
    build_config,
    main,
    parse_args,
    read_dataset,
    validate_args,
    write_dataset,
)
from netreg.exceptions import SerializationError


class TestCLIParsing:
    """Test CLI argument parsing."""

    def test_check_defaults(self):
        """Test the defaults of the check subcommand."""
        args = parse_args(["check", "--model", "logistic", "--graph", "regular:4", "--n", "100"])

        assert args.command == "check"
        assert args.d == 2
        assert args.seed == 0
        assert args.theta_bound == 1.0
        assert args.beta_bound == 0.4
        assert args.frob_c == 0.1
        assert args.json is None

    def test_theta_list(self):
        """Test comma-separated theta parsing."""
        args = parse_args(
            [
                "sample",
                "--model", "linear",
                "--n", "50",
                "--d", "2",
                "--graph", "sk",
                "--theta", "0.5,-0.3",
                "--beta", "0.2",
                "--out", "data.csv",
            ]
        )

        assert args.theta == [0.5, -0.3]
        assert args.graph_out is None

    def test_bad_theta_list(self):
        """Test that a non-numeric theta is an argparse error."""
        with pytest.raises(SystemExit):
            parse_args(
                [
                    "sample",
                    "--model", "logistic",
                    "--n", "50",
                    "--d", "1",
                    "--graph", "sk",
                    "--theta", "abc",
                    "--beta", "0.2",
                    "--out", "data.csv",
                ]
            )

    def test_unknown_model(self):
        """Test that only logistic and linear are accepted."""
        with pytest.raises(SystemExit):
            parse_args(["check", "--model", "probit", "--graph", "sk", "--n", "10"])

    def test_build_config(self, tmp_path: Path):
        """Test that unset fit options stay unresolved for the model defaults."""
        args = parse_args(
            [
                "fit",
                "--model", "logistic",
                "--data", str(tmp_path / "d.csv"),
                "--graph", str(tmp_path / "a.csv"),
                "--out", str(tmp_path / "fit.json"),
                "--max-iters", "500",
            ]
        )

        config = build_config(args)

        assert config.step_size is None
        assert config.tolerance is None
        assert config.max_iters == 500


class TestValidateArgs:
    """Test argument validation."""

    def test_n_must_exceed_d(self):
        """Test that n <= d is rejected."""
        args = parse_args(["check", "--model", "logistic", "--graph", "sk", "--n", "3", "--d", "3"])

        with pytest.raises(ValueError, match="exceed"):
            validate_args(args)

    def test_theta_length(self):
        """Test that theta must have d entries."""
        args = parse_args(
            [
                "sample",
                "--model", "logistic",
                "--n", "50",
                "--d", "2",
                "--graph", "sk",
                "--theta", "0.5",
                "--beta", "0.2",
                "--out", "data.csv",
            ]
        )

        with pytest.raises(ValueError, match="expected d=2"):
            validate_args(args)

    def test_fit_inputs_must_exist(self, tmp_path: Path):
        """Test that missing fit inputs raise FileNotFoundError."""
        args = parse_args(
            [
                "fit",
                "--model", "logistic",
                "--data", str(tmp_path / "missing.csv"),
                "--graph", str(tmp_path / "a.csv"),
                "--out", str(tmp_path / "fit.json"),
            ]
        )

        with pytest.raises(FileNotFoundError):
            validate_args(args)


class TestDatasetFiles:
    """Test the dataset CSV helpers."""

    def test_roundtrip(self, rng, tmp_path: Path):
        """Test that y and x are restored bit-exactly."""
        y = rng.standard_normal(10)
        x = rng.standard_normal((10, 3))

        loaded_y, loaded_x = read_dataset(write_dataset(y, x, tmp_path / "nested" / "data.csv"))

        np.testing.assert_array_equal(loaded_y, y)
        np.testing.assert_array_equal(loaded_x, x)
        header = (tmp_path / "nested" / "data.csv").read_text().splitlines()[0]
        assert header == "y,x1,x2,x3"

    def test_missing_feature_columns(self, tmp_path: Path):
        """Test that a table without features raises SerializationError."""
        path = tmp_path / "data.csv"
        pd.DataFrame({"y": [1.0, -1.0]}).to_csv(path, index=False)

        with pytest.raises(SerializationError):
            read_dataset(path)


class TestCheckCommand:
    """Test the check subcommand."""

    def test_regular_graph_passes(self, temp_output_dir: Path, capsys):
        """Test exit code 0 and the JSON report for a bounded-degree graph."""
        report_path = temp_output_dir / "check.json"

        exit_code = main(
            [
                "-q",
                "check",
                "--model", "logistic",
                "--graph", "regular:4",
                "--n", "200",
                "--json", str(report_path),
            ]
        )

        assert exit_code == 0
        assert "frobenius_sq" in capsys.readouterr().out
        assert json.loads(report_path.read_text())["overall"] is True

    def test_curie_weiss_fails(self):
        """Test that the Curie-Weiss graph exits with the failed-check code."""
        exit_code = main(["-q", "check", "--model", "logistic", "--graph", "cw", "--n", "200"])

        assert exit_code == EXIT_CHECK_FAILED

    def test_unknown_graph(self, capsys):
        """Test that an unknown graph family exits with 1."""
        exit_code = main(["-q", "check", "--model", "logistic", "--graph", "torus", "--n", "50"])

        assert exit_code == 1
        assert "Unknown graph specification" in capsys.readouterr().err


class TestSampleAndFit:
    """Test sample followed by fit."""

    def test_logistic_roundtrip(self, temp_output_dir: Path):
        """Test sampling an Ising dataset and fitting it from the written files."""
        data = temp_output_dir / "data.csv"
        graph = temp_output_dir / "a.csv"
        fit = temp_output_dir / "fit.json"

        assert main(
            [
                "-q",
                "sample",
                "--model", "logistic",
                "--n", "300",
                "--d", "2",
                "--graph", "regular:4",
                "--theta", "0.5,-0.3",
                "--beta", "0.2",
                "--seed", "4",
                "--burn-in", "50",
                "--out", str(data),
                "--graph-out", str(graph),
            ]
        ) == 0
        y, x = read_dataset(data)
        assert set(np.unique(y)) <= {-1.0, 1.0}
        assert x.shape == (300, 2)

        assert main(
            ["-q", "fit", "--model", "logistic", "--data", str(data), "--graph", str(graph),
             "--out", str(fit)]
        ) == 0
        result = json.loads(fit.read_text())
        assert len(result["params"]["theta"]) == 2
        assert abs(result["params"]["beta"]) <= 0.4
        assert result["diagnostics"]["grad_norm"] <= result["diagnostics"]["tolerance"]
        assert result["diagnostics"]["tolerance"] == pytest.approx(1.0 / np.sqrt(300))

    def test_linear_roundtrip(self, temp_output_dir: Path):
        """Test sampling a Gaussian dataset and fitting the linear model."""
        data = temp_output_dir / "data.csv"
        graph = temp_output_dir / "a.json"
        fit = temp_output_dir / "fit.json"

        assert main(
            [
                "-q",
                "sample",
                "--model", "linear",
                "--n", "120",
                "--d", "1",
                "--graph", "sk",
                "--theta", "0.5",
                "--beta", "0.1",
                "--seed", "6",
                "--out", str(data),
                "--graph-out", str(graph),
            ]
        ) == 0
        assert main(
            ["-q", "fit", "--model", "linear", "--data", str(data), "--graph", str(graph),
             "--beta-bound", "0.3", "--out", str(fit)]
        ) == 0

        params = json.loads(fit.read_text())["params"]
        assert set(params) == {"theta", "beta", "kappa"}
        assert abs(params["theta"][0]) <= 1.0
        assert abs(params["kappa"][0]) <= 0.3

    def test_sampling_is_reproducible(self, temp_output_dir: Path):
        """Test that the same seed writes the same dataset bytes."""
        outputs = []
        for name in ("first.csv", "second.csv"):
            path = temp_output_dir / name
            main(
                [
                    "-q",
                    "sample",
                    "--model", "linear",
                    "--n", "40",
                    "--d", "2",
                    "--graph", "regular:4",
                    "--theta", "0.5,-0.3",
                    "--beta", "0.2",
                    "--seed", "9",
                    "--out", str(path),
                ]
            )
            outputs.append(path.read_bytes())

        assert outputs[0] == outputs[1]

    def test_non_pd_fit_writes_nothing(self, temp_output_dir: Path, capsys):
        """Test that a box outside the PD region exits with 1 and no output."""
        data = temp_output_dir / "data.csv"
        graph = temp_output_dir / "a.csv"
        fit = temp_output_dir / "fit.json"
        main(
            [
                "-q",
                "sample",
                "--model", "linear",
                "--n", "30",
                "--d", "1",
                "--graph", "cw",
                "--theta", "0.5",
                "--beta", "0.2",
                "--out", str(data),
                "--graph-out", str(graph),
            ]
        )

        exit_code = main(
            ["-q", "fit", "--model", "linear", "--data", str(data), "--graph", str(graph),
             "--beta-bound", "1.5", "--out", str(fit)]
        )

        assert exit_code == 1
        assert not fit.exists()
        assert "positive definite" in capsys.readouterr().err

    def test_missing_data_file(self, temp_output_dir: Path):
        """Test that a missing dataset exits with 1."""
        exit_code = main(
            ["-q", "fit", "--model", "logistic", "--data", str(temp_output_dir / "none.csv"),
             "--graph", str(temp_output_dir / "none.csv"), "--out", str(temp_output_dir / "f.json")]
        )

        assert exit_code == 1


class TestExperimentCommand:
    """Test the experiment subcommand."""

    def test_runs_spec_and_writes_report(self, tiny_spec, temp_output_dir: Path, capsys):
        """Test that an experiment spec produces the three report files and a slope line."""
        spec_path = temp_output_dir / "spec.json"
        spec_path.write_text(json.dumps(tiny_spec.to_dict()))
        out_dir = temp_output_dir / "run"

        exit_code = main(["-q", "experiment", "--spec", str(spec_path), "--out", str(out_dir)])

        assert exit_code == 0
        assert (out_dir / "errors.csv").is_file()
        assert (out_dir / "summary.csv").is_file()
        summary = json.loads((out_dir / "summary.json").read_text())
        assert summary["failures"] == 0
        assert capsys.readouterr().out.strip().startswith("slope: ")

    def test_incomplete_spec(self, temp_output_dir: Path, capsys):
        """Test that a spec missing required keys exits with 1."""
        spec_path = temp_output_dir / "spec.json"
        spec_path.write_text(json.dumps({"model_kind": "logistic", "graph": "sk"}))

        exit_code = main(
            ["-q", "experiment", "--spec", str(spec_path), "--out", str(temp_output_dir / "run")]
        )

        assert exit_code == 1
        assert "missing keys" in capsys.readouterr().err

    def test_missing_spec(self, temp_output_dir: Path):
        """Test that a missing spec file exits with 1."""
        exit_code = main(
            ["-q", "experiment", "--spec", str(temp_output_dir / "none.json"),
             "--out", str(temp_output_dir / "run")]
        )

        assert exit_code == 1
