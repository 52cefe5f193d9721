"""
Command-line interface for netreg.

Subcommands:
    check       Validate the structural assumptions on a generated instance
    sample      Draw one dependent dataset and write it as CSV
    fit         Fit the logistic MPLE or the linear MLE to a dataset CSV
    experiment  Run a consistency-rate experiment from a JSON spec

Usage:
    netreg check --model logistic --graph regular:4 --n 1000 --d 2
    netreg sample --model logistic --n 500 --d 2 --graph sk --theta 0.5,-0.3 --beta 0.2 \\
        --out data.csv --graph-out a.csv
    netreg fit --model logistic --data data.csv --graph a.csv --out fit.json
    netreg experiment --spec regular4.json --out runs/regular4 --jobs 4
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from netreg import __version__
from netreg.config import MODEL_KINDS, ExperimentSpec, GibbsConfig, PgdConfig, ValidatorConfig
from netreg.exceptions import NetregError, SerializationError
from netreg.experiments import (
    FEATURE_STREAM,
    GRAPH_STREAM,
    RESPONSE_STREAM,
    ConsistencyExperiment,
    generate_design,
)
from netreg.exporters.report_writer import emit_report
from netreg.interaction import build_interaction, validate_assumptions
from netreg.linear_mle import fit_linear_mle
from netreg.logistic_mple import fit_logistic_mple
from netreg.model_core import (
    Dataset,
    InteractionMatrix,
    LinearParams,
    LogisticParams,
    ParameterBox,
    RegressionDesign,
)
from netreg.sampling import gaussian_sample, ising_gibbs_sample
from netreg.utils.file_utils import ensure_directory, write_json
from netreg.utils.logging import get_logger, setup_logging
from netreg.utils.matrix_io import load_matrix, load_vector, save_matrix
from netreg.utils.random import derive_seed


# Exit code of `check` when some assumption fails
EXIT_CHECK_FAILED = 2


def _float_list(text: str) -> List[float]:
    """Parse "0.5,-0.3" into floats (argparse type)."""
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_model_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--model",
        choices=MODEL_KINDS,
        required=True,
        help="Response model",
    )


def _add_box_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--theta-bound",
        type=float,
        default=1.0,
        metavar="THETA",
        help="Box half-width for theta (default: 1.0)",
    )
    parser.add_argument(
        "--beta-bound",
        type=float,
        default=0.4,
        metavar="B",
        help="Box half-width for beta (default: 0.4)",
    )


def create_parser() -> argparse.ArgumentParser:
    """
    Create and configure the argument parser for the CLI.

    Returns:
        argparse.ArgumentParser: Configured argument parser.
    """
    parser = argparse.ArgumentParser(
        prog="netreg",
        description="Regression from a single sample of dependent responses.",
        epilog="Example: netreg experiment --spec regular4.json --out runs/regular4",
    )

    # Verbosity
    parser.add_argument(
        "-v", "--verbose",
        action="store_true",
        help="Enable verbose output",
    )
    parser.add_argument(
        "-q", "--quiet",
        action="store_true",
        help="Suppress all output except errors",
    )

    # Version
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__}",
    )

    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True

    # check
    check = subparsers.add_parser("check", help="Validate the assumptions on a generated instance")
    _add_model_arguments(check)
    check.add_argument("--graph", required=True, help="regular:K, sk, cw, gnp:P, zero or file:PATH")
    check.add_argument("--n", type=int, required=True, help="Number of units")
    check.add_argument("--d", type=int, default=2, help="Feature dimension (default: 2)")
    check.add_argument("--seed", type=int, default=0, help="Seed (default: 0)")
    _add_box_arguments(check)
    check.add_argument(
        "--frob-c",
        type=float,
        default=0.1,
        metavar="C",
        help="Threshold c in ||A||_F^2 >= c n (default: 0.1)",
    )
    check.add_argument(
        "--feature-bound",
        type=float,
        default=3.0,
        metavar="M",
        help="Clamp and support bound for logistic features (default: 3.0)",
    )
    check.add_argument(
        "--d-diag",
        type=float,
        default=1.0,
        metavar="VALUE",
        help="Constant diagonal of D for the linear model (default: 1.0)",
    )
    check.add_argument("--json", type=Path, metavar="PATH", help="Also write the report as JSON")

    # sample
    sample = subparsers.add_parser("sample", help="Draw one dependent dataset")
    _add_model_arguments(sample)
    sample.add_argument("--n", type=int, required=True, help="Number of units")
    sample.add_argument("--d", type=int, required=True, help="Feature dimension")
    sample.add_argument(
        "--graph", required=True, help="regular:K, sk, cw, gnp:P, zero or file:PATH"
    )
    sample.add_argument("--theta", type=_float_list, required=True, help="Comma-separated theta")
    sample.add_argument("--beta", type=float, required=True, help="Interaction strength")
    sample.add_argument("--seed", type=int, default=0, help="Seed (default: 0)")
    sample.add_argument("--out", type=Path, required=True, help="Dataset CSV (y, x1..xd)")
    sample.add_argument("--graph-out", type=Path, metavar="PATH", help="Also save A (CSV or JSON)")
    sample.add_argument(
        "--feature-bound",
        type=float,
        default=3.0,
        metavar="M",
        help="Clamp for logistic features (default: 3.0)",
    )
    sample.add_argument(
        "--d-diag",
        type=float,
        default=1.0,
        metavar="VALUE",
        help="Constant diagonal of D for the linear model (default: 1.0)",
    )
    sample.add_argument(
        "--burn-in", type=int, default=200, help="Gibbs burn-in sweeps (default: 200)"
    )
    sample.add_argument("--thinning", type=int, default=5, help="Gibbs thinning (default: 5)")

    # fit
    fit = subparsers.add_parser("fit", help="Fit a dataset CSV")
    _add_model_arguments(fit)
    fit.add_argument("--data", type=Path, required=True, help="Dataset CSV (y, x1..xd)")
    fit.add_argument("--graph", type=Path, required=True, help="Interaction matrix (CSV or JSON)")
    fit.add_argument(
        "--d-diag",
        metavar="PATH|VALUE",
        default="1.0",
        help="Diagonal of D for the linear model: vector file or constant (default: 1.0)",
    )
    _add_box_arguments(fit)
    fit.add_argument("--tol", type=float, help="Projected-gradient tolerance (default: 1/sqrt(n))")
    fit.add_argument("--step-size", type=float, help="Fixed step size (default: model rule)")
    fit.add_argument(
        "--max-iters",
        type=int,
        default=100_000,
        help="Iteration cap (default: 100000)",
    )
    fit.add_argument("--out", type=Path, required=True, help="Output JSON (params + diagnostics)")

    # experiment
    experiment = subparsers.add_parser("experiment", help="Run a consistency-rate experiment")
    experiment.add_argument("--spec", type=Path, required=True, help="Experiment spec JSON")
    experiment.add_argument("--out", type=Path, required=True, help="Output directory")
    experiment.add_argument("--jobs", type=int, default=1, help="Parallel workers (default: 1)")

    return parser


def parse_args(args: Optional[list] = None) -> argparse.Namespace:
    """
    Parse command-line arguments.

    Args:
        args: List of arguments to parse. If None, uses sys.argv.

    Returns:
        argparse.Namespace: Parsed arguments.
    """
    parser = create_parser()
    return parser.parse_args(args)


def validate_args(args: argparse.Namespace) -> None:
    """
    Validate parsed arguments.

    Args:
        args: Parsed command-line arguments.

    Raises:
        ValueError: If arguments are invalid.
        FileNotFoundError: If an input file doesn't exist.
    """
    if args.command in ("check", "sample"):
        if args.n < 2:
            raise ValueError("n must be at least 2")
        if args.d < 1:
            raise ValueError("d must be at least 1")
        if args.n <= args.d:
            raise ValueError("n must exceed d")
        if args.feature_bound <= 0:
            raise ValueError("Feature bound must be positive")
        if args.d_diag <= 0:
            raise ValueError("d-diag must be positive")

    if args.command == "sample" and len(args.theta) != args.d:
        raise ValueError(f"--theta has {len(args.theta)} entries, expected d={args.d}")

    if args.command in ("check", "fit"):
        if args.theta_bound <= 0 or args.beta_bound <= 0:
            raise ValueError("Box bounds must be positive")

    if args.command == "fit":
        for path in (args.data, args.graph):
            if not path.exists():
                raise FileNotFoundError(f"Input file not found: {path}")

    if args.command == "experiment":
        if not args.spec.exists():
            raise FileNotFoundError(f"Spec file not found: {args.spec}")
        if args.jobs == 0:
            raise ValueError("--jobs must be non-zero")


def build_config(args: argparse.Namespace) -> PgdConfig:
    """
    Build the optimizer configuration for ``fit`` from parsed arguments.

    Args:
        args: Parsed command-line arguments.

    Returns:
        PgdConfig: Optimizer settings; unset values take the model defaults.
    """
    return PgdConfig(
        step_size=args.step_size,
        tolerance=args.tol,
        max_iters=args.max_iters,
    )


def _instance_seeds(seed: int) -> Tuple[int, int, int]:
    return (
        derive_seed(seed, GRAPH_STREAM),
        derive_seed(seed, FEATURE_STREAM),
        derive_seed(seed, RESPONSE_STREAM),
    )


def write_dataset(y: np.ndarray, x: np.ndarray, path: Path) -> Path:
    """Write the dataset CSV with header y, x1..xd."""
    frame = pd.DataFrame(x, columns=[f"x{k + 1}" for k in range(x.shape[1])])
    frame.insert(0, "y", y)
    try:
        if path.parent:
            ensure_directory(path.parent)
        frame.to_csv(path, index=False)
    except OSError as e:
        raise SerializationError(f"Cannot write dataset to {path}: {e}") from e
    return path


def read_dataset(path: Path) -> Tuple[np.ndarray, np.ndarray]:
    """
    Read a dataset CSV into (y, x).

    Raises:
        SerializationError: If the file is malformed or has no feature columns.
    """
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, ValueError) as e:
        raise SerializationError(f"Cannot read dataset {path}: {e}") from e
    if "y" not in frame.columns or len(frame.columns) < 2:
        raise SerializationError(f"Dataset {path} needs a 'y' column and at least one feature")
    y = frame["y"].to_numpy(dtype=np.float64)
    x = frame.drop(columns="y").to_numpy(dtype=np.float64)
    return y, x


def _parse_d_diag(value: str, n: int) -> np.ndarray:
    """A constant when ``value`` parses as a number, else a vector file."""
    try:
        return np.full(n, float(value))
    except ValueError:
        return load_vector(Path(value))


def run_check(args: argparse.Namespace) -> int:
    """Run the ``check`` subcommand."""
    logger = get_logger(__name__)
    graph_seed, feature_seed, _ = _instance_seeds(args.seed)
    a = build_interaction(args.graph, args.n, graph_seed)
    design = generate_design(
        args.model,
        args.n,
        args.d,
        feature_seed,
        feature_bound=args.feature_bound,
        d_diag=args.d_diag,
    )
    box = ParameterBox(theta_bound=args.theta_bound, beta_bound=args.beta_bound)
    config = ValidatorConfig(
        frob_c=args.frob_c,
        feature_bound=args.feature_bound if args.model == "logistic" else None,
    )
    report = validate_assumptions(a, design, box, args.model, config=config)

    print(report.format_table())
    if args.json:
        write_json(report.to_dict(), args.json)
        logger.info(f"Wrote report: {args.json}")

    if not report.overall:
        logger.warning(f"Failed checks: {', '.join(report.failed())}")
        return EXIT_CHECK_FAILED
    return 0


def run_sample(args: argparse.Namespace) -> int:
    """Run the ``sample`` subcommand."""
    logger = get_logger(__name__)
    graph_seed, feature_seed, response_seed = _instance_seeds(args.seed)
    a = build_interaction(args.graph, args.n, graph_seed)
    design = generate_design(
        args.model,
        args.n,
        args.d,
        feature_seed,
        feature_bound=args.feature_bound,
        d_diag=args.d_diag,
    )
    theta = np.array(args.theta)

    if args.model == "logistic":
        gibbs = GibbsConfig(burn_in=args.burn_in, thinning=args.thinning, seed=response_seed)
        y = ising_gibbs_sample(LogisticParams(theta=theta, beta=args.beta), design, a, gibbs)[0]
    else:
        params = LinearParams.at_truth(theta, args.beta)
        y = gaussian_sample(params, design, a, n_samples=1, seed=response_seed)[0]

    write_dataset(y, design.x, args.out)
    logger.info(f"Wrote dataset: {args.out}")
    if args.graph_out:
        save_matrix(a.a, args.graph_out)
        logger.info(f"Wrote interaction matrix: {args.graph_out}")
    return 0


def run_fit(args: argparse.Namespace) -> int:
    """Run the ``fit`` subcommand; nothing is written when the fit fails."""
    logger = get_logger(__name__)
    y, x = read_dataset(args.data)
    a = InteractionMatrix(load_matrix(args.graph))
    box = ParameterBox(theta_bound=args.theta_bound, beta_bound=args.beta_bound)
    config = build_config(args)

    fitted: Union[LogisticParams, LinearParams]
    if args.model == "logistic":
        dataset = Dataset(design=RegressionDesign(x=x), interaction=a, y=y, model_kind="logistic")
        fitted, diagnostics = fit_logistic_mple(dataset, box, config)
    else:
        design = RegressionDesign(x=x, d_diag=_parse_d_diag(args.d_diag, x.shape[0]))
        dataset = Dataset(design=design, interaction=a, y=y, model_kind="linear")
        fitted, diagnostics = fit_linear_mle(dataset, box, config)

    write_json({"params": fitted.to_dict(), "diagnostics": diagnostics.to_dict()}, args.out)
    logger.info(
        f"Fit converged in {diagnostics.iterations} iterations "
        f"({diagnostics.runtime_ms:.1f} ms): beta={fitted.beta:.4f}"
    )
    logger.info(f"Wrote fit: {args.out}")
    return 0


def run_experiment(args: argparse.Namespace) -> int:
    """Run the ``experiment`` subcommand."""
    logger = get_logger(__name__)
    spec = ExperimentSpec.from_json(args.spec)

    def report_progress(done: int, total: int) -> None:
        logger.info(f"Progress: {done}/{total} cells")

    report = ConsistencyExperiment(jobs=args.jobs).run(spec, progress_callback=report_progress)
    paths = emit_report(report, args.out)

    if report.failure_count:
        logger.warning(f"{report.failure_count} cells failed; see {paths['errors']}")
    slope = "undefined" if report.slope is None else f"{report.slope:.3f}"
    print(f"slope: {slope}")
    return 0


COMMANDS = {
    "check": run_check,
    "sample": run_sample,
    "fit": run_fit,
    "experiment": run_experiment,
}


def main(args: Optional[list] = None) -> int:
    """
    Main entry point for the CLI.

    Args:
        args: List of arguments to parse. If None, uses sys.argv.

    Returns:
        int: Exit code (0 for success, 2 for a failed ``check``, 1 for errors).
    """
    try:
        parsed_args = parse_args(args)
        validate_args(parsed_args)

        # Setup logging
        if parsed_args.quiet:
            log_level = "ERROR"
        elif parsed_args.verbose:
            log_level = "DEBUG"
        else:
            log_level = "INFO"
        setup_logging(log_level, verbose=parsed_args.verbose)

        return COMMANDS[parsed_args.command](parsed_args)

    except NetregError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print("\nOperation cancelled.", file=sys.stderr)
        return 130
    except Exception as e:
        print(f"Unexpected error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
