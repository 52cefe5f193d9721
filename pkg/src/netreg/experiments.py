"""
Consistency-rate experiments.

For every (n, replica) cell the harness draws a fresh interaction matrix
and design, generates ONE dependent response vector, fits the estimator and
records the l2 error of (theta, beta). Cells are independent jobs with
seeds derived from (seed, n, replica); results are folded in (n, replica)
order, so the report does not depend on how many jobs ran them.
"""

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from netreg.config import ExperimentSpec, ValidatorConfig
from netreg.exceptions import NetregError
from netreg.interaction import build_interaction, validate_assumptions
from netreg.linear_mle import fit_linear_mle, ols_estimate
from netreg.logistic_mple import fit_logistic_mple
from netreg.model_core import (
    Dataset,
    LinearParams,
    LogisticParams,
    ParameterBox,
    RegressionDesign,
)
from netreg.sampling import gaussian_sample, ising_gibbs_sample
from netreg.utils.logging import get_logger
from netreg.utils.random import derive_seed, make_rng


# Type alias for progress callback: (completed cells, total cells)
ProgressCallback = Callable[[int, int], None]

# Child-stream keys under each cell seed
GRAPH_STREAM, FEATURE_STREAM, RESPONSE_STREAM = 0, 1, 2


@dataclass(frozen=True)
class CellResult:
    """
    Outcome of one (n, replica) fit.

    ``error`` is NaN and ``failed`` is set when sampling or fitting raised;
    ``message`` then carries the reason.
    """

    n: int
    replica: int
    seed: int
    error: float
    iters: int
    runtime_ms: float
    failed: bool = False
    assumptions_ok: bool = True
    ols_error: float = float("nan")
    kappa_gap: float = float("nan")
    message: str = ""

    def to_dict(self) -> dict:
        """Serialize to a dictionary (one errors.csv row)."""
        return {
            "n": self.n,
            "replica": self.replica,
            "seed": self.seed,
            "error": self.error,
            "iters": self.iters,
            "runtime_ms": self.runtime_ms,
            "failed": self.failed,
            "assumptions_ok": self.assumptions_ok,
            "ols_error": self.ols_error,
            "kappa_gap": self.kappa_gap,
        }


@dataclass(frozen=True)
class SizeSummary:
    """Error quantiles over the successful replicas at one n."""

    n: int
    median: float
    q25: float
    q75: float
    failures: int
    assumption_flags: int

    def to_dict(self) -> dict:
        """Serialize to a dictionary (one summary.csv row)."""
        return {
            "n": self.n,
            "median": self.median,
            "q25": self.q25,
            "q75": self.q75,
            "failures": self.failures,
            "assumption_flags": self.assumption_flags,
        }


@dataclass
class RateReport:
    """
    Aggregated experiment output.

    Attributes:
        spec: The experiment that produced it.
        cells: Per-(n, replica) results ordered by (n, replica).
        summaries: Per-n median and quartiles.
        slope: Least-squares slope of ln(median error) on ln(n); None when
            fewer than two sample sizes have a positive finite median.
    """

    spec: ExperimentSpec
    cells: List[CellResult] = field(default_factory=list)
    summaries: List[SizeSummary] = field(default_factory=list)
    slope: Optional[float] = None

    @property
    def failure_count(self) -> int:
        """Total number of failed cells."""
        return sum(cell.failed for cell in self.cells)

    def errors(self) -> np.ndarray:
        """Error column in (n, replica) order."""
        return np.array([cell.error for cell in self.cells])

    def median_by_n(self) -> Dict[int, float]:
        """Median error keyed by n."""
        return {summary.n: summary.median for summary in self.summaries}


def fit_log_log_slope(sizes: np.ndarray, medians: np.ndarray) -> Optional[float]:
    """Least-squares slope of ln(median) against ln(n) over usable points."""
    sizes = np.asarray(sizes, dtype=np.float64)
    medians = np.asarray(medians, dtype=np.float64)
    usable = np.isfinite(medians) & (medians > 0)
    if np.count_nonzero(usable) < 2:
        return None
    slope, _ = np.polyfit(np.log(sizes[usable]), np.log(medians[usable]), deg=1)
    return float(slope)


def summarize(spec: ExperimentSpec, cells: List[CellResult]) -> RateReport:
    """Fold ordered cell results into a RateReport."""
    summaries = []
    for n in spec.n_grid:
        at_n = [cell for cell in cells if cell.n == n]
        errors = np.array([cell.error for cell in at_n if not cell.failed])
        if errors.size:
            q25, median, q75 = (float(v) for v in np.quantile(errors, [0.25, 0.5, 0.75]))
        else:
            q25 = median = q75 = float("nan")
        summaries.append(
            SizeSummary(
                n=n,
                median=median,
                q25=q25,
                q75=q75,
                failures=sum(cell.failed for cell in at_n),
                assumption_flags=sum(not cell.assumptions_ok for cell in at_n),
            )
        )

    slope = fit_log_log_slope(
        np.array([s.n for s in summaries]), np.array([s.median for s in summaries])
    )
    return RateReport(spec=spec, cells=list(cells), summaries=summaries, slope=slope)


def generate_design(
    model_kind: str,
    n: int,
    d: int,
    seed: int,
    feature_bound: float = 3.0,
    d_diag: float = 1.0,
) -> RegressionDesign:
    """
    Draw an n x d design with i.i.d. standard normal features.

    Logistic features are clamped to [-feature_bound, feature_bound]; linear
    designs get the constant diagonal D = d_diag * I.
    """
    x = make_rng(seed).standard_normal((n, d))
    if model_kind == "logistic":
        return RegressionDesign(x=np.clip(x, -feature_bound, feature_bound))
    return RegressionDesign.with_constant_d(x, d_diag)


def run_cell(spec: ExperimentSpec, n: int, replica: int) -> CellResult:
    """
    Generate one dependent sample for (n, replica), fit it and score the fit.

    Package errors (non-PD precision, failed graph construction, iteration
    cap) are caught and recorded; the cell is then marked failed.
    """
    cell_seed = derive_seed(spec.seed, n, replica)
    box = ParameterBox(theta_bound=spec.theta_bound, beta_bound=spec.beta_bound)
    theta0 = np.array(spec.theta0)
    truth = np.concatenate([theta0, [spec.beta0]])

    started = time.perf_counter()
    assumptions_ok = True
    try:
        a = build_interaction(spec.graph, n, derive_seed(cell_seed, GRAPH_STREAM))
        design = generate_design(
            spec.model_kind,
            n,
            spec.d,
            derive_seed(cell_seed, FEATURE_STREAM),
            feature_bound=spec.feature_bound,
            d_diag=spec.d_diag,
        )
        response_seed = derive_seed(cell_seed, RESPONSE_STREAM)

        if spec.model_kind == "logistic":
            params = LogisticParams(theta=theta0, beta=spec.beta0)
            gibbs = replace(spec.gibbs, n_samples=1, seed=response_seed)
            y = ising_gibbs_sample(params, design, a, gibbs)[0]
        else:
            truth_params = LinearParams.at_truth(theta0, spec.beta0)
            y = gaussian_sample(truth_params, design, a, n_samples=1, seed=response_seed)[0]

        if spec.validate:
            report = validate_assumptions(
                a, design, box, spec.model_kind, config=ValidatorConfig(frob_c=spec.frob_c)
            )
            assumptions_ok = report.overall

        dataset = Dataset(design=design, interaction=a, y=y, model_kind=spec.model_kind)
        ols_error = kappa_gap = float("nan")
        if spec.model_kind == "logistic":
            fitted, diagnostics = fit_logistic_mple(dataset, box, spec.pgd)
            estimate = fitted.to_vector()
        else:
            fitted_linear, diagnostics = fit_linear_mle(dataset, box, spec.pgd)
            estimate = np.concatenate([fitted_linear.theta, [fitted_linear.beta]])
            kappa_gap = float(
                np.linalg.norm(fitted_linear.kappa - fitted_linear.beta * fitted_linear.theta)
            )
            if spec.record_ols:
                ols_error = float(np.linalg.norm(ols_estimate(design, y) - theta0))

        return CellResult(
            n=n,
            replica=replica,
            seed=cell_seed,
            error=float(np.linalg.norm(estimate - truth)),
            iters=diagnostics.iterations,
            runtime_ms=(time.perf_counter() - started) * 1000.0,
            assumptions_ok=assumptions_ok,
            ols_error=ols_error,
            kappa_gap=kappa_gap,
        )
    except NetregError as e:
        return CellResult(
            n=n,
            replica=replica,
            seed=cell_seed,
            error=float("nan"),
            iters=0,
            runtime_ms=(time.perf_counter() - started) * 1000.0,
            failed=True,
            assumptions_ok=assumptions_ok,
            message=str(e),
        )


class ConsistencyExperiment:
    """
    Orchestrates the cells of one experiment spec.

    Example:
        >>> experiment = ConsistencyExperiment(jobs=4)
        >>> report = experiment.run(spec)
        >>> print(report.slope)
    """

    def __init__(self, jobs: int = 1) -> None:
        """
        Initialize the runner.

        Args:
            jobs: Parallel workers (joblib ``n_jobs``); 1 runs in-process.
        """
        self._logger = get_logger(__name__)
        self._jobs = jobs

    def run(
        self,
        spec: ExperimentSpec,
        progress_callback: Optional[ProgressCallback] = None,
    ) -> RateReport:
        """
        Run every (n, replica) cell and aggregate.

        Args:
            spec: Experiment specification.
            progress_callback: Called as (completed, total) after each n
                when running in-process.

        Returns:
            RateReport: Per-cell errors, per-n summaries and the slope.
        """
        grid: List[Tuple[int, int]] = [
            (n, replica) for n in spec.n_grid for replica in range(spec.replicas)
        ]
        total = len(grid)
        self._logger.info(
            f"Running {spec.model_kind} experiment on graph {spec.graph}: "
            f"{len(spec.n_grid)} sizes x {spec.replicas} replicas, jobs={self._jobs}"
        )

        if self._jobs == 1:
            cells: List[CellResult] = []
            for n in spec.n_grid:
                cells.extend(run_cell(spec, n, replica) for replica in range(spec.replicas))
                self._logger.info(f"Finished n={n}")
                if progress_callback:
                    progress_callback(len(cells), total)
        else:
            # Parallel returns results in submission order
            cells = Parallel(n_jobs=self._jobs)(
                delayed(run_cell)(spec, n, replica) for n, replica in grid
            )

        for cell in cells:
            if cell.failed:
                self._logger.warning(
                    f"Cell n={cell.n}, replica={cell.replica} failed: {cell.message}"
                )

        report = summarize(spec, cells)
        slope = "undefined" if report.slope is None else f"{report.slope:.3f}"
        self._logger.info(f"Log-log slope of median error: {slope}")
        return report


def run_consistency(spec: ExperimentSpec, jobs: int = 1) -> RateReport:
    """Run a consistency experiment; see :class:`ConsistencyExperiment`."""
    return ConsistencyExperiment(jobs=jobs).run(spec)
