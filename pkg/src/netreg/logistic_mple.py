"""
Log-pseudolikelihood estimation for the logistic (Ising) model.

With t_i = theta^T x_i + beta m_i(y), the normalized log-pseudolikelihood is

    LPL(theta, beta) = -ln 2 + (1/n) sum_i [y_i t_i - ln cosh(t_i)],

which is concave. The fit maximizes it over the parameter box with
projected gradient descent on -LPL, starting from (theta, beta) = (0, 0).
"""

import time
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from netreg.config import PgdConfig
from netreg.exceptions import DimensionError, InvariantError
from netreg.model_core import (
    Dataset,
    InteractionMatrix,
    LogisticParams,
    ParameterBox,
    RegressionDesign,
)
from netreg.optimize import FitDiagnostics, pgd_minimize
from netreg.sampling import ising_exact_distribution
from netreg.utils.logging import get_logger


logger = get_logger(__name__)

LN2 = float(np.log(2.0))

STEP_RULES = ("smoothness", "sqrt_smoothness")


def log_cosh(t: np.ndarray) -> np.ndarray:
    """Overflow-free ln cosh(t) = |t| + ln(1 + e^(-2|t|)) - ln 2."""
    abs_t = np.abs(t)
    return abs_t + np.log1p(np.exp(-2.0 * abs_t)) - LN2


def _require_logistic(params: LogisticParams, dataset: Dataset) -> None:
    if dataset.model_kind != "logistic":
        raise InvariantError("Expected a logistic dataset")
    if params.d != dataset.d:
        raise DimensionError(f"theta has length {params.d} but the dataset has d={dataset.d}")


def _local_fields(params: LogisticParams, dataset: Dataset) -> np.ndarray:
    return dataset.design.x @ params.theta + params.beta * dataset.magnetizations


def _augmented_features(dataset: Dataset) -> np.ndarray:
    """Rows (x_i, m_i(y))."""
    return np.column_stack([dataset.design.x, dataset.magnetizations])


def lpl_value(params: LogisticParams, dataset: Dataset) -> float:
    """Normalized log-pseudolikelihood at ``params``."""
    _require_logistic(params, dataset)
    t = _local_fields(params, dataset)
    return float(-LN2 + np.mean(dataset.y * t - log_cosh(t)))


def lpl_gradient(params: LogisticParams, dataset: Dataset) -> np.ndarray:
    """
    Gradient of LPL, ordered (theta_1..theta_d, beta).

    theta_k: (1/n) sum_i (y_i - tanh t_i) x_ik
    beta:    (1/n) sum_i (y_i - tanh t_i) m_i
    """
    _require_logistic(params, dataset)
    residual = dataset.y - np.tanh(_local_fields(params, dataset))
    return _augmented_features(dataset).T @ residual / dataset.n


def lpl_hessian(params: LogisticParams, dataset: Dataset) -> np.ndarray:
    """H = -(1/n) sum_i sech^2(t_i) X_i X_i^T with X_i = (x_i, m_i); negative semidefinite."""
    _require_logistic(params, dataset)
    weights = 1.0 - np.tanh(_local_fields(params, dataset)) ** 2
    z = _augmented_features(dataset)
    hessian = -(z.T @ (weights[:, None] * z)) / dataset.n
    return 0.5 * (hessian + hessian.T)


def min_curvature(params: LogisticParams, dataset: Dataset) -> float:
    """Smallest eigenvalue of -H at ``params``."""
    return float(np.linalg.eigvalsh(-lpl_hessian(params, dataset))[0])


def smoothness_bound(dataset: Dataset, box: ParameterBox) -> float:
    """
    Upper bound on lambda_max(-H) over the box.

    Takes the larger of d Theta^2 + 1 and lambda_max((1/n) sum_i X_i X_i^T);
    the second bounds -H everywhere because sech^2 <= 1.
    """
    z = _augmented_features(dataset)
    data_bound = float(np.linalg.eigvalsh(z.T @ z / dataset.n)[-1])
    return max(dataset.d * box.theta_bound**2 + 1.0, data_bound)


def default_step_size(dataset: Dataset, box: ParameterBox, step_rule: str = "smoothness") -> float:
    """
    Step size for the logistic fit.

    ``"smoothness"`` gives 1/L with L from :func:`smoothness_bound`;
    ``"sqrt_smoothness"`` gives 1/sqrt(d Theta^2 + 1).
    """
    if step_rule == "smoothness":
        return 1.0 / smoothness_bound(dataset, box)
    if step_rule == "sqrt_smoothness":
        return 1.0 / float(np.sqrt(dataset.d * box.theta_bound**2 + 1.0))
    raise ValueError(f"Unknown step_rule {step_rule!r} (expected one of {', '.join(STEP_RULES)})")


def fit_logistic_mple(
    dataset: Dataset,
    box: ParameterBox,
    config: Optional[PgdConfig] = None,
    step_rule: str = "smoothness",
) -> Tuple[LogisticParams, FitDiagnostics]:
    """
    Maximize the log-pseudolikelihood over the box.

    Unset step size defaults to :func:`default_step_size`; unset tolerance
    to 1/sqrt(n).

    Args:
        dataset: Logistic dataset.
        box: Parameter box [-Theta, Theta]^d x [-B, B].
        config: Optimizer settings.
        step_rule: Default step-size rule when ``config.step_size`` is unset.

    Returns:
        (LogisticParams, FitDiagnostics)

    Raises:
        ConvergenceError: If the iteration cap is reached first.
    """
    if dataset.model_kind != "logistic":
        raise InvariantError("fit_logistic_mple needs a logistic dataset")
    config = (config or PgdConfig()).resolved(
        step_size=default_step_size(dataset, box, step_rule),
        tolerance=1.0 / np.sqrt(dataset.n),
    )
    lower, upper = box.logistic_bounds(dataset.d)

    def objective(vector: np.ndarray) -> Tuple[float, np.ndarray]:
        params = LogisticParams.from_vector(vector)
        return -lpl_value(params, dataset), -lpl_gradient(params, dataset)

    started = time.perf_counter()
    result = pgd_minimize(objective, np.zeros(dataset.d + 1), lower, upper, config)
    runtime_ms = (time.perf_counter() - started) * 1000.0

    fitted = LogisticParams.from_vector(result.point)
    diagnostics = FitDiagnostics.from_result(result, runtime_ms)
    diagnostics.min_curvature = min_curvature(fitted, dataset)

    logger.debug(
        f"Logistic MPLE: n={dataset.n}, iters={result.iterations}, "
        f"beta={fitted.beta:.4f}, proj_grad_norm={result.grad_norm:.3e}"
    )
    return fitted, diagnostics


@dataclass(frozen=True)
class GradientMoments:
    """
    Exact second moments of the scaled pseudolikelihood gradient at a point.

    Attributes:
        beta_moment: E[(n dLPL/dbeta)^2].
        theta_moment: sum_k E[(n dLPL/dtheta_k)^2].
        beta_ceiling: (12 + 4B) n.
        theta_ceiling: (4 + 4B) M^2 d n.
    """

    beta_moment: float
    theta_moment: float
    beta_ceiling: float
    theta_ceiling: float

    @property
    def within_bounds(self) -> bool:
        """True when both moments sit below their ceilings."""
        return self.beta_moment <= self.beta_ceiling and self.theta_moment <= self.theta_ceiling


def exact_gradient_moments(
    params: LogisticParams,
    design: RegressionDesign,
    a: InteractionMatrix,
    beta_bound: Optional[float] = None,
) -> GradientMoments:
    """
    Second moments of n * grad LPL at ``params``, exact over all 2^n configurations.

    B defaults to |beta|; M is the largest absolute feature entry.

    Raises:
        ResourceLimitError: If n > 20.
    """
    distribution = ising_exact_distribution(params, design, a)
    spins = distribution.configs
    m = spins @ a.a
    t = design.x @ params.theta + params.beta * m
    residual = spins - np.tanh(t)

    scaled_beta = np.sum(residual * m, axis=1)
    scaled_theta = residual @ design.x

    n, d = design.n, design.d
    b = abs(params.beta) if beta_bound is None else float(beta_bound)
    big_m = design.feature_bound
    return GradientMoments(
        beta_moment=float(distribution.expectation(scaled_beta**2)),
        theta_moment=float(distribution.expectation(np.sum(scaled_theta**2, axis=1))),
        beta_ceiling=(12.0 + 4.0 * b) * n,
        theta_ceiling=(4.0 + 4.0 * b) * big_m**2 * d * n,
    )
