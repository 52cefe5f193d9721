"""
Projected gradient descent over a box.

Both estimators minimize a convex, smooth objective over a product of
intervals with a fixed step size. The stopping statistic is the norm of the
gradient mapping ``(x - P(x - eta * g)) / eta``: it equals the gradient norm
at interior points and vanishes at constrained optima on the boundary.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from netreg.config import PgdConfig
from netreg.exceptions import ConfigurationError, ConvergenceError, DimensionError
from netreg.utils.logging import get_logger


logger = get_logger(__name__)

# Oracle signature: point -> (objective value, gradient)
Oracle = Callable[[np.ndarray], Tuple[float, np.ndarray]]


def project_box(point: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """
    Euclidean projection onto the box [lower, upper] (componentwise clamp).

    Args:
        point: Vector to project.
        lower: Lower bounds.
        upper: Upper bounds.

    Returns:
        np.ndarray: Projected copy of ``point``.

    Raises:
        DimensionError: If the three vectors differ in shape.
        ValueError: If some lower bound exceeds its upper bound.
    """
    point = np.asarray(point, dtype=np.float64)
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    if point.shape != lower.shape or point.shape != upper.shape:
        raise DimensionError(
            f"Shape mismatch: point {point.shape}, lower {lower.shape}, upper {upper.shape}"
        )
    if np.any(lower > upper):
        raise ValueError("Box bounds violated: lower > upper in some coordinate")
    return np.clip(point, lower, upper)


@dataclass
class PgdTrace:
    """Per-iteration record: the evaluated point, its value and stopping statistic."""

    points: List[np.ndarray] = field(default_factory=list)
    values: List[float] = field(default_factory=list)
    grad_norms: List[float] = field(default_factory=list)

    def append(self, point: np.ndarray, value: float, grad_norm: float) -> None:
        """Record one evaluated iterate."""
        self.points.append(point.copy())
        self.values.append(value)
        self.grad_norms.append(grad_norm)

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class PgdResult:
    """
    Outcome of a converged projected gradient descent run.

    Attributes:
        point: Returned iterate (feasible).
        value: Objective value at ``point``.
        grad_norm: Projected-gradient norm at ``point`` (the stopping statistic).
        raw_grad_norm: Plain gradient norm at ``point``.
        gradient: Gradient at ``point``.
        iterations: Number of steps taken before ``point`` was accepted.
        step_size: Step size used.
        tolerance: Tolerance used.
        trace: Iterate history when ``record_trace`` was set.
    """

    point: np.ndarray
    value: float
    grad_norm: float
    raw_grad_norm: float
    gradient: np.ndarray
    iterations: int
    step_size: float
    tolerance: float
    trace: Optional[PgdTrace] = None


def pgd_minimize(
    objective: Oracle,
    init: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    config: PgdConfig,
) -> PgdResult:
    """
    Minimize a convex smooth objective over a box with fixed-step PGD.

    The initial point is projected first, so every evaluated iterate is
    feasible. The first iterate whose projected-gradient norm is at or
    below ``config.tolerance`` is returned.

    Args:
        objective: Callable returning (value, gradient) at a point.
        init: Starting point.
        lower: Box lower bounds.
        upper: Box upper bounds.
        config: Step size, tolerance and iteration cap (must be resolved).

    Returns:
        PgdResult: The accepted iterate and run statistics.

    Raises:
        ConfigurationError: If step size or tolerance is unset.
        ConvergenceError: If ``max_iters`` steps pass without meeting the
            tolerance; carries the iterate with the lowest statistic.
    """
    if not config.is_resolved:
        raise ConfigurationError("pgd_minimize needs an explicit step_size and tolerance")
    eta = float(config.step_size)  # type: ignore[arg-type]
    tolerance = float(config.tolerance)  # type: ignore[arg-type]

    x = project_box(init, lower, upper)
    trace = PgdTrace() if config.record_trace else None

    best_point = x.copy()
    best_norm = np.inf

    for iteration in range(config.max_iters + 1):
        value, grad = objective(x)
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != x.shape:
            raise DimensionError(f"Gradient shape {grad.shape} does not match point {x.shape}")

        x_next = project_box(x - eta * grad, lower, upper)
        stat = float(np.linalg.norm(x - x_next) / eta)

        if trace is not None:
            trace.append(x, float(value), stat)
        if stat < best_norm:
            best_norm = stat
            best_point = x.copy()

        if iteration % config.log_every == 0:
            logger.debug(f"PGD iter {iteration}: value={value:.10g}, proj_grad_norm={stat:.3e}")

        if stat <= tolerance:
            logger.debug(f"PGD converged after {iteration} iterations (norm {stat:.3e})")
            return PgdResult(
                point=x,
                value=float(value),
                grad_norm=stat,
                raw_grad_norm=float(np.linalg.norm(grad)),
                gradient=grad,
                iterations=iteration,
                step_size=eta,
                tolerance=tolerance,
                trace=trace,
            )

        if iteration == config.max_iters:
            break
        x = x_next

    raise ConvergenceError(
        f"Projected gradient descent did not reach tolerance {tolerance:.3e} in "
        f"{config.max_iters} iterations (best projected-gradient norm {best_norm:.3e})",
        best_point=best_point,
        best_grad_norm=float(best_norm),
        iterations=config.max_iters,
        trace=trace,
    )


@dataclass
class FitDiagnostics:
    """
    Summary of a projected gradient descent fit.

    Attributes:
        iterations: Steps taken.
        grad_norm: Projected-gradient norm at the returned point.
        raw_grad_norm: Plain gradient norm at the returned point.
        objective: Minimized objective (-LPL or the negative log-likelihood).
        step_size: Step size used.
        tolerance: Tolerance used.
        runtime_ms: Wall-clock time of the fit.
        min_curvature: lambda_min of the objective's Hessian at the returned point.
        flat_coordinates: Names of coordinates whose gradient and Hessian row vanish.
    """

    iterations: int
    grad_norm: float
    raw_grad_norm: float
    objective: float
    step_size: float
    tolerance: float
    runtime_ms: float = 0.0
    min_curvature: Optional[float] = None
    flat_coordinates: List[str] = field(default_factory=list)

    @classmethod
    def from_result(cls, result: PgdResult, runtime_ms: float) -> "FitDiagnostics":
        """Copy the run statistics out of a PgdResult."""
        return cls(
            iterations=result.iterations,
            grad_norm=result.grad_norm,
            raw_grad_norm=result.raw_grad_norm,
            objective=result.value,
            step_size=result.step_size,
            tolerance=result.tolerance,
            runtime_ms=runtime_ms,
        )

    def to_dict(self) -> dict:
        """Serialize to a dictionary."""
        return {
            "iterations": self.iterations,
            "grad_norm": self.grad_norm,
            "raw_grad_norm": self.raw_grad_norm,
            "objective": self.objective,
            "step_size": self.step_size,
            "tolerance": self.tolerance,
            "runtime_ms": self.runtime_ms,
            "min_curvature": self.min_curvature,
            "flat_coordinates": list(self.flat_coordinates),
        }

