"""
Exception hierarchy for netreg.

This module defines custom exceptions for error handling throughout
the sampling, estimation and experiment code. All exceptions inherit
from NetregError.
"""

from typing import Any, Optional

import numpy as np


class NetregError(Exception):
    """
    Base exception for all netreg errors.

    All custom exceptions in this package inherit from this class,
    allowing users to catch all package-specific errors with a single
    except clause.
    """

    pass


class DimensionError(NetregError, ValueError):
    """
    Exception raised when array shapes are inconsistent.

    This includes:
    - Design rows not matching the interaction matrix size
    - Parameter vectors of the wrong length
    - Non-square matrices where a square one is required
    """

    pass


class InvariantError(NetregError, ValueError):
    """
    Exception raised when a constructed value violates its invariant.

    This includes:
    - Asymmetric or non-zero-diagonal interaction matrices
    - Non-positive diagonal precision entries
    - Designs with n <= d
    - Logistic responses outside {-1, +1}
    """

    pass


class NotPositiveDefiniteError(NetregError):
    """
    Exception raised when a Cholesky factorization fails.

    Carries the interaction strength beta at which beta*A + D stopped
    being positive definite, when one applies.
    """

    def __init__(self, message: str, beta: Optional[float] = None) -> None:
        super().__init__(message)
        self.beta = beta


class RankDeficientError(NetregError):
    """
    Exception raised when the feature matrix is (numerically) rank deficient.

    This includes:
    - Singular X^T X
    - Condition number of X^T X at or above 1e12
    """

    pass


class GraphConstructionError(NetregError):
    """
    Exception raised when a random graph cannot be built.

    This includes:
    - Infeasible degree sequences (odd n * degree, degree >= n)
    - Exhausted pairing retries
    - Unknown graph specifications
    """

    pass


class ResourceLimitError(NetregError):
    """
    Exception raised when an exact computation would exceed desk-scale limits.

    This includes:
    - Enumerating the Ising joint distribution for n > 20
    """

    pass


class ConvergenceError(NetregError):
    """
    Exception raised when projected gradient descent hits its iteration cap.

    The best iterate seen (lowest stopping statistic) and the optional
    trace are attached so callers can still inspect the run.
    """

    def __init__(
        self,
        message: str,
        best_point: np.ndarray,
        best_grad_norm: float,
        iterations: int,
        trace: Any = None,
    ) -> None:
        super().__init__(message)
        self.best_point = best_point
        self.best_grad_norm = best_grad_norm
        self.iterations = iterations
        self.trace = trace


class ConfigurationError(NetregError, ValueError):
    """
    Exception raised for configuration errors.

    This includes:
    - Invalid parameter values
    - Missing required configuration
    - Experiment specs with unsorted or empty sample-size grids
    """

    pass


class SerializationError(NetregError):
    """
    Exception raised when reading or writing matrices and reports fails.

    This includes:
    - Missing or unreadable files
    - Malformed CSV headers or JSON envelopes
    - Shape mismatches between header and data
    """

    pass
