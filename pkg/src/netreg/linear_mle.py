"""
Reparametrized maximum-likelihood estimation for the linear (Gaussian) model.

Responses follow y ~ N(mu, Sigma) with precision beta A + D. Writing
kappa = beta theta and treating (theta, beta, kappa) as free parameters,
the negative log-likelihood

    NLL = 1/2 y^T (beta A + D) y - y^T A X kappa - y^T D X theta
          + (n/2) ln 2 pi - 1/2 logdet(beta A + D) + 1/2 b^T Sigma b,
    b = A X kappa + D X theta,  mu = Sigma b,

is convex. Gradient and Hessian are closed-form Gaussian moments of
(-1/2 z^T A z, X^T D z, X^T A z) under N(mu, Sigma).

Two interchangeable precision backends are provided. CholeskyFactor
factors beta A + D directly. SpectralFactor reuses one eigendecomposition
of D^-1/2 A D^-1/2 across all beta, which makes every fit iteration O(n^2).
"""

import time
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Protocol, Tuple

import numpy as np
from scipy import linalg

from netreg.config import PgdConfig
from netreg.exceptions import DimensionError, InvariantError, NotPositiveDefiniteError
from netreg.model_core import (
    Dataset,
    InteractionMatrix,
    LinearParams,
    ParameterBox,
    RegressionDesign,
    quadratic_gaussian_moments,
)
from netreg.optimize import FitDiagnostics, pgd_minimize
from netreg.sampling import precision_matrix
from netreg.utils.logging import get_logger


logger = get_logger(__name__)

BACKENDS = ("cholesky", "spectral")

# Grid used to confirm beta A + D stays positive definite across [-B, B]
PD_GRID_POINTS = 21

LOG_2PI = float(np.log(2.0 * np.pi))


def _not_pd(beta: float) -> NotPositiveDefiniteError:
    return NotPositiveDefiniteError(
        f"beta*A + D is not positive definite at beta={beta:.6g}; shrink beta_bound",
        beta=beta,
    )


class PrecisionFactor(Protocol):
    """Sigma = (beta A + D)^-1 at one beta, as used by the objective."""

    beta: float
    logdet: float

    def solve(self, rhs: np.ndarray) -> np.ndarray: ...

    def trace_a_sigma(self) -> float: ...

    def trace_a_sigma_sq(self) -> float: ...


class CholeskyFactor:
    """
    Sigma = (beta A + D)^-1 held through a Cholesky factor.

    Traces involving A Sigma solve against every column of A (O(n^3)),
    computed once on first use.
    """

    def __init__(self, a: InteractionMatrix, d_diag: np.ndarray, beta: float) -> None:
        self.beta = float(beta)
        self._a = a.a
        try:
            self._factor = linalg.cho_factor(precision_matrix(self.beta, a, d_diag), lower=True)
        except linalg.LinAlgError as e:
            raise _not_pd(self.beta) from e
        self.logdet = float(2.0 * np.sum(np.log(np.diagonal(self._factor[0]))))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Return Sigma @ rhs."""
        return linalg.cho_solve(self._factor, rhs)

    @cached_property
    def _sigma_a(self) -> np.ndarray:
        return self.solve(self._a)

    def trace_a_sigma(self) -> float:
        """tr(A Sigma)."""
        return float(np.trace(self._sigma_a))

    def trace_a_sigma_sq(self) -> float:
        """tr((A Sigma)^2)."""
        return float(np.sum(self._sigma_a * self._sigma_a.T))


class SpectralDecomposition:
    """
    Eigendecomposition of A~ = D^-1/2 A D^-1/2, shared by every beta.

    beta A + D = D^1/2 (I + beta A~) D^1/2, so positive definiteness,
    log-determinants and traces reduce to sums over the eigenvalues of A~.
    """

    def __init__(self, a: InteractionMatrix, d_diag: np.ndarray) -> None:
        self.scale = 1.0 / np.sqrt(d_diag)
        scaled = self.scale[:, None] * a.a * self.scale[None, :]
        self.eigenvalues, self.eigenvectors = linalg.eigh(0.5 * (scaled + scaled.T))
        self.log_det_d = float(np.sum(np.log(d_diag)))

    def factor(self, beta: float) -> "SpectralFactor":
        """Precision factor at ``beta``."""
        return SpectralFactor(self, beta)

    def pd_interval(self) -> Tuple[float, float]:
        """Open interval of beta values where beta A + D is positive definite."""
        lam_min, lam_max = float(self.eigenvalues[0]), float(self.eigenvalues[-1])
        lower = -1.0 / lam_max if lam_max > 0 else -np.inf
        upper = -1.0 / lam_min if lam_min < 0 else np.inf
        return lower, upper


class SpectralFactor:
    """Sigma at one beta, expressed through a SpectralDecomposition."""

    def __init__(self, decomposition: SpectralDecomposition, beta: float) -> None:
        self.beta = float(beta)
        self._decomposition = decomposition
        self._shifted = 1.0 + self.beta * decomposition.eigenvalues
        if not np.all(self._shifted > 0.0):
            raise _not_pd(self.beta)
        self.logdet = float(decomposition.log_det_d + np.sum(np.log(self._shifted)))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Return Sigma @ rhs."""
        rhs = np.asarray(rhs, dtype=np.float64)
        u = self._decomposition.eigenvectors
        scale = self._decomposition.scale
        if rhs.ndim == 1:
            return scale * (u @ ((u.T @ (scale * rhs)) / self._shifted))
        inner = (u.T @ (scale[:, None] * rhs)) / self._shifted[:, None]
        return scale[:, None] * (u @ inner)

    def trace_a_sigma(self) -> float:
        """tr(A Sigma) = sum lambda / (1 + beta lambda)."""
        return float(np.sum(self._decomposition.eigenvalues / self._shifted))

    def trace_a_sigma_sq(self) -> float:
        """tr((A Sigma)^2) = sum (lambda / (1 + beta lambda))^2."""
        return float(np.sum((self._decomposition.eigenvalues / self._shifted) ** 2))


@dataclass(frozen=True)
class GaussianMoments:
    """
    Mean and covariance of N((beta A + D)^-1 b, (beta A + D)^-1).

    Attributes:
        factor: Precision factor holding Sigma.
        b: A X kappa + D X theta.
        mu: Sigma b.
    """

    factor: PrecisionFactor
    b: np.ndarray
    mu: np.ndarray

    @property
    def logdet(self) -> float:
        """log det(beta A + D)."""
        return float(self.factor.logdet)


class LinearObjective:
    """
    Negative log-likelihood of one linear dataset, with cached products.

    Example:
        >>> objective = LinearObjective(dataset, backend="spectral")
        >>> value, grad = objective.value_and_gradient(params.to_vector())
    """

    def __init__(self, dataset: Dataset, backend: str = "cholesky") -> None:
        if dataset.model_kind != "linear":
            raise InvariantError("Expected a linear dataset")
        if backend not in BACKENDS:
            raise ValueError(f"Unknown backend {backend!r} (expected one of {', '.join(BACKENDS)})")

        self.dataset = dataset
        self.backend = backend
        self._interaction = dataset.interaction
        self._d_diag = dataset.design.require_d_diag()
        x = dataset.design.x
        y = dataset.y

        self._ax = self._interaction.a @ x
        self._dx = self._d_diag[:, None] * x
        self._y_a_y = float(y @ dataset.magnetizations)
        self._y_d_y = float(y @ (self._d_diag * y))
        self._xt_a_y = self._ax.T @ y
        self._xt_d_y = self._dx.T @ y

        self._spectral: Optional[SpectralDecomposition] = None
        if backend == "spectral":
            self._spectral = SpectralDecomposition(self._interaction, self._d_diag)
        self._cached: Optional[Tuple[float, PrecisionFactor]] = None

    @property
    def d(self) -> int:
        """Feature dimension."""
        return self.dataset.d

    def factor(self, beta: float) -> PrecisionFactor:
        """Precision factor at ``beta`` (the last one is cached)."""
        beta = float(beta)
        if self._cached is not None and self._cached[0] == beta:
            return self._cached[1]
        if self._spectral is not None:
            factor: PrecisionFactor = self._spectral.factor(beta)
        else:
            factor = CholeskyFactor(self._interaction, self._d_diag, beta)
        self._cached = (beta, factor)
        return factor

    def moments(self, params: LinearParams) -> GaussianMoments:
        """Gaussian moments at ``params``."""
        if params.d != self.d:
            raise DimensionError(f"Parameters have d={params.d} but the dataset has d={self.d}")
        factor = self.factor(params.beta)
        b = self._ax @ params.kappa + self._dx @ params.theta
        return GaussianMoments(factor=factor, b=b, mu=factor.solve(b))

    def value(self, params: LinearParams) -> float:
        """Negative log-likelihood."""
        return self._value(params, self.moments(params))

    def _value(self, params: LinearParams, moments: GaussianMoments) -> float:
        n = self.dataset.n
        return float(
            0.5 * (params.beta * self._y_a_y + self._y_d_y)
            - params.kappa @ self._xt_a_y
            - params.theta @ self._xt_d_y
            + 0.5 * n * LOG_2PI
            - 0.5 * moments.logdet
            + 0.5 * moments.b @ moments.mu
        )

    def gradient(self, params: LinearParams) -> np.ndarray:
        """Gradient ordered (theta, beta, kappa)."""
        return self._gradient(params, self.moments(params))

    def _gradient(self, params: LinearParams, moments: GaussianMoments) -> np.ndarray:
        mu = moments.mu
        a_mu = self._interaction.a @ mu
        grad_theta = self._dx.T @ mu - self._xt_d_y
        grad_beta = 0.5 * self._y_a_y - 0.5 * moments.factor.trace_a_sigma() - 0.5 * mu @ a_mu
        grad_kappa = self._ax.T @ mu - self._xt_a_y
        return np.concatenate([grad_theta, [grad_beta], grad_kappa])

    def value_and_gradient(self, vector: np.ndarray) -> Tuple[float, np.ndarray]:
        """PGD oracle over the stacked parameter vector."""
        params = LinearParams.from_vector(vector)
        moments = self.moments(params)
        return self._value(params, moments), self._gradient(params, moments)

    def hessian(self, params: LinearParams) -> np.ndarray:
        """
        Hessian ordered (theta, beta, kappa); the covariance of
        (X^T D z, -1/2 z^T A z, X^T A z) under N(mu, Sigma).
        """
        moments = self.moments(params)
        factor = moments.factor
        d = self.d

        sigma_dx = factor.solve(self._dx)
        sigma_ax = factor.solve(self._ax)
        a_mu = self._interaction.a @ moments.mu
        sigma_a_mu = factor.solve(a_mu)

        hessian = np.empty((2 * d + 1, 2 * d + 1))
        theta, beta, kappa = slice(0, d), d, slice(d + 1, 2 * d + 1)
        hessian[theta, theta] = self._dx.T @ sigma_dx
        hessian[kappa, kappa] = self._ax.T @ sigma_ax
        hessian[theta, kappa] = self._dx.T @ sigma_ax
        hessian[kappa, theta] = hessian[theta, kappa].T
        hessian[beta, beta] = 0.5 * factor.trace_a_sigma_sq() + a_mu @ sigma_a_mu
        hessian[theta, beta] = -self._dx.T @ sigma_a_mu
        hessian[kappa, beta] = -self._ax.T @ sigma_a_mu
        hessian[beta, theta] = hessian[theta, beta]
        hessian[beta, kappa] = hessian[kappa, beta]
        return 0.5 * (hessian + hessian.T)


def nll_value(params: LinearParams, dataset: Dataset) -> float:
    """Negative log-likelihood at ``params``."""
    return LinearObjective(dataset).value(params)


def nll_gradient(params: LinearParams, dataset: Dataset) -> np.ndarray:
    """Gradient of the negative log-likelihood, ordered (theta, beta, kappa)."""
    return LinearObjective(dataset).gradient(params)


def nll_hessian(params: LinearParams, dataset: Dataset) -> np.ndarray:
    """Hessian of the negative log-likelihood (positive semidefinite)."""
    return LinearObjective(dataset).hessian(params)


def coordinate_names(d: int) -> List[str]:
    """Names of the stacked (theta, beta, kappa) coordinates."""
    return [f"theta_{k}" for k in range(d)] + ["beta"] + [f"kappa_{k}" for k in range(d)]


def check_box_positive_definite(objective: LinearObjective, box: ParameterBox) -> None:
    """
    Confirm beta A + D is positive definite on a grid over [-B, B].

    Raises:
        NotPositiveDefiniteError: At the first failing grid point.
    """
    for beta in np.linspace(-box.beta_bound, box.beta_bound, PD_GRID_POINTS):
        objective.factor(float(beta))


def estimate_smoothness(objective: LinearObjective, box: ParameterBox) -> float:
    """
    Numerical smoothness bound: twice the largest Hessian eigenvalue over sample points.

    Sample points take beta in {-B, 0, B} and (theta, kappa) at the origin and at
    the two box corners (Theta, +/- B Theta).
    """
    d = objective.d
    theta_corner = np.full(d, box.theta_bound)
    kappa_corner = np.full(d, box.kappa_bound)
    points = [
        (np.zeros(d), np.zeros(d)),
        (theta_corner, kappa_corner),
        (theta_corner, -kappa_corner),
    ]

    largest = 0.0
    for beta in (-box.beta_bound, 0.0, box.beta_bound):
        for theta, kappa in points:
            hessian = objective.hessian(LinearParams(theta=theta, beta=beta, kappa=kappa))
            largest = max(largest, float(np.linalg.eigvalsh(hessian)[-1]))
    return 2.0 * largest


def _flat_coordinates(gradient: np.ndarray, hessian: np.ndarray, d: int) -> List[str]:
    scale = max(1.0, float(np.max(np.abs(hessian))))
    names = coordinate_names(d)
    return [
        names[k]
        for k in range(gradient.shape[0])
        if abs(gradient[k]) <= 1e-12 * scale and np.max(np.abs(hessian[k])) <= 1e-12 * scale
    ]


def fit_linear_mle(
    dataset: Dataset,
    box: ParameterBox,
    config: Optional[PgdConfig] = None,
    backend: str = "spectral",
) -> Tuple[LinearParams, FitDiagnostics]:
    """
    Minimize the negative log-likelihood over [-Theta, Theta]^d x [-B, B] x [-B Theta, B Theta]^d.

    Positive definiteness of beta A + D is checked on a 21-point beta grid
    first. Unset step size defaults to 1 / :func:`estimate_smoothness`;
    unset tolerance to 1/sqrt(n). Coordinates along which the objective is
    flat (e.g. beta and kappa when A = 0) are listed in the diagnostics.

    Returns:
        (LinearParams, FitDiagnostics)

    Raises:
        NotPositiveDefiniteError: If the box's beta range leaves the PD region.
        ConvergenceError: If the iteration cap is reached first.
    """
    objective = LinearObjective(dataset, backend=backend)
    check_box_positive_definite(objective, box)

    config = config or PgdConfig()
    if config.step_size is None:
        smoothness = estimate_smoothness(objective, box)
        step_size = 1.0 / smoothness if smoothness > 0 else 1.0
    else:
        step_size = config.step_size
    config = config.resolved(step_size=step_size, tolerance=1.0 / np.sqrt(dataset.n))
    lower, upper = box.linear_bounds(dataset.d)

    started = time.perf_counter()
    result = pgd_minimize(
        objective.value_and_gradient, np.zeros(2 * dataset.d + 1), lower, upper, config
    )
    runtime_ms = (time.perf_counter() - started) * 1000.0

    fitted = LinearParams.from_vector(result.point)
    hessian = objective.hessian(fitted)
    diagnostics = FitDiagnostics.from_result(result, runtime_ms)
    diagnostics.min_curvature = float(np.linalg.eigvalsh(hessian)[0])
    diagnostics.flat_coordinates = _flat_coordinates(result.gradient, hessian, dataset.d)
    if diagnostics.flat_coordinates:
        logger.warning(
            f"Objective is flat along {', '.join(diagnostics.flat_coordinates)}; "
            "those coordinates are not identified"
        )

    logger.debug(
        f"Linear MLE: n={dataset.n}, iters={result.iterations}, "
        f"beta={fitted.beta:.4f}, proj_grad_norm={result.grad_norm:.3e}"
    )
    return fitted, diagnostics


@dataclass(frozen=True)
class ExpectedGradientNorms:
    """
    Expected squared gradient blocks at the data-generating point.

    Attributes:
        theta_term: E||grad_theta||^2 = ||Sigma^1/2 D X||_F^2.
        beta_term: E|grad_beta|^2 = Var(1/2 z^T A z).
        kappa_term: E||grad_kappa||^2 = ||Sigma^1/2 A X||_F^2.
    """

    theta_term: float
    beta_term: float
    kappa_term: float

    @property
    def total(self) -> float:
        """E||grad||^2."""
        return self.theta_term + self.beta_term + self.kappa_term


def expected_gradient_sq_norms(
    params: LinearParams,
    design: RegressionDesign,
    a: InteractionMatrix,
) -> ExpectedGradientNorms:
    """
    Closed-form expected squared gradient blocks when y is drawn at ``params``.

    ``params`` is taken as the truth, so kappa should equal beta * theta.
    Builds Sigma densely; intended for moderate n.
    """
    d_diag = design.require_d_diag()
    factor = CholeskyFactor(a, d_diag, params.beta)
    sigma = factor.solve(np.eye(design.n))
    sigma = 0.5 * (sigma + sigma.T)

    mu = factor.solve(a.a @ design.x @ params.kappa + d_diag * (design.x @ params.theta))
    dx = d_diag[:, None] * design.x
    ax = a.a @ design.x

    _, beta_term = quadratic_gaussian_moments(0.5 * a.a, np.zeros(design.n), 0.0, mu, sigma)
    return ExpectedGradientNorms(
        theta_term=float(np.trace(dx.T @ sigma @ dx)),
        beta_term=float(beta_term),
        kappa_term=float(np.trace(ax.T @ sigma @ ax)),
    )


def ols_estimate(design: RegressionDesign, y: np.ndarray) -> np.ndarray:
    """Least-squares theta, ignoring dependence between responses."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (design.n,):
        raise DimensionError(f"y must have length {design.n}, got shape {y.shape}")
    theta, *_ = linalg.lstsq(design.x, y)
    return theta
