"""
Domain types shared by the samplers, estimators and validators.

The interaction matrix, design, parameter box, parameter vectors and
datasets defined here are immutable once built: arrays are copied on the
way in and marked read-only, and cached norms never go stale.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import eigsh

from netreg.config import check_model_kind
from netreg.exceptions import DimensionError, InvariantError, NotPositiveDefiniteError
from netreg.utils.random import make_rng


# Below this size the spectral norm comes from a full symmetric eigensolve
_DENSE_EIG_LIMIT = 64
_LANCZOS_SEED = 0


def _frozen_copy(values: np.ndarray, dtype: type = np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


class InteractionMatrix:
    """
    Symmetric n x n interaction weights with an exactly zero diagonal.

    The spectral, infinity and squared Frobenius norms are computed once at
    construction. Use :meth:`from_upper_triangle` to build from the strict
    upper triangle, which yields bit-exact symmetry.

    Example:
        >>> a = InteractionMatrix.from_upper_triangle(np.triu(weights, 1))
        >>> a.norm_inf <= 1.0
    """

    def __init__(self, a: np.ndarray) -> None:
        """
        Wrap a dense matrix after checking its invariants.

        Raises:
            DimensionError: If ``a`` is not square.
            InvariantError: If ``a`` is not exactly symmetric, has a non-zero
                diagonal entry, or holds non-finite values.
        """
        matrix = np.asarray(a, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"Interaction matrix must be square, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise InvariantError("Interaction matrix holds non-finite values")
        if np.any(np.diagonal(matrix) != 0.0):
            raise InvariantError("Interaction matrix must have an exactly zero diagonal")
        if not np.array_equal(matrix, matrix.T):
            raise InvariantError("Interaction matrix must be exactly symmetric")

        self._a = _frozen_copy(matrix)
        self._norm_inf = float(np.max(np.sum(np.abs(self._a), axis=1))) if self.n else 0.0
        self._frob_sq = float(np.sum(self._a * self._a))
        self._norm2 = self._spectral_norm()

    @classmethod
    def from_upper_triangle(cls, upper: np.ndarray) -> "InteractionMatrix":
        """Build from the strict upper triangle of ``upper``; the rest is ignored."""
        strict = np.triu(np.asarray(upper, dtype=np.float64), k=1)
        return cls(strict + strict.T)

    @classmethod
    def zeros(cls, n: int) -> "InteractionMatrix":
        """Return the n x n zero interaction."""
        return cls(np.zeros((n, n)))

    def _spectral_norm(self) -> float:
        if self.n == 0 or not np.any(self._a):
            return 0.0
        if self.n <= _DENSE_EIG_LIMIT:
            return float(np.max(np.abs(np.linalg.eigvalsh(self._a))))
        # Lanczos on the dense matrix; one extremal eigenvalue is enough.
        # A fixed start vector keeps the result identical across runs.
        v0 = make_rng(_LANCZOS_SEED).standard_normal(self.n)
        top = eigsh(self._a, k=1, which="LM", v0=v0, return_eigenvectors=False)
        return float(abs(top[0]))

    @property
    def a(self) -> np.ndarray:
        """Read-only dense weights."""
        return self._a

    @property
    def n(self) -> int:
        """Number of units."""
        return int(self._a.shape[0])

    @property
    def norm2(self) -> float:
        """Spectral norm ||A||_2."""
        return self._norm2

    @property
    def norm_inf(self) -> float:
        """Maximum absolute row sum ||A||_inf."""
        return self._norm_inf

    @property
    def frob_sq(self) -> float:
        """Squared Frobenius norm ||A||_F^2."""
        return self._frob_sq

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues of A (full dense eigensolve, computed on first use)."""
        values = np.linalg.eigvalsh(self._a)
        values.flags.writeable = False
        return values

    def magnetizations(self, y: np.ndarray) -> np.ndarray:
        """Return m(y) = A y."""
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.n,):
            raise DimensionError(f"Expected a vector of length {self.n}, got shape {y.shape}")
        return self._a @ y

    def __repr__(self) -> str:
        return (
            f"InteractionMatrix(n={self.n}, norm2={self.norm2:.4g}, "
            f"norm_inf={self.norm_inf:.4g}, frob_sq={self.frob_sq:.4g})"
        )


@dataclass(frozen=True)
class RegressionDesign:
    """
    Feature matrix and, for the linear model, the known diagonal of D.

    Attributes:
        x: n x d feature matrix.
        d_diag: Positive length-n diagonal of D, or None for the logistic model.
    """

    x: np.ndarray
    d_diag: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        """Validate shapes and positivity, then freeze the arrays."""
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2:
            raise DimensionError(f"x must be a 2D array, got {x.ndim}D")
        n, d = x.shape
        if d < 1:
            raise DimensionError("x must have at least one column")
        if n <= d:
            raise InvariantError(f"Need n > d, got n={n}, d={d}")
        if not np.all(np.isfinite(x)):
            raise InvariantError("x holds non-finite values")
        object.__setattr__(self, "x", _frozen_copy(x))

        if self.d_diag is not None:
            d_diag = np.asarray(self.d_diag, dtype=np.float64).ravel()
            if d_diag.shape != (n,):
                raise DimensionError(f"d_diag must have length {n}, got {d_diag.shape[0]}")
            if not np.all(d_diag > 0) or not np.all(np.isfinite(d_diag)):
                raise InvariantError("d_diag entries must be finite and strictly positive")
            object.__setattr__(self, "d_diag", _frozen_copy(d_diag))

    @classmethod
    def with_constant_d(cls, x: np.ndarray, value: float = 1.0) -> "RegressionDesign":
        """Build a linear-model design with D = value * I."""
        x = np.asarray(x, dtype=np.float64)
        rows = x.shape[0] if x.ndim >= 1 else 0
        return cls(x=x, d_diag=np.full(rows, float(value)))

    @property
    def n(self) -> int:
        """Sample count."""
        return int(self.x.shape[0])

    @property
    def d(self) -> int:
        """Feature dimension."""
        return int(self.x.shape[1])

    @property
    def q(self) -> np.ndarray:
        """Empirical covariance Q = X^T X / n."""
        return self.x.T @ self.x / self.n

    @property
    def feature_bound(self) -> float:
        """Observed M = max |x_ik|."""
        return float(np.max(np.abs(self.x)))

    def require_d_diag(self) -> np.ndarray:
        """Return D's diagonal, raising if the design has none."""
        if self.d_diag is None:
            raise InvariantError("The linear model needs a design with d_diag")
        return self.d_diag

    def has_constant_d(self) -> bool:
        """True when D is a multiple of the identity."""
        return self.d_diag is not None and bool(np.all(self.d_diag == self.d_diag[0]))


@dataclass(frozen=True)
class ParameterBox:
    """
    Feasible set for estimation.

    Logistic: [-Theta, Theta]^d x [-B, B].
    Linear:   [-Theta, Theta]^d x [-B, B] x [-B*Theta, B*Theta]^d.
    """

    theta_bound: float
    beta_bound: float

    def __post_init__(self) -> None:
        """Validate bounds after initialization."""
        if not (self.theta_bound > 0 and np.isfinite(self.theta_bound)):
            raise InvariantError("theta_bound must be positive and finite")
        if not (self.beta_bound > 0 and np.isfinite(self.beta_bound)):
            raise InvariantError("beta_bound must be positive and finite")

    @property
    def kappa_bound(self) -> float:
        """Half-width B * Theta of the kappa box."""
        return self.beta_bound * self.theta_bound

    def logistic_bounds(self, d: int) -> Tuple[np.ndarray, np.ndarray]:
        """Lower/upper vectors for (theta, beta)."""
        upper = np.concatenate([np.full(d, self.theta_bound), [self.beta_bound]])
        return -upper, upper

    def linear_bounds(self, d: int) -> Tuple[np.ndarray, np.ndarray]:
        """Lower/upper vectors for (theta, beta, kappa)."""
        upper = np.concatenate(
            [np.full(d, self.theta_bound), [self.beta_bound], np.full(d, self.kappa_bound)]
        )
        return -upper, upper

    def contains(self, params: Union["LogisticParams", "LinearParams"]) -> bool:
        """True when ``params`` lies in the box (closed)."""
        d = params.theta.shape[0]
        vector = params.to_vector()
        if isinstance(params, LinearParams):
            lower, upper = self.linear_bounds(d)
        else:
            lower, upper = self.logistic_bounds(d)
        return bool(np.all(vector >= lower) and np.all(vector <= upper))

    def to_dict(self) -> dict:
        """Serialize to a dictionary."""
        return {"theta_bound": self.theta_bound, "beta_bound": self.beta_bound}


@dataclass(frozen=True)
class LogisticParams:
    """Ising-model regression parameters (theta, beta)."""

    theta: np.ndarray
    beta: float

    def __post_init__(self) -> None:
        """Copy theta into a read-only 1D array."""
        theta = np.atleast_1d(np.asarray(self.theta, dtype=np.float64))
        if theta.ndim != 1:
            raise DimensionError("theta must be a vector")
        object.__setattr__(self, "theta", _frozen_copy(theta))
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def d(self) -> int:
        """Feature dimension."""
        return int(self.theta.shape[0])

    def to_vector(self) -> np.ndarray:
        """Stack as (theta_1..theta_d, beta)."""
        return np.concatenate([self.theta, [self.beta]])

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "LogisticParams":
        """Inverse of :meth:`to_vector`."""
        vector = np.asarray(vector, dtype=np.float64).ravel()
        if vector.shape[0] < 2:
            raise DimensionError("Logistic parameter vectors need length d + 1 >= 2")
        return cls(theta=vector[:-1], beta=float(vector[-1]))

    def to_dict(self) -> dict:
        """Serialize to a dictionary."""
        return {"theta": self.theta.tolist(), "beta": self.beta}


@dataclass(frozen=True)
class LinearParams:
    """
    Reparametrized Gaussian-model parameters (theta, beta, kappa).

    At the data-generating truth kappa = beta * theta; fitted points need
    not satisfy this.
    """

    theta: np.ndarray
    beta: float
    kappa: np.ndarray

    def __post_init__(self) -> None:
        """Copy vectors and check that theta and kappa agree in length."""
        theta = np.atleast_1d(np.asarray(self.theta, dtype=np.float64))
        kappa = np.atleast_1d(np.asarray(self.kappa, dtype=np.float64))
        if theta.ndim != 1 or kappa.shape != theta.shape:
            raise DimensionError(
                "theta and kappa must be vectors of equal length, "
                f"got {theta.shape} and {kappa.shape}"
            )
        object.__setattr__(self, "theta", _frozen_copy(theta))
        object.__setattr__(self, "kappa", _frozen_copy(kappa))
        object.__setattr__(self, "beta", float(self.beta))

    @classmethod
    def at_truth(cls, theta: np.ndarray, beta: float) -> "LinearParams":
        """Build the data-generating point with kappa = beta * theta."""
        theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
        return cls(theta=theta, beta=beta, kappa=beta * theta)

    @property
    def d(self) -> int:
        """Feature dimension."""
        return int(self.theta.shape[0])

    def to_vector(self) -> np.ndarray:
        """Stack as (theta_1..theta_d, beta, kappa_1..kappa_d)."""
        return np.concatenate([self.theta, [self.beta], self.kappa])

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "LinearParams":
        """Inverse of :meth:`to_vector`."""
        vector = np.asarray(vector, dtype=np.float64).ravel()
        if vector.shape[0] < 3 or vector.shape[0] % 2 == 0:
            raise DimensionError("Linear parameter vectors need odd length 2d + 1 >= 3")
        d = (vector.shape[0] - 1) // 2
        return cls(theta=vector[:d], beta=float(vector[d]), kappa=vector[d + 1 :])

    def to_dict(self) -> dict:
        """Serialize to a dictionary."""
        return {"theta": self.theta.tolist(), "beta": self.beta, "kappa": self.kappa.tolist()}


@dataclass(frozen=True)
class Dataset:
    """
    One realization of responses with its design and interaction matrix.

    Attributes:
        design: Features (and D for the linear model).
        interaction: The interaction matrix A.
        y: Responses; spins in {-1, +1} for the logistic model.
        model_kind: "logistic" or "linear".
        magnetizations: m(y) = A y, computed at construction.
    """

    design: RegressionDesign
    interaction: InteractionMatrix
    y: np.ndarray
    model_kind: str = "logistic"
    magnetizations: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        """Check shapes and spin values, then cache the magnetizations."""
        check_model_kind(self.model_kind)
        y = np.asarray(self.y, dtype=np.float64).ravel()
        n = self.design.n
        if self.interaction.n != n:
            raise DimensionError(
                f"Interaction matrix is {self.interaction.n}x{self.interaction.n} "
                f"but the design has n={n}"
            )
        if y.shape != (n,):
            raise DimensionError(f"y must have length {n}, got {y.shape[0]}")
        if self.model_kind == "logistic" and not np.all(np.abs(y) == 1.0):
            raise InvariantError("Logistic responses must be exactly -1 or +1")
        if self.model_kind == "linear":
            self.design.require_d_diag()
            if not np.all(np.isfinite(y)):
                raise InvariantError("Linear responses must be finite")
        object.__setattr__(self, "y", _frozen_copy(y))
        object.__setattr__(
            self, "magnetizations", _frozen_copy(self.interaction.magnetizations(y))
        )

    @property
    def n(self) -> int:
        """Sample count."""
        return self.design.n

    @property
    def d(self) -> int:
        """Feature dimension."""
        return self.design.d


def psd_cholesky(sigma: np.ndarray, max_jitter: float = 1e-8) -> np.ndarray:
    """
    Lower Cholesky factor of a PSD matrix, adding diagonal jitter if needed.

    Jitter grows tenfold from 1e-14 up to ``max_jitter`` times the mean
    diagonal; singular-but-PSD matrices factor this way.

    Raises:
        NotPositiveDefiniteError: If no jitter level succeeds.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    try:
        return linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError:
        pass

    scale = float(np.mean(np.abs(np.diagonal(sigma)))) or 1.0
    jitter = 1e-14
    while jitter <= max_jitter:
        try:
            return linalg.cholesky(sigma + jitter * scale * np.eye(sigma.shape[0]), lower=True)
        except linalg.LinAlgError:
            jitter *= 10.0
    raise NotPositiveDefiniteError("Covariance matrix is not positive semidefinite")


def quadratic_gaussian_moments(
    a: np.ndarray,
    b: np.ndarray,
    c: float,
    mu: np.ndarray,
    sigma: np.ndarray,
) -> Tuple[float, float]:
    """
    Mean and variance of f(z) = z^T A z + b^T z + c for z ~ N(mu, Sigma).

    A is symmetrized first (z^T A z only sees its symmetric part).

    Returns:
        (mean, variance) with
        mean = tr(A Sigma) + f(mu),
        variance = 2 tr(A Sigma A Sigma) + 4 mu^T A Sigma A mu
                   + 4 b^T Sigma A mu + b^T Sigma b.

    Raises:
        DimensionError: If shapes disagree.
        NotPositiveDefiniteError: If Sigma is not PSD.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    k = mu.shape[0]
    if a.shape != (k, k) or sigma.shape != (k, k) or b.shape != (k,):
        raise DimensionError(
            f"Inconsistent shapes: a={a.shape}, b={b.shape}, mu={mu.shape}, sigma={sigma.shape}"
        )
    if not np.allclose(sigma, sigma.T, rtol=1e-12, atol=1e-14):
        raise NotPositiveDefiniteError("Covariance matrix is not symmetric")
    psd_cholesky(sigma)

    a_sym = 0.5 * (a + a.T)
    a_sigma = a_sym @ sigma
    a_mu = a_sym @ mu
    sigma_a_mu = sigma @ a_mu

    mean = float(np.trace(a_sigma) + mu @ a_mu + b @ mu + c)
    variance = float(
        2.0 * np.sum(a_sigma * a_sigma.T)
        + 4.0 * a_mu @ sigma_a_mu
        + 4.0 * b @ sigma_a_mu
        + b @ sigma @ b
    )
    return mean, variance
