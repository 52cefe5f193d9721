"""
Samplers for the two dependent-response models.

Logistic (Ising) model:
    Pr[y = s] is proportional to exp(sum_i h_i s_i + (beta / 2) s^T A s)
    with fields h_i = theta^T x_i, so that
    Pr[y_i = +1 | y_-i] = 1 / (1 + exp(-2 (h_i + beta m_i(y)))).

Linear (Gaussian) model:
    y = X theta + eps, eps ~ N(0, (beta A + D)^-1).

Exact enumeration is available for small Ising instances; larger ones are
sampled by systematic-scan Gibbs. Gaussian draws are exact.
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.special import expit, logsumexp

from netreg.config import GibbsConfig
from netreg.exceptions import DimensionError, NotPositiveDefiniteError, ResourceLimitError
from netreg.model_core import (
    InteractionMatrix,
    LinearParams,
    LogisticParams,
    RegressionDesign,
)
from netreg.utils.logging import get_logger
from netreg.utils.random import make_rng


logger = get_logger(__name__)

# Largest n for which the 2^n joint table is built
MAX_ENUMERATION_N = 20

Params = Union[LogisticParams, LinearParams]


def _check_shapes(params: Params, design: RegressionDesign, a: InteractionMatrix) -> None:
    if params.d != design.d:
        raise DimensionError(f"theta has length {params.d} but the design has d={design.d}")
    if a.n != design.n:
        raise DimensionError(f"Interaction matrix has n={a.n} but the design has n={design.n}")


def _fields(params: Params, design: RegressionDesign) -> np.ndarray:
    """External fields theta^T x_i."""
    return design.x @ params.theta


# --------------------------------------------------------------------------
# Logistic (Ising) model
# --------------------------------------------------------------------------


def logistic_conditional(
    i: int,
    y: np.ndarray,
    params: LogisticParams,
    design: RegressionDesign,
    a: InteractionMatrix,
    target: int = 1,
) -> float:
    """
    Pr[y_i = target | y_-i] under the Ising model.

    Only y_-i is read; y_i itself does not enter (A_ii = 0). The two targets
    are computed so that their probabilities sum to exactly 1.

    Args:
        i: Unit index.
        y: Spin vector in {-1, +1}^n.
        params: (theta, beta).
        design: Features.
        a: Interaction matrix.
        target: +1 or -1.

    Returns:
        float: Conditional probability.
    """
    if target not in (1, -1):
        raise ValueError("target must be +1 or -1")
    y = np.asarray(y, dtype=np.float64)
    field_i = float(design.x[i] @ params.theta + params.beta * (a.a[i] @ y))

    # The smaller probability is computed directly, the larger as its complement
    small = float(expit(-2.0 * abs(field_i)))
    large = 1.0 - small
    plus = large if field_i >= 0 else small
    minus = small if field_i >= 0 else large
    return plus if target == 1 else minus


@dataclass(frozen=True)
class IsingDistribution:
    """
    Exact joint distribution of a small Ising model.

    Configuration k has spin s_j = +1 exactly when bit j of k is set.

    Attributes:
        configs: 2^n x n array of spins.
        probabilities: Normalized probabilities, one per configuration.
        log_partition: log Z.
    """

    configs: np.ndarray
    probabilities: np.ndarray
    log_partition: float

    @property
    def n(self) -> int:
        """Number of units."""
        return int(self.configs.shape[1])

    @staticmethod
    def index_of(y: np.ndarray) -> int:
        """Table index of the configuration ``y``."""
        bits = (np.asarray(y) > 0).astype(np.int64)
        return int(np.sum(bits << np.arange(bits.shape[0], dtype=np.int64)))

    def probability(self, y: np.ndarray) -> float:
        """Pr[y]."""
        return float(self.probabilities[self.index_of(y)])

    def conditional(self, i: int, y: np.ndarray) -> float:
        """Pr[y_i = +1 | y_-i] read off the joint table."""
        plus = np.array(y, dtype=np.float64, copy=True)
        minus = plus.copy()
        plus[i] = 1.0
        minus[i] = -1.0
        p_plus = self.probability(plus)
        p_minus = self.probability(minus)
        return p_plus / (p_plus + p_minus)

    def marginal_means(self) -> np.ndarray:
        """E[y_i] for every unit."""
        return self.probabilities @ self.configs

    def expectation(self, values: np.ndarray) -> np.ndarray:
        """Expectation of per-configuration values (first axis over configurations)."""
        return np.tensordot(self.probabilities, values, axes=(0, 0))


def all_spin_configs(n: int) -> np.ndarray:
    """All 2^n spin vectors; row k has s_j = +1 iff bit j of k is set."""
    k = np.arange(2**n, dtype=np.int64)[:, None]
    bits = (k >> np.arange(n, dtype=np.int64)) & 1
    return 2.0 * bits - 1.0


def ising_exact_distribution(
    params: LogisticParams,
    design: RegressionDesign,
    a: InteractionMatrix,
) -> IsingDistribution:
    """
    Enumerate the Ising joint over {-1, +1}^n.

    The unnormalized log-weight of s is sum_i h_i s_i + (beta / 2) s^T A s,
    i.e. beta times the sum over pairs i < j of A_ij s_i s_j.

    Raises:
        ResourceLimitError: If n > 20.
    """
    _check_shapes(params, design, a)
    n = design.n
    if n > MAX_ENUMERATION_N:
        raise ResourceLimitError(
            f"Exact enumeration is limited to n <= {MAX_ENUMERATION_N}, got n={n}"
        )

    configs = all_spin_configs(n)
    h = _fields(params, design)
    pair_energy = 0.5 * np.sum((configs @ a.a) * configs, axis=1)
    log_weights = configs @ h + params.beta * pair_energy

    log_z = float(logsumexp(log_weights))
    probabilities = np.exp(log_weights - log_z)
    return IsingDistribution(configs=configs, probabilities=probabilities, log_partition=log_z)


def ising_gibbs_sample(
    params: LogisticParams,
    design: RegressionDesign,
    a: InteractionMatrix,
    config: Optional[GibbsConfig] = None,
    init: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Systematic-scan Gibbs sampling from the Ising model.

    Each sweep visits units 0..n-1 in order and redraws y_i from its
    conditional law; magnetizations are updated incrementally on flips.
    The chain starts from uniform random spins unless ``init`` is given.

    Args:
        params: (theta, beta).
        design: Features.
        a: Interaction matrix.
        config: Burn-in, number of samples, thinning and seed.
        init: Optional starting configuration.

    Returns:
        np.ndarray: ``n_samples`` x n array with entries exactly +1.0 / -1.0.
    """
    _check_shapes(params, design, a)
    config = config or GibbsConfig()
    rng = make_rng(config.seed)
    n = design.n

    if init is None:
        y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    else:
        y = np.array(init, dtype=np.float64, copy=True)
        if y.shape != (n,) or not np.all(np.abs(y) == 1.0):
            raise ValueError("init must be a spin vector of length n")

    weights = a.a
    h = _fields(params, design)
    beta = params.beta
    m = weights @ y

    def sweep() -> None:
        uniforms = rng.random(n)
        for i in range(n):
            p_plus = expit(2.0 * (h[i] + beta * m[i]))
            new = 1.0 if uniforms[i] < p_plus else -1.0
            if new != y[i]:
                # Row i equals column i by symmetry
                m[:] += (new - y[i]) * weights[i]
                y[i] = new

    for _ in range(config.burn_in):
        sweep()

    samples = np.empty((config.n_samples, n))
    for k in range(config.n_samples):
        if k > 0:
            for _ in range(config.thinning):
                sweep()
        samples[k] = y

    logger.debug(
        f"Gibbs: n={n}, burn_in={config.burn_in}, samples={config.n_samples}, "
        f"thinning={config.thinning}"
    )
    return samples


# --------------------------------------------------------------------------
# Linear (Gaussian) model
# --------------------------------------------------------------------------


def gaussian_conditional(
    i: int,
    y: np.ndarray,
    params: Params,
    design: RegressionDesign,
    a: InteractionMatrix,
) -> Tuple[float, float]:
    """
    Conditional law of y_i given y_-i in the Gaussian model.

    Returns:
        (mean, variance) with
        mean = theta^T x_i - (beta / D_ii) sum_{j != i} A_ij (y_j - theta^T x_j),
        variance = 1 / D_ii.
    """
    d_diag = design.require_d_diag()
    y = np.asarray(y, dtype=np.float64)
    residual = y - _fields(params, design)
    mean = float(design.x[i] @ params.theta - params.beta / d_diag[i] * (a.a[i] @ residual))
    return mean, float(1.0 / d_diag[i])


def precision_matrix(beta: float, a: InteractionMatrix, d_diag: np.ndarray) -> np.ndarray:
    """Dense beta * A + D."""
    return beta * a.a + np.diag(d_diag)


def precision_cholesky(beta: float, a: InteractionMatrix, d_diag: np.ndarray) -> np.ndarray:
    """
    Lower Cholesky factor L of beta * A + D.

    Raises:
        NotPositiveDefiniteError: If the factorization fails; carries beta.
    """
    try:
        return linalg.cholesky(precision_matrix(beta, a, d_diag), lower=True)
    except linalg.LinAlgError as e:
        raise NotPositiveDefiniteError(
            f"beta*A + D is not positive definite at beta={beta:.6g}; shrink beta_bound",
            beta=beta,
        ) from e


def gaussian_sample(
    params: Params,
    design: RegressionDesign,
    a: InteractionMatrix,
    n_samples: int = 1,
    seed: int = 0,
) -> np.ndarray:
    """
    Exact draws y = X theta + L^-T w with L L^T = beta A + D, w ~ N(0, I).

    Returns:
        np.ndarray: ``n_samples`` x n array of responses.

    Raises:
        NotPositiveDefiniteError: If beta * A + D is not positive definite.
    """
    _check_shapes(params, design, a)
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    d_diag = design.require_d_diag()
    lower = precision_cholesky(params.beta, a, d_diag)

    w = make_rng(seed).standard_normal((design.n, n_samples))
    noise = linalg.solve_triangular(lower, w, lower=True, trans="T")
    return (_fields(params, design)[:, None] + noise).T
