"""
Pytest configuration and fixtures for netreg tests.
"""

from pathlib import Path

import numpy as np
import pytest

from netreg.config import ExperimentSpec, GibbsConfig, PgdConfig
from netreg.interaction import build_bounded_degree, build_sk
from netreg.model_core import (
    Dataset,
    InteractionMatrix,
    LinearParams,
    LogisticParams,
    ParameterBox,
    RegressionDesign,
)
from netreg.sampling import gaussian_sample, ising_gibbs_sample


def random_interaction(n: int, rng: np.random.Generator, scale: float = 1.0) -> InteractionMatrix:
    """Symmetric Gaussian weights rescaled so that ||A||_inf == scale."""
    upper = np.triu(rng.standard_normal((n, n)), k=1)
    a = upper + upper.T
    row_max = np.max(np.sum(np.abs(a), axis=1))
    return InteractionMatrix.from_upper_triangle(np.triu(a * (scale / row_max), k=1))


@pytest.fixture
def rng() -> np.random.Generator:
    """Deterministic generator for test data."""
    return np.random.default_rng(20240611)


@pytest.fixture
def temp_output_dir(tmp_path: Path) -> Path:
    """
    Create a temporary output directory for tests.

    Args:
        tmp_path: Pytest's temporary path fixture.

    Returns:
        Path: Path to temporary directory.
    """
    output_dir = tmp_path / "output"
    output_dir.mkdir()
    return output_dir


@pytest.fixture
def default_box() -> ParameterBox:
    """Theta = 1, B = 0.4."""
    return ParameterBox(theta_bound=1.0, beta_bound=0.4)


@pytest.fixture
def logistic_dataset(rng: np.random.Generator) -> Dataset:
    """
    Small logistic dataset on a 4-regular graph.

    Returns:
        Dataset: n = 60, d = 2, one Gibbs sample at theta = (0.5, -0.3), beta = 0.2.
    """
    n = 60
    a = build_bounded_degree(n, 4, seed=3)
    design = RegressionDesign(x=np.clip(rng.standard_normal((n, 2)), -3.0, 3.0))
    params = LogisticParams(theta=np.array([0.5, -0.3]), beta=0.2)
    y = ising_gibbs_sample(params, design, a, GibbsConfig(burn_in=50, seed=7))[0]
    return Dataset(design=design, interaction=a, y=y, model_kind="logistic")


@pytest.fixture
def linear_dataset(rng: np.random.Generator) -> Dataset:
    """
    Small linear dataset with SK couplings and D = I.

    Returns:
        Dataset: n = 30, d = 2, one draw at theta = (0.5, -0.3), beta = 0.2.
    """
    n = 30
    a = build_sk(n, seed=5)
    design = RegressionDesign.with_constant_d(rng.standard_normal((n, 2)), 1.0)
    params = LinearParams.at_truth(np.array([0.5, -0.3]), 0.2)
    y = gaussian_sample(params, design, a, n_samples=1, seed=11)[0]
    return Dataset(design=design, interaction=a, y=y, model_kind="linear")


@pytest.fixture
def tiny_spec() -> ExperimentSpec:
    """
    A quick logistic experiment (two sizes, two replicas).

    Returns:
        ExperimentSpec: Experiment specification for harness tests.
    """
    return ExperimentSpec(
        model_kind="logistic",
        graph="regular:4",
        d=2,
        theta0=(0.5, -0.3),
        beta0=0.2,
        n_grid=(40, 80),
        replicas=2,
        seed=3,
        gibbs=GibbsConfig(burn_in=20),
        pgd=PgdConfig(max_iters=20_000),
    )
