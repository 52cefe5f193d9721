"""
netreg - regression from a single sample of dependent observations.

This package fits regression models whose responses are coupled through a
known interaction matrix A: a logistic (Ising) model fitted by maximum
pseudolikelihood and a linear (Gaussian graphical) model fitted by
reparametrized maximum likelihood, both with projected gradient descent
over a parameter box.

Main components:
    - fit_logistic_mple / fit_linear_mle: Estimators
    - ising_gibbs_sample / gaussian_sample: Samplers
    - validate_assumptions: Structural checks behind the consistency rate
    - ConsistencyExperiment: Monte Carlo rate experiments

Example usage:
    >>> from netreg import ParameterBox, build_interaction, fit_logistic_mple
    >>> a = build_interaction("regular:4", 500, seed=1)
    >>> params, diagnostics = fit_logistic_mple(dataset, ParameterBox(1.0, 0.4))
    >>> print(params.beta)
"""

from netreg.config import ExperimentSpec, GibbsConfig, PgdConfig, ValidatorConfig
from netreg.exceptions import (
    ConfigurationError,
    ConvergenceError,
    DimensionError,
    GraphConstructionError,
    InvariantError,
    NetregError,
    NotPositiveDefiniteError,
    RankDeficientError,
    ResourceLimitError,
    SerializationError,
)
from netreg.experiments import ConsistencyExperiment, RateReport, run_consistency
from netreg.exporters.report_writer import emit_report
from netreg.interaction import (
    build_bounded_degree,
    build_curie_weiss,
    build_interaction,
    build_sk,
    hat_matrix,
    index_selection,
    strong_concavity_diagnostic,
    validate_assumptions,
)
from netreg.linear_mle import fit_linear_mle, nll_gradient, nll_hessian, nll_value
from netreg.logistic_mple import fit_logistic_mple, lpl_gradient, lpl_hessian, lpl_value
from netreg.model_core import (
    Dataset,
    InteractionMatrix,
    LinearParams,
    LogisticParams,
    ParameterBox,
    RegressionDesign,
    quadratic_gaussian_moments,
)
from netreg.optimize import pgd_minimize, project_box
from netreg.sampling import (
    gaussian_conditional,
    gaussian_sample,
    ising_exact_distribution,
    ising_gibbs_sample,
    logistic_conditional,
)

__version__ = "0.1.0"

__all__ = [
    # Model types
    "InteractionMatrix",
    "RegressionDesign",
    "ParameterBox",
    "LogisticParams",
    "LinearParams",
    "Dataset",
    "quadratic_gaussian_moments",
    # Interaction matrices and validation
    "build_bounded_degree",
    "build_sk",
    "build_curie_weiss",
    "build_interaction",
    "validate_assumptions",
    "hat_matrix",
    "index_selection",
    "strong_concavity_diagnostic",
    # Sampling
    "logistic_conditional",
    "ising_exact_distribution",
    "ising_gibbs_sample",
    "gaussian_conditional",
    "gaussian_sample",
    # Estimation
    "lpl_value",
    "lpl_gradient",
    "lpl_hessian",
    "fit_logistic_mple",
    "nll_value",
    "nll_gradient",
    "nll_hessian",
    "fit_linear_mle",
    "project_box",
    "pgd_minimize",
    # Experiments
    "ConsistencyExperiment",
    "RateReport",
    "run_consistency",
    "emit_report",
    # Configuration
    "PgdConfig",
    "GibbsConfig",
    "ValidatorConfig",
    "ExperimentSpec",
    # Exceptions
    "NetregError",
    "DimensionError",
    "InvariantError",
    "NotPositiveDefiniteError",
    "RankDeficientError",
    "GraphConstructionError",
    "ResourceLimitError",
    "ConvergenceError",
    "ConfigurationError",
    "SerializationError",
    # Metadata
    "__version__",
]
