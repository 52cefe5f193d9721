"""
Configuration dataclasses for netreg.

This module defines the user-facing configuration objects: optimizer,
Gibbs sampler and validator settings, and the experiment specification
read from JSON by the ``experiment`` subcommand.
"""

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from netreg.exceptions import ConfigurationError
from netreg.utils.file_utils import read_json


MODEL_KINDS = ("logistic", "linear")


def check_model_kind(model_kind: str) -> str:
    """Return ``model_kind`` if it is supported, else raise ConfigurationError."""
    if model_kind not in MODEL_KINDS:
        raise ConfigurationError(
            f"Unsupported model_kind: {model_kind!r} (expected one of {', '.join(MODEL_KINDS)})"
        )
    return model_kind


@dataclass(frozen=True)
class PgdConfig:
    """
    Projected gradient descent settings.

    Attributes:
        step_size: Fixed step size eta. None lets the fit operations choose
            their model default.
        tolerance: Stop once the projected-gradient norm is at or below
            this value. None means 1/sqrt(n) for the fit operations.
        max_iters: Iteration cap; reaching it raises ConvergenceError.
        record_trace: Keep every iterate, value and stopping statistic.
        log_every: Emit a DEBUG progress line every this many iterations.
    """

    step_size: Optional[float] = None
    tolerance: Optional[float] = None
    max_iters: int = 100_000
    record_trace: bool = False
    log_every: int = 1000

    def __post_init__(self) -> None:
        """Validate configuration values after initialization."""
        if self.step_size is not None and not self.step_size > 0:
            raise ConfigurationError("step_size must be positive")
        if self.tolerance is not None and not self.tolerance > 0:
            raise ConfigurationError("tolerance must be positive")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be at least 1")
        if self.log_every < 1:
            raise ConfigurationError("log_every must be at least 1")

    @property
    def is_resolved(self) -> bool:
        """True when both step size and tolerance are set."""
        return self.step_size is not None and self.tolerance is not None

    def resolved(self, step_size: float, tolerance: float) -> "PgdConfig":
        """Return a copy with unset step size / tolerance filled in."""
        return replace(
            self,
            step_size=self.step_size if self.step_size is not None else step_size,
            tolerance=self.tolerance if self.tolerance is not None else tolerance,
        )

    def to_dict(self) -> dict:
        """Serialize configuration to a dictionary."""
        return {
            "step_size": self.step_size,
            "tolerance": self.tolerance,
            "max_iters": self.max_iters,
            "record_trace": self.record_trace,
            "log_every": self.log_every,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PgdConfig":
        """Create configuration from a dictionary."""
        return cls(
            step_size=data.get("step_size"),
            tolerance=data.get("tolerance"),
            max_iters=int(data.get("max_iters", 100_000)),
            record_trace=bool(data.get("record_trace", False)),
            log_every=int(data.get("log_every", 1000)),
        )


@dataclass(frozen=True)
class GibbsConfig:
    """
    Systematic-scan Gibbs sampler settings.

    Attributes:
        burn_in: Full sweeps discarded before the first retained sample.
        n_samples: Number of retained spin configurations.
        thinning: Full sweeps between consecutive retained samples.
        seed: Seed for the Philox generator.
    """

    burn_in: int = 200
    n_samples: int = 1
    thinning: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate configuration values after initialization."""
        if self.burn_in < 0:
            raise ConfigurationError("burn_in must be non-negative")
        if self.n_samples < 1:
            raise ConfigurationError("n_samples must be at least 1")
        if self.thinning < 1:
            raise ConfigurationError("thinning must be at least 1")

    def to_dict(self) -> dict:
        """Serialize configuration to a dictionary."""
        return {
            "burn_in": self.burn_in,
            "n_samples": self.n_samples,
            "thinning": self.thinning,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GibbsConfig":
        """Create configuration from a dictionary."""
        return cls(
            burn_in=int(data.get("burn_in", 200)),
            n_samples=int(data.get("n_samples", 1)),
            thinning=int(data.get("thinning", 5)),
            seed=int(data.get("seed", 0)),
        )


@dataclass(frozen=True)
class ValidatorConfig:
    """
    Assumption validator settings.

    Attributes:
        frob_c: Threshold c in ||A||_F^2 >= c * n.
        beta_grid_points: Uniform grid size over [-B, B] for the linear
            covariance checks.
        eig_floor: Eigenvalues at or below this count as zero.
        feature_bound: Support bound M for logistic features. When None the
            observed max |x_ik| is reported but not checked.
    """

    frob_c: float = 0.1
    beta_grid_points: int = 21
    eig_floor: float = 1e-10
    feature_bound: Optional[float] = None

    def __post_init__(self) -> None:
        """Validate configuration values after initialization."""
        if not self.frob_c > 0:
            raise ConfigurationError("frob_c must be positive")
        if self.beta_grid_points < 2:
            raise ConfigurationError("beta_grid_points must be at least 2")
        if not self.eig_floor > 0:
            raise ConfigurationError("eig_floor must be positive")
        if self.feature_bound is not None and not self.feature_bound > 0:
            raise ConfigurationError("feature_bound must be positive")

    def to_dict(self) -> dict:
        """Serialize configuration to a dictionary."""
        return {
            "frob_c": self.frob_c,
            "beta_grid_points": self.beta_grid_points,
            "eig_floor": self.eig_floor,
            "feature_bound": self.feature_bound,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ValidatorConfig":
        """Create configuration from a dictionary."""
        return cls(
            frob_c=float(data.get("frob_c", 0.1)),
            beta_grid_points=int(data.get("beta_grid_points", 21)),
            eig_floor=float(data.get("eig_floor", 1e-10)),
            feature_bound=data.get("feature_bound"),
        )


@dataclass(frozen=True)
class ExperimentSpec:
    """
    Consistency-rate experiment description.

    Attributes:
        model_kind: "logistic" or "linear".
        graph: Graph specification, e.g. "regular:4", "sk", "cw", "gnp:0.1", "zero".
        d: Feature dimension.
        theta0: True theta (length d).
        beta0: True interaction strength.
        n_grid: Strictly increasing sample sizes.
        replicas: Fitted datasets per sample size.
        seed: Base seed; per-cell seeds are derived from (seed, n, replica).
        theta_bound: Box half-width Theta.
        beta_bound: Box half-width B.
        d_diag: Constant diagonal of D (linear model).
        feature_bound: Clamp for logistic features, M.
        frob_c: Frobenius threshold passed to the validator.
        validate: Run the assumption validator on every generated instance.
        record_ols: Also record the least-squares theta error (linear model).
        pgd: Optimizer settings.
        gibbs: Sampler settings (the seed is replaced per cell).
    """

    model_kind: str
    graph: str
    d: int
    theta0: Tuple[float, ...]
    beta0: float
    n_grid: Tuple[int, ...]
    replicas: int = 20
    seed: int = 0
    theta_bound: float = 1.0
    beta_bound: float = 0.4
    d_diag: float = 1.0
    feature_bound: float = 3.0
    frob_c: float = 0.1
    validate: bool = True
    record_ols: bool = False
    pgd: PgdConfig = field(default_factory=PgdConfig)
    gibbs: GibbsConfig = field(default_factory=GibbsConfig)

    def __post_init__(self) -> None:
        """Validate and normalize the specification."""
        check_model_kind(self.model_kind)
        object.__setattr__(self, "theta0", tuple(float(t) for t in self.theta0))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))

        if self.d < 1:
            raise ConfigurationError("d must be at least 1")
        reals = {
            "theta0": self.theta0,
            "beta0": (self.beta0,),
            "theta_bound": (self.theta_bound,),
            "beta_bound": (self.beta_bound,),
            "d_diag": (self.d_diag,),
            "feature_bound": (self.feature_bound,),
            "frob_c": (self.frob_c,),
        }
        for name, values in reals.items():
            if not all(math.isfinite(float(v)) for v in values):
                raise ConfigurationError(f"{name} must be finite")
        if len(self.theta0) != self.d:
            raise ConfigurationError(f"theta0 has length {len(self.theta0)}, expected d={self.d}")
        if not self.n_grid:
            raise ConfigurationError("n_grid must not be empty")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigurationError("n_grid must be strictly increasing")
        if self.n_grid[0] <= self.d:
            raise ConfigurationError("every n in n_grid must exceed d")
        if self.replicas < 1:
            raise ConfigurationError("replicas must be at least 1")
        if not self.theta_bound > 0 or not self.beta_bound > 0:
            raise ConfigurationError("theta_bound and beta_bound must be positive")
        if not self.d_diag > 0:
            raise ConfigurationError("d_diag must be positive")
        if not self.feature_bound > 0:
            raise ConfigurationError("feature_bound must be positive")
        if not self.frob_c > 0:
            raise ConfigurationError("frob_c must be positive")

        # Truth must lie strictly inside the box
        if any(abs(t) >= self.theta_bound for t in self.theta0):
            raise ConfigurationError("theta0 must lie strictly inside [-theta_bound, theta_bound]")
        if abs(self.beta0) >= self.beta_bound:
            raise ConfigurationError("beta0 must lie strictly inside [-beta_bound, beta_bound]")
        if self.model_kind == "linear":
            kappa_bound = self.beta_bound * self.theta_bound
            if any(abs(self.beta0 * t) >= kappa_bound for t in self.theta0):
                raise ConfigurationError("beta0 * theta0 must lie strictly inside the kappa box")

    def to_dict(self) -> Dict[str, Any]:
        """Serialize the specification to a JSON-friendly dictionary."""
        return {
            "model_kind": self.model_kind,
            "graph": self.graph,
            "d": self.d,
            "theta0": list(self.theta0),
            "beta0": self.beta0,
            "n_grid": list(self.n_grid),
            "replicas": self.replicas,
            "seed": self.seed,
            "theta_bound": self.theta_bound,
            "beta_bound": self.beta_bound,
            "d_diag": self.d_diag,
            "feature_bound": self.feature_bound,
            "frob_c": self.frob_c,
            "validate": self.validate,
            "record_ols": self.record_ols,
            "pgd": self.pgd.to_dict(),
            "gibbs": self.gibbs.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentSpec":
        """
        Create a specification from a dictionary.

        Raises:
            ConfigurationError: If required keys are missing or values are invalid.
        """
        missing = [k for k in ("model_kind", "graph", "theta0", "beta0", "n_grid") if k not in data]
        if missing:
            raise ConfigurationError(f"Experiment spec is missing keys: {', '.join(missing)}")

        theta0: List[float] = list(data["theta0"])
        try:
            return cls(
                model_kind=str(data["model_kind"]),
                graph=str(data["graph"]),
                d=int(data.get("d", len(theta0))),
                theta0=tuple(theta0),
                beta0=float(data["beta0"]),
                n_grid=tuple(data["n_grid"]),
                replicas=int(data.get("replicas", 20)),
                seed=int(data.get("seed", 0)),
                theta_bound=float(data.get("theta_bound", 1.0)),
                beta_bound=float(data.get("beta_bound", 0.4)),
                d_diag=float(data.get("d_diag", 1.0)),
                feature_bound=float(data.get("feature_bound", 3.0)),
                frob_c=float(data.get("frob_c", 0.1)),
                validate=bool(data.get("validate", True)),
                record_ols=bool(data.get("record_ols", False)),
                pgd=PgdConfig.from_dict(data.get("pgd", {})),
                gibbs=GibbsConfig.from_dict(data.get("gibbs", {})),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigurationError):
                raise
            raise ConfigurationError(f"Invalid experiment spec: {e}") from e

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "ExperimentSpec":
        """Load a specification from a JSON file."""
        return cls.from_dict(read_json(path))
