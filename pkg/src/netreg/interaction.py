"""
Interaction-matrix builders, assumption validation and strong-concavity diagnostics.

Builders cover the standard instances: scaled random regular graphs,
Sherrington-Kirkpatrick couplings, and two instances whose Frobenius norm
stays O(1) (Curie-Weiss and the scaled dense Erdos-Renyi graph). The
validator evaluates the structural conditions the estimators rely on, and
the diagnostics expose the hat-matrix quantities behind strong concavity
of the pseudolikelihood.
"""

import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Set, Tuple

import numpy as np
from scipy import linalg

from netreg.config import ValidatorConfig, check_model_kind
from netreg.exceptions import (
    DimensionError,
    GraphConstructionError,
    InvariantError,
    RankDeficientError,
)
from netreg.model_core import InteractionMatrix, ParameterBox, RegressionDesign
from netreg.utils.logging import get_logger
from netreg.utils.matrix_io import load_matrix
from netreg.utils.random import make_rng


logger = get_logger(__name__)

# Pairing attempts before giving up on a regular graph
MAX_PAIRING_ATTEMPTS = 100

# X^T X condition numbers at or above this count as rank deficient
MAX_GRAM_CONDITION = 1e12

# Slack for norm checks against 1 (sums of 1/degree are not always exact)
NORM_SLACK = 1e-12


# --------------------------------------------------------------------------
# Builders
# --------------------------------------------------------------------------


def _try_regular_pairing(
    n: int, degree: int, rng: np.random.Generator
) -> Optional[Set[Tuple[int, int]]]:
    """
    One pairing attempt; leftover stubs are re-shuffled until none remain.

    Returns None when the remaining stubs admit no valid edge.
    """
    edges: Set[Tuple[int, int]] = set()
    stubs = np.repeat(np.arange(n), degree)

    while stubs.size:
        rng.shuffle(stubs)
        leftover: Dict[int, int] = defaultdict(int)
        for s1, s2 in zip(stubs[0::2].tolist(), stubs[1::2].tolist()):
            if s1 > s2:
                s1, s2 = s2, s1
            if s1 != s2 and (s1, s2) not in edges:
                edges.add((s1, s2))
            else:
                leftover[s1] += 1
                leftover[s2] += 1

        if not leftover:
            break

        nodes = sorted(leftover)
        suitable = any(
            (u, v) not in edges for i, u in enumerate(nodes) for v in nodes[i + 1 :]
        )
        if not suitable:
            return None
        stubs = np.repeat(np.array(nodes), [leftover[v] for v in nodes])

    return edges


def build_bounded_degree(n: int, degree: int, seed: int) -> InteractionMatrix:
    """
    Random degree-regular graph adjacency divided by the degree.

    The graph comes from the pairing (configuration) model: stubs are paired
    at random, self-loops and repeated edges are rejected and their stubs
    re-paired, and the whole attempt restarts when it gets stuck.

    Args:
        n: Number of vertices.
        degree: Common vertex degree (1 <= degree < n, n * degree even).
        seed: Seed for the Philox generator.

    Returns:
        InteractionMatrix: Every row has ``degree`` entries equal to 1/degree.

    Raises:
        GraphConstructionError: If the degree sequence is infeasible or every
            attempt fails.
    """
    if degree < 1 or degree >= n:
        raise GraphConstructionError(f"Need 1 <= degree < n, got degree={degree}, n={n}")
    if (n * degree) % 2 != 0:
        raise GraphConstructionError(f"n * degree must be even, got {n} * {degree}")

    rng = make_rng(seed)
    for attempt in range(1, MAX_PAIRING_ATTEMPTS + 1):
        edges = _try_regular_pairing(n, degree, rng)
        if edges is not None:
            logger.debug(f"Built {degree}-regular graph on {n} vertices (attempt {attempt})")
            upper = np.zeros((n, n))
            rows, cols = np.array(sorted(edges)).T
            upper[rows, cols] = 1.0 / degree
            return InteractionMatrix.from_upper_triangle(upper)

    raise GraphConstructionError(
        f"No simple {degree}-regular graph on {n} vertices after {MAX_PAIRING_ATTEMPTS} attempts"
    )


def build_sk(n: int, seed: int) -> InteractionMatrix:
    """Sherrington-Kirkpatrick couplings: A_ij = g_ij / sqrt(n) for i < j, g_ij ~ N(0, 1)."""
    if n < 2:
        raise GraphConstructionError("The SK matrix needs n >= 2")
    g = make_rng(seed).standard_normal((n, n))
    return InteractionMatrix.from_upper_triangle(g / np.sqrt(n))


def build_curie_weiss(n: int) -> InteractionMatrix:
    """Complete graph with A_ij = 1/n off the diagonal; ||A||_F^2 < 1 for every n."""
    if n < 2:
        raise GraphConstructionError("The Curie-Weiss matrix needs n >= 2")
    return InteractionMatrix.from_upper_triangle(np.full((n, n), 1.0 / n))


def build_dense_gnp(n: int, p: float, seed: int) -> InteractionMatrix:
    """
    Erdos-Renyi G(n, p) adjacency scaled by 1 / ((n - 1) p).

    Rows sum to about one and ||A||_F^2 is about n / ((n - 1) p), so for a
    constant p the Frobenius condition fails just as for Curie-Weiss.
    """
    if n < 2:
        raise GraphConstructionError("G(n, p) needs n >= 2")
    if not 0.0 < p <= 1.0:
        raise GraphConstructionError(f"Edge probability must lie in (0, 1], got {p}")
    edges = make_rng(seed).random((n, n)) < p
    return InteractionMatrix.from_upper_triangle(edges / ((n - 1) * p))


def build_zero(n: int) -> InteractionMatrix:
    """The n x n zero interaction (independent responses)."""
    return InteractionMatrix.zeros(n)


def build_interaction(spec: str, n: int, seed: int = 0) -> InteractionMatrix:
    """
    Build an interaction matrix from a compact specification.

    Supported forms: ``regular:K``, ``sk``, ``cw``, ``gnp:P``, ``zero`` and
    ``file:PATH`` (matrix CSV or JSON).

    Raises:
        GraphConstructionError: If the specification is not recognized.
        DimensionError: If a loaded matrix is not n x n.
    """
    family, _, arg = spec.partition(":")
    family = family.strip().lower()
    try:
        if family == "regular":
            return build_bounded_degree(n, int(arg), seed)
        if family == "sk":
            return build_sk(n, seed)
        if family == "cw":
            return build_curie_weiss(n)
        if family == "gnp":
            return build_dense_gnp(n, float(arg), seed)
        if family == "zero":
            return build_zero(n)
    except ValueError as e:
        if isinstance(e, (DimensionError, InvariantError)):
            raise
        raise GraphConstructionError(f"Invalid graph specification {spec!r}: {e}") from e

    if family == "file":
        a = InteractionMatrix(load_matrix(Path(arg)))
        if n and a.n != n:
            raise DimensionError(f"Interaction matrix in {arg} is {a.n}x{a.n}, expected n={n}")
        return a

    raise GraphConstructionError(
        f"Unknown graph specification {spec!r} (use regular:K, sk, cw, gnp:P, zero or file:PATH)"
    )


# --------------------------------------------------------------------------
# Assumption validation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AssumptionCheck:
    """
    One measured condition.

    Attributes:
        name: Short identifier.
        value: Measured quantity.
        threshold: Bound it is compared with (None for informational rows).
        passed: Outcome.
        relation: Human-readable comparison, e.g. "<=".
    """

    name: str
    value: float
    threshold: Optional[float]
    passed: bool
    relation: str = ""

    def __post_init__(self) -> None:
        """Store plain Python scalars so reports serialize to JSON."""
        object.__setattr__(self, "value", float(self.value))
        if self.threshold is not None:
            object.__setattr__(self, "threshold", float(self.threshold))
        object.__setattr__(self, "passed", bool(self.passed))

    def to_dict(self) -> dict:
        """Serialize to a dictionary."""
        return {
            "name": self.name,
            "value": self.value,
            "threshold": self.threshold,
            "relation": self.relation,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of :func:`validate_assumptions`; ``overall`` is the conjunction of all checks."""

    model_kind: str
    checks: Tuple[AssumptionCheck, ...] = field(default_factory=tuple)

    @property
    def overall(self) -> bool:
        """True when every check passed."""
        return all(check.passed for check in self.checks)

    def check(self, name: str) -> AssumptionCheck:
        """Return the check called ``name``."""
        for item in self.checks:
            if item.name == name:
                return item
        raise KeyError(name)

    def failed(self) -> List[str]:
        """Names of failed checks."""
        return [check.name for check in self.checks if not check.passed]

    def to_dict(self) -> dict:
        """Serialize to a dictionary."""
        return {
            "model_kind": self.model_kind,
            "overall": self.overall,
            "checks": [check.to_dict() for check in self.checks],
        }

    def to_json(self) -> str:
        """Serialize to a JSON string."""
        return json.dumps(self.to_dict(), indent=2)

    def format_table(self) -> str:
        """Render a fixed-width text table for terminal output."""
        lines = [f"{'check':<26} {'value':>14} {'':>3} {'threshold':>14}  result"]
        for check in self.checks:
            threshold = "" if check.threshold is None else f"{check.threshold:>14.6g}"
            result = "pass" if check.passed else "FAIL"
            lines.append(
                f"{check.name:<26} {check.value:>14.6g} {check.relation:>3} "
                f"{threshold:>14}  {result}"
            )
        lines.append(f"overall ({self.model_kind}): {'pass' if self.overall else 'FAIL'}")
        return "\n".join(lines)


def _precision_spectrum(
    a: InteractionMatrix, d_diag: np.ndarray, beta: float, constant_d: bool
) -> np.ndarray:
    """Eigenvalues of beta * A + D."""
    if constant_d:
        return beta * a.eigenvalues + d_diag[0]
    return np.linalg.eigvalsh(beta * a.a + np.diag(d_diag))


def _residual_min_eig(a: InteractionMatrix, design: RegressionDesign, d_diag: np.ndarray) -> float:
    """lambda_min of n^-1 (AX)^T (I - DX (X^T D^2 X)^-1 X^T D) (AX)."""
    ax = a.a @ design.x
    dx = d_diag[:, None] * design.x
    coef, *_ = linalg.lstsq(dx, ax)
    residual = ax - dx @ coef
    gram = residual.T @ residual / design.n
    return float(np.linalg.eigvalsh(0.5 * (gram + gram.T))[0])


def validate_assumptions(
    a: InteractionMatrix,
    design: RegressionDesign,
    box: ParameterBox,
    model_kind: str,
    frob_c: Optional[float] = None,
    config: Optional[ValidatorConfig] = None,
) -> AssumptionReport:
    """
    Evaluate the structural conditions behind the consistency guarantees.

    Failures are reported, never raised, including a beta * A + D that is
    not positive definite somewhere on the beta grid.

    Args:
        a: Interaction matrix.
        design: Features (with D for the linear model).
        box: Parameter box; its B sets the beta grid.
        model_kind: "logistic" or "linear".
        frob_c: Threshold c in ||A||_F^2 >= c n; overrides ``config.frob_c``.
        config: Validator settings.

    Returns:
        AssumptionReport: Individual checks and their conjunction.

    Raises:
        DimensionError: If ``a`` and ``design`` disagree on n.
    """
    check_model_kind(model_kind)
    config = config or ValidatorConfig()
    c = config.frob_c if frob_c is None else float(frob_c)
    if a.n != design.n:
        raise DimensionError(f"Interaction matrix has n={a.n} but the design has n={design.n}")

    n = design.n
    checks: List[AssumptionCheck] = []
    asymmetry = float(np.max(np.abs(a.a - a.a.T))) if n else 0.0
    diagonal = float(np.max(np.abs(np.diagonal(a.a)))) if n else 0.0
    checks.append(AssumptionCheck("symmetry", asymmetry, 0.0, asymmetry == 0.0, "=="))
    checks.append(AssumptionCheck("zero_diagonal", diagonal, 0.0, diagonal == 0.0, "=="))

    if model_kind == "logistic":
        checks.append(
            AssumptionCheck("norm_inf", a.norm_inf, 1.0, a.norm_inf <= 1.0 + NORM_SLACK, "<=")
        )
        checks.append(AssumptionCheck("norm2 (info)", a.norm2, None, True, ""))
    else:
        checks.append(AssumptionCheck("norm2", a.norm2, 1.0, a.norm2 <= 1.0 + NORM_SLACK, "<="))

    frob_threshold = c * n
    checks.append(
        AssumptionCheck(
            "frobenius_sq", a.frob_sq, frob_threshold, a.frob_sq >= frob_threshold, ">="
        )
    )

    q_eigs = np.linalg.eigvalsh(design.q)
    q_min = float(q_eigs[0])
    checks.append(
        AssumptionCheck("q_min_eig", q_min, config.eig_floor, q_min > config.eig_floor, ">")
    )
    checks.append(
        AssumptionCheck("q_max_eig", float(q_eigs[-1]), None, bool(np.isfinite(q_eigs[-1])), "")
    )

    if model_kind == "logistic":
        m_observed = design.feature_bound
        if config.feature_bound is None:
            checks.append(AssumptionCheck("feature_bound (info)", m_observed, None, True, ""))
        else:
            checks.append(
                AssumptionCheck(
                    "feature_bound",
                    m_observed,
                    config.feature_bound,
                    m_observed <= config.feature_bound,
                    "<=",
                )
            )
    else:
        checks.extend(_linear_checks(a, design, box, config))

    report = AssumptionReport(model_kind=model_kind, checks=tuple(checks))
    if report.overall:
        logger.debug(f"Assumption checks ({model_kind}) passed for n={n}")
    else:
        logger.debug(f"Assumption checks ({model_kind}) failed: {', '.join(report.failed())}")
    return report


def _linear_checks(
    a: InteractionMatrix,
    design: RegressionDesign,
    box: ParameterBox,
    config: ValidatorConfig,
) -> List[AssumptionCheck]:
    d_diag = design.require_d_diag()
    constant_d = design.has_constant_d()
    betas = np.linspace(-box.beta_bound, box.beta_bound, config.beta_grid_points)

    not_pd = 0
    cov_min = np.inf
    cov_max = 0.0
    for beta in betas:
        spectrum = _precision_spectrum(a, d_diag, float(beta), constant_d)
        if spectrum[0] <= 0.0:
            not_pd += 1
            continue
        # Covariance eigenvalues are reciprocals of precision eigenvalues
        cov_min = min(cov_min, 1.0 / float(spectrum[-1]))
        cov_max = max(cov_max, 1.0 / float(spectrum[0]))

    checks = [
        AssumptionCheck("precision_pd_failures", float(not_pd), 0.0, not_pd == 0, "=="),
    ]
    if not_pd == len(betas):
        cov_min, cov_max = 0.0, np.inf
    ceiling = 1.0 / config.eig_floor
    checks.append(
        AssumptionCheck(
            "cov_min_eig",
            cov_min,
            config.eig_floor,
            not_pd == 0 and cov_min > config.eig_floor,
            ">",
        )
    )
    checks.append(
        AssumptionCheck("cov_max_eig", cov_max, ceiling, not_pd == 0 and cov_max < ceiling, "<")
    )

    residual = _residual_min_eig(a, design, d_diag)
    checks.append(
        AssumptionCheck(
            "residual_min_eig", residual, config.eig_floor, residual > config.eig_floor, ">"
        )
    )
    return checks


# --------------------------------------------------------------------------
# Strong-concavity diagnostics
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HatMatrix:
    """
    Residual projector F = I - X (X^T X)^-1 X^T.

    F is symmetric and idempotent with trace n - d, and F X = 0.
    """

    f: np.ndarray

    @property
    def n(self) -> int:
        """Dimension of F."""
        return int(self.f.shape[0])

    def check_invariants(self, x: np.ndarray) -> None:
        """
        Raise InvariantError if F is not the residual projector for ``x``.

        Tolerances: Frobenius 1e-8 * n for F^2 - F and F X, absolute 1e-6
        for the trace.
        """
        n, d = x.shape
        if np.linalg.norm(self.f @ self.f - self.f) > 1e-8 * n:
            raise InvariantError("Hat matrix is not idempotent")
        if abs(np.trace(self.f) - (n - d)) > 1e-6:
            raise InvariantError("Hat matrix trace differs from n - d")
        if np.linalg.norm(self.f @ x) > 1e-8 * n:
            raise InvariantError("Hat matrix does not annihilate X")


def hat_matrix(design: RegressionDesign) -> HatMatrix:
    """
    Build F = I - X (X^T X)^-1 X^T.

    Raises:
        RankDeficientError: If cond(X^T X) >= 1e12.
    """
    x = design.x
    gram = x.T @ x
    condition = np.linalg.cond(gram)
    if not np.isfinite(condition) or condition >= MAX_GRAM_CONDITION:
        raise RankDeficientError(f"X^T X is rank deficient (condition number {condition:.3e})")

    factor = linalg.cho_factor(gram, lower=True)
    f = np.eye(design.n) - x @ linalg.cho_solve(factor, x.T)
    f = 0.5 * (f + f.T)
    f.flags.writeable = False
    return HatMatrix(f=f)


def index_selection(w: np.ndarray) -> np.ndarray:
    """
    Greedy row/column matching on a square matrix.

    At each step, take the remaining row with the largest l2 norm in the
    working matrix, match it to the remaining column holding that row's
    largest absolute entry, then zero the row and the column. Ties go to
    the lowest index.

    Args:
        w: Square matrix.

    Returns:
        np.ndarray: ``h`` with ``h[i]`` the column matched to row ``i``; a
        permutation of 0..n-1.

    Raises:
        DimensionError: If ``w`` is not square.
    """
    work = np.array(w, dtype=np.float64, copy=True)
    if work.ndim != 2 or work.shape[0] != work.shape[1]:
        raise DimensionError(f"index_selection needs a square matrix, got shape {work.shape}")
    n = work.shape[0]

    row_sq = np.sum(work * work, axis=1)
    rows_left = np.ones(n, dtype=bool)
    cols_left = np.ones(n, dtype=bool)
    h = np.full(n, -1, dtype=np.int64)

    for _ in range(n):
        # argmax returns the first maximum, which is the lowest index
        i = int(np.argmax(np.where(rows_left, row_sq, -np.inf)))
        j = int(np.argmax(np.where(cols_left, np.abs(work[i]), -np.inf)))
        h[i] = j

        rows_left[i] = False
        cols_left[j] = False
        row_sq -= work[:, j] * work[:, j]
        np.maximum(row_sq, 0.0, out=row_sq)
        work[i, :] = 0.0
        work[:, j] = 0.0
        row_sq[i] = 0.0

    return h


@dataclass(frozen=True)
class StrongConcavityReport:
    """
    Hat-matrix quantities for one (A, X) pair.

    Attributes:
        fa_frob_sq: ||F A||_F^2.
        fa_norm2: ||F A||_2.
        selected_sum: sum_i (F A)_{i, h(i)}^2 with h from index selection.
        frobenius_lower_bound: ||A||_F^2 - d.
        frobenius_bound_holds: fa_frob_sq >= frobenius_lower_bound - 1e-6.
        fm_norm_sq_per_n: ||F m(y)||^2 / n when a response vector was given.
        selection: The matching h.
    """

    fa_frob_sq: float
    fa_norm2: float
    selected_sum: float
    frobenius_lower_bound: float
    frobenius_bound_holds: bool
    fm_norm_sq_per_n: Optional[float] = None
    selection: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        """Serialize scalar fields to a dictionary."""
        return {
            "fa_frob_sq": self.fa_frob_sq,
            "fa_norm2": self.fa_norm2,
            "selected_sum": self.selected_sum,
            "frobenius_lower_bound": self.frobenius_lower_bound,
            "frobenius_bound_holds": self.frobenius_bound_holds,
            "fm_norm_sq_per_n": self.fm_norm_sq_per_n,
        }


def strong_concavity_diagnostic(
    a: InteractionMatrix,
    design: RegressionDesign,
    y: Optional[np.ndarray] = None,
) -> StrongConcavityReport:
    """
    Compute F A and the quantities that drive strong concavity.

    When ||A||_2 <= 1 the bound ||F A||_F^2 >= ||A||_F^2 - d must hold;
    a violation there raises InvariantError. For larger spectral norms the
    outcome is only reported.

    Args:
        a: Interaction matrix.
        design: Features.
        y: Optional responses; adds ||F m(y)||^2 / n to the report.

    Raises:
        RankDeficientError: Propagated from :func:`hat_matrix`.
        DimensionError: If shapes disagree.
    """
    if a.n != design.n:
        raise DimensionError(f"Interaction matrix has n={a.n} but the design has n={design.n}")
    f = hat_matrix(design).f
    fa = f @ a.a

    fa_frob_sq = float(np.sum(fa * fa))
    fa_norm2 = float(np.linalg.norm(fa, 2)) if a.n else 0.0
    h = index_selection(fa)
    selected_sum = float(np.sum(fa[np.arange(a.n), h] ** 2))

    lower_bound = a.frob_sq - design.d
    holds = fa_frob_sq >= lower_bound - 1e-6
    if not holds:
        if a.norm2 <= 1.0 + NORM_SLACK:
            raise InvariantError(
                f"||FA||_F^2 = {fa_frob_sq:.6g} fell below ||A||_F^2 - d = {lower_bound:.6g}"
            )
        logger.warning(
            f"||FA||_F^2 = {fa_frob_sq:.6g} below ||A||_F^2 - d = {lower_bound:.6g} "
            f"(||A||_2 = {a.norm2:.4g} > 1)"
        )

    fm = None
    if y is not None:
        residual = f @ a.magnetizations(np.asarray(y, dtype=np.float64))
        fm = float(residual @ residual / a.n)

    return StrongConcavityReport(
        fa_frob_sq=fa_frob_sq,
        fa_norm2=fa_norm2,
        selected_sum=selected_sum,
        frobenius_lower_bound=lower_bound,
        frobenius_bound_holds=holds,
        fm_norm_sq_per_n=fm,
        selection=h,
    )
