"""
Unit tests for netreg.logistic_mple module.
"""

import numpy as np
import pytest
from scipy.optimize import minimize
from scipy.special import expit, log_expit

from netreg.config import GibbsConfig, PgdConfig
from netreg.exceptions import ConvergenceError, InvariantError
from netreg.interaction import build_bounded_degree
from netreg.logistic_mple import (
    default_step_size,
    exact_gradient_moments,
    fit_logistic_mple,
    log_cosh,
    lpl_gradient,
    lpl_hessian,
    lpl_value,
    min_curvature,
    smoothness_bound,
)
from netreg.model_core import (
    Dataset,
    InteractionMatrix,
    LogisticParams,
    ParameterBox,
    RegressionDesign,
)
from netreg.sampling import ising_exact_distribution, ising_gibbs_sample

TIGHT = PgdConfig(tolerance=1e-10, max_iters=1_000_000)


def _random_params(rng: np.random.Generator, d: int, box: ParameterBox) -> LogisticParams:
    return LogisticParams(
        theta=rng.uniform(-box.theta_bound, box.theta_bound, d),
        beta=rng.uniform(-box.beta_bound, box.beta_bound),
    )


def _finite_difference(func, vector: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central differences of a vector-to-array map, stacked along the last axis."""
    columns = []
    for k in range(vector.shape[0]):
        offset = np.zeros_like(vector)
        offset[k] = step
        forward = np.asarray(func(vector + offset))
        backward = np.asarray(func(vector - offset))
        columns.append((forward - backward) / (2 * step))
    return np.stack(columns, axis=-1)


def _gibbs_dataset(n: int, d: int, seed: int, theta, beta: float) -> Dataset:
    rng = np.random.default_rng(seed)
    a = build_bounded_degree(n, 4, seed=seed)
    design = RegressionDesign(x=np.clip(rng.standard_normal((n, d)), -3.0, 3.0))
    params = LogisticParams(theta=np.asarray(theta, dtype=float), beta=beta)
    y = ising_gibbs_sample(params, design, a, GibbsConfig(burn_in=100, seed=seed))[0]
    return Dataset(design=design, interaction=a, y=y)


class TestLogCosh:
    """Tests for log_cosh."""

    def test_matches_numpy_in_range(self):
        """Test agreement with log(cosh(t)) where cosh does not overflow."""
        t = np.linspace(-30.0, 30.0, 601)

        np.testing.assert_allclose(log_cosh(t), np.log(np.cosh(t)), rtol=1e-12, atol=1e-15)

    def test_no_overflow(self):
        """Test that large arguments stay finite: ln cosh(t) ~ |t| - ln 2."""
        assert log_cosh(np.array([1000.0]))[0] == pytest.approx(1000.0 - np.log(2.0))


class TestLplValue:
    """Tests for lpl_value."""

    def test_origin(self, logistic_dataset):
        """Test that theta = 0, beta = 0 gives -ln 2."""
        params = LogisticParams(theta=np.zeros(2), beta=0.0)

        assert lpl_value(params, logistic_dataset) == pytest.approx(-np.log(2.0), abs=1e-15)

    def test_zero_features_no_coupling(self):
        """Test that x = 0 and beta = 0 give -ln 2 for any theta."""
        design = RegressionDesign(x=np.zeros((3, 1)))
        dataset = Dataset(
            design=design, interaction=InteractionMatrix.zeros(3), y=np.array([1.0, -1.0, 1.0])
        )
        params = LogisticParams(theta=np.array([0.9]), beta=0.0)

        assert lpl_value(params, dataset) == pytest.approx(-np.log(2.0), abs=1e-15)

    def test_path_graph_instance(self):
        """Test a three-unit path graph against a direct evaluation."""
        a = InteractionMatrix(np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]))
        x = np.array([1.0, -1.0, 0.5])
        y = np.array([1.0, -1.0, 1.0])
        dataset = Dataset(design=RegressionDesign(x=x), interaction=a, y=y)
        params = LogisticParams(theta=np.array([0.5]), beta=0.2)

        m = np.array([y[1], y[0] + y[2], y[1]])
        t = 0.5 * x + 0.2 * m
        expected = -np.log(2.0) + np.mean(y * t - np.log(np.cosh(t)))

        assert lpl_value(params, dataset) == pytest.approx(expected, rel=1e-12)

    def test_concave_along_segments(self, logistic_dataset, default_box, rng):
        """Test the midpoint inequality on 100 random segments."""
        for _ in range(100):
            p = _random_params(rng, 2, default_box).to_vector()
            q = _random_params(rng, 2, default_box).to_vector()
            mid = lpl_value(LogisticParams.from_vector(0.5 * (p + q)), logistic_dataset)
            ends = 0.5 * (
                lpl_value(LogisticParams.from_vector(p), logistic_dataset)
                + lpl_value(LogisticParams.from_vector(q), logistic_dataset)
            )
            assert mid >= ends - 1e-12

    def test_rejects_linear_dataset(self, linear_dataset):
        """Test that a linear dataset raises InvariantError."""
        with pytest.raises(InvariantError):
            lpl_value(LogisticParams(theta=np.zeros(2), beta=0.0), linear_dataset)


class TestLplGradient:
    """Tests for lpl_gradient."""

    def test_no_coupling_zero_beta_coordinate(self, rng):
        """Test that A = 0 makes the beta coordinate vanish."""
        design = RegressionDesign(x=rng.standard_normal((20, 2)))
        y = np.where(rng.random(20) < 0.5, -1.0, 1.0)
        dataset = Dataset(design=design, interaction=InteractionMatrix.zeros(20), y=y)

        gradient = lpl_gradient(LogisticParams(theta=np.array([0.3, -0.8]), beta=0.2), dataset)

        assert gradient[-1] == 0.0

    def test_origin(self, logistic_dataset):
        """Test that at the origin the theta part is (1/n) sum y_i x_i."""
        gradient = lpl_gradient(LogisticParams(theta=np.zeros(2), beta=0.0), logistic_dataset)
        x, y = logistic_dataset.design.x, logistic_dataset.y

        np.testing.assert_allclose(gradient[:2], x.T @ y / x.shape[0], atol=1e-15)

    def test_finite_differences(self, rng, default_box):
        """Test against central differences of lpl_value on an n = 30, d = 2 instance."""
        dataset = _gibbs_dataset(30, 2, seed=4, theta=[0.5, -0.3], beta=0.2)
        for _ in range(20):
            point = _random_params(rng, 2, default_box).to_vector()
            numeric = _finite_difference(
                lambda v: lpl_value(LogisticParams.from_vector(v), dataset), point
            )
            analytic = lpl_gradient(LogisticParams.from_vector(point), dataset)
            np.testing.assert_allclose(analytic, numeric, atol=1e-7)


class TestLplHessian:
    """Tests for lpl_hessian and the curvature helpers."""

    def test_single_feature_direction(self):
        """Test A = 0, x_i = e_1, theta = 0: -H has one entry equal to 1."""
        x = np.tile([1.0, 0.0], (5, 1))
        dataset = Dataset(
            design=RegressionDesign(x=x),
            interaction=InteractionMatrix.zeros(5),
            y=np.array([1.0, -1.0, 1.0, 1.0, -1.0]),
        )

        negative_h = -lpl_hessian(LogisticParams(theta=np.zeros(2), beta=0.3), dataset)

        expected = np.zeros((3, 3))
        expected[0, 0] = 1.0
        np.testing.assert_allclose(negative_h, expected, atol=1e-15)

    def test_finite_differences(self, logistic_dataset, default_box, rng):
        """Test against central differences of lpl_gradient."""
        for _ in range(20):
            point = _random_params(rng, 2, default_box).to_vector()
            numeric = _finite_difference(
                lambda v: lpl_gradient(LogisticParams.from_vector(v), logistic_dataset), point
            )
            analytic = lpl_hessian(LogisticParams.from_vector(point), logistic_dataset)
            np.testing.assert_allclose(analytic, numeric, atol=1e-6)

    def test_negative_semidefinite(self, logistic_dataset, default_box, rng):
        """Test v^T (-H) v >= -1e-10 on random directions and feasible points."""
        for _ in range(100):
            params = _random_params(rng, 2, default_box)
            v = rng.standard_normal(3)
            assert v @ (-lpl_hessian(params, logistic_dataset)) @ v >= -1e-10

    def test_smoothness_bound(self, rng):
        """Test spectrum(-H) in [0, d Theta^2 + 1] for |x_ik| <= Theta and ||A||_inf <= 1."""
        box = ParameterBox(theta_bound=1.0, beta_bound=0.4)
        a = build_bounded_degree(40, 4, seed=2)
        design = RegressionDesign(x=rng.uniform(-1.0, 1.0, (40, 2)))
        y = np.where(rng.random(40) < 0.5, -1.0, 1.0)
        dataset = Dataset(design=design, interaction=a, y=y)

        for _ in range(100):
            eigenvalues = np.linalg.eigvalsh(-lpl_hessian(_random_params(rng, 2, box), dataset))
            assert eigenvalues[0] >= -1e-12
            assert eigenvalues[-1] <= 2 * 1.0 + 1.0 + 1e-9
            assert eigenvalues[-1] <= smoothness_bound(dataset, box) + 1e-9

    def test_min_curvature_positive(self, logistic_dataset):
        """Test strong concavity at the origin on a generated instance."""
        assert min_curvature(LogisticParams(theta=np.zeros(2), beta=0.0), logistic_dataset) > 0


class TestStepSize:
    """Tests for default_step_size."""

    def test_smoothness_rule(self, logistic_dataset, default_box):
        """Test that the default is 1 / smoothness_bound <= 1 / (d Theta^2 + 1)."""
        step = default_step_size(logistic_dataset, default_box)

        assert step == pytest.approx(1.0 / smoothness_bound(logistic_dataset, default_box))
        assert step <= 1.0 / 3.0

    def test_sqrt_rule(self, logistic_dataset, default_box):
        """Test the 1 / sqrt(d Theta^2 + 1) rule."""
        step = default_step_size(logistic_dataset, default_box, "sqrt_smoothness")

        assert step == pytest.approx(1.0 / np.sqrt(3.0))

    def test_unknown_rule(self, logistic_dataset, default_box):
        """Test that an unknown rule raises ValueError."""
        with pytest.raises(ValueError, match="Unknown step_rule"):
            default_step_size(logistic_dataset, default_box, "armijo")


class TestFitLogisticMple:
    """Tests for fit_logistic_mple."""

    def test_default_tolerance_and_box(self, logistic_dataset, default_box):
        """Test the 1/sqrt(n) default tolerance and feasibility of the result."""
        fitted, diagnostics = fit_logistic_mple(logistic_dataset, default_box)

        assert diagnostics.tolerance == pytest.approx(1.0 / np.sqrt(60))
        assert diagnostics.grad_norm <= diagnostics.tolerance
        assert default_box.contains(fitted)
        assert diagnostics.min_curvature is not None

    def test_deterministic(self, logistic_dataset, default_box):
        """Test that refitting gives the same point bit for bit."""
        first, _ = fit_logistic_mple(logistic_dataset, default_box, TIGHT)
        second, _ = fit_logistic_mple(logistic_dataset, default_box, TIGHT)

        assert np.array_equal(first.to_vector(), second.to_vector())

    def test_matches_grid_search(self):
        """Test d = 1, n = 50 against a refined grid search over the box."""
        box = ParameterBox(theta_bound=1.0, beta_bound=0.4)
        dataset = _gibbs_dataset(50, 1, seed=12, theta=[0.6], beta=0.2)
        x, m, y = dataset.design.x[:, 0], dataset.magnetizations, dataset.y

        def argmax(thetas, betas):
            best_value, best_point = -np.inf, None
            for theta in thetas:
                t = theta * x + betas[:, None] * m
                values = np.mean(y * t - log_cosh(t), axis=1)
                j = int(np.argmax(values))
                if values[j] > best_value:
                    best_value, best_point = values[j], (theta, betas[j])
            return best_point

        def window(center, bound, half_width, resolution):
            grid = np.arange(center - half_width, center + half_width + resolution / 2, resolution)
            return np.unique(np.clip(grid, -bound, bound))

        theta_c, beta_c = argmax(np.linspace(-1.0, 1.0, 201), np.linspace(-0.4, 0.4, 81))
        best = np.array(
            argmax(window(theta_c, 1.0, 0.05, 2e-4), window(beta_c, 0.4, 0.05, 2e-4))
        )

        fitted, _ = fit_logistic_mple(dataset, box, TIGHT)

        assert np.linalg.norm(fitted.to_vector() - best) <= 1e-3

    @pytest.mark.slow
    def test_matches_vanilla_logistic_regression(self):
        """Test A = 0 against an independent Newton solve of the vanilla log-likelihood."""
        rng = np.random.default_rng(77)
        n = 2000
        x = np.clip(rng.standard_normal((n, 2)), -3.0, 3.0)
        theta0 = np.array([0.5, -0.3])
        y = np.where(rng.random(n) < expit(2.0 * x @ theta0), 1.0, -1.0)
        dataset = Dataset(design=RegressionDesign(x=x), interaction=InteractionMatrix.zeros(n), y=y)

        def negative_log_likelihood(theta):
            return -np.mean(log_expit(2.0 * y * (x @ theta)))

        def gradient(theta):
            return -x.T @ (2.0 * y * expit(-2.0 * y * (x @ theta))) / n

        def hessian(theta):
            p = expit(2.0 * x @ theta)
            return 4.0 * (x.T * (p * (1.0 - p))) @ x / n

        oracle = minimize(
            negative_log_likelihood,
            np.zeros(2),
            jac=gradient,
            hess=hessian,
            method="trust-exact",
            options={"gtol": 1e-12},
        )
        fitted, _ = fit_logistic_mple(dataset, ParameterBox(theta_bound=2.0, beta_bound=0.4), TIGHT)

        np.testing.assert_allclose(fitted.theta, oracle.x, atol=1e-6)
        assert fitted.beta == 0.0

    def test_iteration_cap(self, logistic_dataset, default_box):
        """Test that the cap raises ConvergenceError with a feasible best iterate."""
        config = PgdConfig(tolerance=1e-14, max_iters=2)
        with pytest.raises(ConvergenceError) as exc_info:
            fit_logistic_mple(logistic_dataset, default_box, config)

        lower, upper = default_box.logistic_bounds(2)
        best = exc_info.value.best_point
        assert np.all(best >= lower) and np.all(best <= upper)

    def test_rejects_linear_dataset(self, linear_dataset, default_box):
        """Test that a linear dataset raises InvariantError."""
        with pytest.raises(InvariantError):
            fit_logistic_mple(linear_dataset, default_box)


class TestExactGradientMoments:
    """Tests for exact_gradient_moments."""

    @pytest.mark.slow
    def test_variance_bounds_at_twelve_units(self, rng):
        """Test both second-moment ceilings by exact enumeration on 5 random 12-unit instances."""
        box = ParameterBox(theta_bound=1.0, beta_bound=0.4)
        for seed in range(5):
            a = build_bounded_degree(12, 3, seed=seed)
            design = RegressionDesign(x=np.clip(rng.standard_normal((12, 2)), -3.0, 3.0))
            params = _random_params(rng, 2, box)

            moments = exact_gradient_moments(params, design, a, beta_bound=box.beta_bound)

            assert moments.beta_moment <= moments.beta_ceiling
            assert moments.theta_moment <= moments.theta_ceiling
            assert moments.within_bounds
            assert moments.beta_ceiling == pytest.approx((12 + 1.6) * 12)

    def test_gradient_has_mean_zero_at_truth(self, rng):
        """Test that the theta part of n grad LPL has zero mean at the truth."""
        a = build_bounded_degree(8, 2, seed=0)
        design = RegressionDesign(x=rng.standard_normal((8, 1)))
        params = LogisticParams(theta=np.array([0.4]), beta=0.2)

        joint = ising_exact_distribution(params, design, a)
        m = joint.configs @ a.a
        residual = joint.configs - np.tanh(design.x @ params.theta + 0.2 * m)

        assert joint.expectation(residual @ design.x)[0] == pytest.approx(0.0, abs=1e-12)
        assert exact_gradient_moments(params, design, a).theta_moment > 0
