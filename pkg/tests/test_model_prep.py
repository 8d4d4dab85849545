"""Regression-problem ingestion, scaling, and reduction to sufficient stats.

The linear-algebra oracle solves the normal equations densely with
numpy.linalg and recomputes every quadratic form from scratch, so the
QR-based production path is checked against an independent route.
"""

import json

import numpy as np
import pytest

from interval_lab.model_prep import (
    IllConditionedDesignError,
    RegressionProblem,
    SufficientStats,
    ZeroResidualError,
    factorial_2x2,
    load_problem,
    reduce_problem,
    scale_problem,
)
from interval_lab.special_fn import t_two_sided


def random_problem(seed: int, n: int = 12, p: int = 4) -> RegressionProblem:
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p)) + 0.1
    y = rng.normal(size=n)
    a = rng.normal(size=p)
    c = rng.normal(size=p)
    return RegressionProblem(X=X, y=y, a_star=a, c_star=c, t_star=rng.normal())


def oracle_reduce(prob: RegressionProblem):
    """Everything from dense normal equations, no shared code with the target."""
    X, y = prob.X, prob.y
    G = np.linalg.inv(X.T @ X)
    v11 = prob.a_star @ G @ prob.a_star
    v22 = prob.c_star @ G @ prob.c_star
    a = prob.a_star / np.sqrt(v11)
    c = prob.c_star / np.sqrt(v22)
    t = prob.t_star / np.sqrt(v22)
    beta = G @ (X.T @ y)
    resid = y - X @ beta
    m = prob.n - prob.p
    sigma_hat = np.sqrt(resid @ resid / m)
    return {
        "a": a,
        "c": c,
        "t": t,
        "beta": beta,
        "theta_hat": a @ beta,
        "tau_hat": c @ beta - t,
        "sigma_hat": sigma_hat,
        "rho": a @ G @ c,
        "G": G,
        "v11": v11,
    }


class TestRegressionProblemValidation:
    def test_rejects_small_p(self):
        with pytest.raises(ValueError):
            RegressionProblem(
                X=np.ones((5, 1)), y=np.zeros(5), a_star=[1.0], c_star=[1.0], t_star=0.0
            )

    def test_rejects_n_not_larger_than_p(self):
        X = np.eye(3)
        with pytest.raises(ValueError):
            RegressionProblem(X=X, y=np.zeros(3), a_star=[1, 0, 0], c_star=[0, 1, 0], t_star=0.0)

    def test_rejects_zero_a_star(self):
        prob = random_problem(0)
        with pytest.raises(ValueError):
            RegressionProblem(
                X=prob.X, y=prob.y, a_star=np.zeros(4), c_star=prob.c_star, t_star=0.0
            )

    def test_rejects_collinear_functionals(self):
        prob = random_problem(1)
        with pytest.raises(ValueError):
            RegressionProblem(
                X=prob.X, y=prob.y, a_star=prob.a_star, c_star=2.5 * prob.a_star, t_star=0.0
            )

    def test_rejects_rank_deficient_design(self):
        X = np.ones((6, 3))
        X[:, 1] = np.arange(6.0)
        X[:, 2] = 2.0 * X[:, 1] - 3.0 * X[:, 0]
        with pytest.raises(IllConditionedDesignError):
            RegressionProblem(
                X=X, y=np.zeros(6), a_star=[1, 0, 0], c_star=[0, 1, 0], t_star=0.0
            )


class TestSufficientStats:
    def test_r_property(self):
        s = SufficientStats(theta_hat=1.0, tau_hat=3.0, sigma_hat=2.0, m=4, rho=0.5)
        assert s.r == 1.5

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"sigma_hat": 0.0},
            {"sigma_hat": -1.0},
            {"m": 0},
            {"rho": 1.0},
            {"rho": -1.5},
        ],
    )
    def test_validation(self, kwargs):
        base = dict(theta_hat=0.0, tau_hat=0.0, sigma_hat=1.0, m=4, rho=0.0)
        base.update(kwargs)
        with pytest.raises(ValueError):
            SufficientStats(**base)


class TestScaleProblem:
    def test_unit_quadratic_forms(self):
        for seed in range(6):
            prob = random_problem(seed)
            a, c, t = scale_problem(prob)
            G = oracle_reduce(prob)["G"]
            assert a @ G @ a == pytest.approx(1.0, abs=1e-12)
            assert c @ G @ c == pytest.approx(1.0, abs=1e-12)

    def test_idempotent_on_prescaled_input(self):
        prob = random_problem(7)
        a1, c1, t1 = scale_problem(prob)
        rescaled = RegressionProblem(
            X=prob.X, y=prob.y, a_star=a1, c_star=c1, t_star=t1
        )
        a2, c2, t2 = scale_problem(rescaled)
        np.testing.assert_allclose(a2, a1, rtol=1e-12)
        np.testing.assert_allclose(c2, c1, rtol=1e-12)
        assert t2 == pytest.approx(t1, rel=1e-12)

    def test_matches_dense_oracle(self):
        prob = random_problem(11)
        a, c, t = scale_problem(prob)
        ora = oracle_reduce(prob)
        np.testing.assert_allclose(a, ora["a"], rtol=1e-10)
        np.testing.assert_allclose(c, ora["c"], rtol=1e-10)
        assert t == pytest.approx(ora["t"], rel=1e-10)

    def test_factorial_direct_arithmetic(self):
        prob = factorial_2x2(np.arange(8.0))
        a, c, t = scale_problem(prob)
        # XtX = 8 I, so v11 = (4 + 4)/8 = 1 and v22 = 1/8 exactly
        np.testing.assert_allclose(a, prob.a_star, rtol=1e-14)
        np.testing.assert_allclose(c, prob.c_star * np.sqrt(8.0), rtol=1e-14)
        assert t == 0.0


class TestReduceProblem:
    def test_factorial_m_and_rho(self):
        stats = reduce_problem(factorial_2x2([1.1, 2.3, 0.7, 4.1, 1.9, 2.0, 0.5, 3.8]))
        assert stats.m == 4
        assert stats.rho == pytest.approx(-1.0 / np.sqrt(2.0), abs=1e-12)

    def test_matches_dense_oracle(self):
        for seed in (3, 4, 5):
            prob = random_problem(seed)
            stats = reduce_problem(prob)
            ora = oracle_reduce(prob)
            assert stats.theta_hat == pytest.approx(ora["theta_hat"], abs=1e-9)
            assert stats.tau_hat == pytest.approx(ora["tau_hat"], abs=1e-9)
            assert stats.sigma_hat == pytest.approx(ora["sigma_hat"], rel=1e-9)
            assert stats.rho == pytest.approx(ora["rho"], abs=1e-9)
            assert stats.m == prob.n - prob.p

    def test_zero_residual_rejected(self):
        prob = random_problem(9)
        y_in_span = prob.X @ np.array([1.0, -2.0, 0.5, 3.0])
        exact = RegressionProblem(
            X=prob.X, y=y_in_span, a_star=prob.a_star, c_star=prob.c_star, t_star=0.0
        )
        with pytest.raises(ZeroResidualError):
            reduce_problem(exact)

    def test_scaling_invariance_of_interval_endpoints(self):
        # the classical interval for theta_star = a_star' beta equals
        # sqrt(v11) times the standard interval computed in scaled units
        prob = random_problem(13)
        stats = reduce_problem(prob)
        ora = oracle_reduce(prob)
        crit = t_two_sided(0.05, stats.m)
        scaled_lo = stats.theta_hat - crit * stats.sigma_hat
        scaled_hi = stats.theta_hat + crit * stats.sigma_hat
        half_star = crit * ora["sigma_hat"] * np.sqrt(ora["v11"])
        theta_star_hat = prob.a_star @ ora["beta"]
        root = np.sqrt(ora["v11"])
        assert root * scaled_lo == pytest.approx(theta_star_hat - half_star, rel=1e-10)
        assert root * scaled_hi == pytest.approx(theta_star_hat + half_star, rel=1e-10)


class TestFactorial2x2:
    def test_orthogonal_design(self):
        prob = factorial_2x2(np.zeros(8) + 1.0)
        np.testing.assert_allclose(prob.X.T @ prob.X, 8.0 * np.eye(4), atol=1e-14)

    def test_wrong_count_rejected(self):
        with pytest.raises(ValueError):
            factorial_2x2([1.0, 2.0, 3.0])

    def test_zero_interaction_contrast(self):
        # cell means 1, 2, 3, 4 have zero interaction: 1 + 4 - 2 - 3 = 0
        stats = reduce_problem(factorial_2x2([0.5, 1.5, 2.5, 3.5, 1.5, 2.5, 3.5, 4.5]))
        assert stats.tau_hat == pytest.approx(0.0, abs=1e-12)


class TestLoadProblem:
    def test_dict_and_file_round_trip(self, tmp_path):
        prob = random_problem(2)
        doc = {
            "X": prob.X.tolist(),
            "y": prob.y.tolist(),
            "a": prob.a_star.tolist(),
            "c": prob.c_star.tolist(),
            "t": prob.t_star,
        }
        from_dict = load_problem(doc)
        path = tmp_path / "problem.json"
        path.write_text(json.dumps(doc))
        from_file = load_problem(path)
        for loaded in (from_dict, from_file):
            np.testing.assert_allclose(loaded.X, prob.X)
            np.testing.assert_allclose(loaded.y, prob.y)
            assert loaded.t_star == prob.t_star

    def test_missing_field(self):
        with pytest.raises(ValueError, match="missing"):
            load_problem({"X": [[1.0, 2.0]], "y": [1.0]})
