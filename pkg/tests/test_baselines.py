import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cd_elastic_net, enet_objective_ref
from tracelasso.baselines import (duality_gap, elastic_net_objective, elastic_net_solve,
                                  lasso_solve, ridge_objective, ridge_solve, soft_threshold)
from tracelasso.exceptions import ConvergenceError, InvalidInputError
from tracelasso.solver import Problem


def random_problem(n=10, p=20, seed=0):
    rng = np.random.default_rng(seed)
    return Problem(rng.standard_normal((n, p)), rng.standard_normal(n))


def test_soft_threshold():
    np.testing.assert_array_equal(soft_threshold(np.array([3.0, -0.5, -2.0]), 1.0), [2.0, 0.0, -1.0])


class TestRidge:
    @pytest.mark.parametrize("shape", [(10, 20), (20, 10)])
    def test_normal_equations(self, shape):
        prob = random_problem(*shape, seed=1)
        lam = 0.7
        w = ridge_solve(prob, lam).w
        grad = prob.X.T @ (prob.X @ w - prob.y) + lam * w
        np.testing.assert_allclose(grad, 0.0, atol=1e-10)

    def test_objective_below_zero_vector(self):
        prob = random_problem(seed=2)
        res = ridge_solve(prob, 1.0)
        assert res.objective <= ridge_objective(prob, np.zeros(prob.p), 1.0)

    def test_rejects_nonpositive(self):
        with pytest.raises(InvalidInputError):
            ridge_solve(random_problem(), 0.0)


class TestLasso:
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_coordinate_descent(self, seed):
        prob = random_problem(seed=seed)
        lam = 0.2 * np.max(np.abs(prob.X.T @ prob.y))
        res = lasso_solve(prob, lam, tol=1e-10)
        ref = enet_objective_ref(prob.X, prob.y, cd_elastic_net(prob.X, prob.y, lam), lam)
        assert res.objective == pytest.approx(ref, rel=1e-6)

    def test_orthonormal_closed_form(self):
        rng = np.random.default_rng(3)
        Q, _ = np.linalg.qr(rng.standard_normal((8, 5)))
        y = rng.standard_normal(8)
        w = lasso_solve(Problem(Q, y), 0.3, tol=1e-14).w
        np.testing.assert_allclose(w, soft_threshold(Q.T @ y, 0.3), atol=1e-10)

    def test_zero_above_threshold(self):
        prob = random_problem(seed=4)
        lam = np.max(np.abs(prob.X.T @ prob.y))
        assert np.all(lasso_solve(prob, lam).w == 0)

    @pytest.mark.parametrize("accelerated", [True, False])
    def test_objective_monotone(self, accelerated):
        prob = random_problem(seed=5)
        res = lasso_solve(prob, 0.5, accelerated=accelerated, tol=1e-10)
        assert np.all(np.diff(res.objective_trace) <= 0)

    def test_tight_tolerance_stops_at_rounding(self):
        prob = random_problem(seed=0)
        lam = 0.2 * np.max(np.abs(prob.X.T @ prob.y))
        res = lasso_solve(prob, lam, tol=1e-15)
        ref = enet_objective_ref(prob.X, prob.y, cd_elastic_net(prob.X, prob.y, lam), lam)
        assert res.objective == pytest.approx(ref, rel=1e-13)

    def test_iteration_cap(self):
        prob = random_problem(seed=6)
        with pytest.raises(ConvergenceError) as err:
            lasso_solve(prob, 1e-3, tol=1e-15, max_iter=5)
        assert err.value.x is not None

    def test_rejects_bad_lambda(self):
        with pytest.raises(InvalidInputError):
            lasso_solve(random_problem(), -1.0)


class TestElasticNet:
    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 1.0), st.floats(0.0, 2.0))
    @settings(max_examples=20, deadline=None)
    def test_matches_coordinate_descent(self, seed, frac, lam2):
        prob = random_problem(8, 12, seed=seed)
        lam1 = frac * np.max(np.abs(prob.X.T @ prob.y))
        res = elastic_net_solve(prob, lam1, lam2, tol=1e-10)
        ref_w = cd_elastic_net(prob.X, prob.y, lam1, lam2)
        ref = enet_objective_ref(prob.X, prob.y, ref_w, lam1, lam2)
        assert res.objective == pytest.approx(ref, rel=1e-6, abs=1e-10)
        assert res.objective <= elastic_net_objective(prob, np.zeros(prob.p), lam1, lam2)

    def test_reduces_to_ridge(self):
        prob = random_problem(seed=7)
        w = elastic_net_solve(prob, 0.0, 2.0, tol=1e-12).w
        np.testing.assert_allclose(w, ridge_solve(prob, 2.0).w, atol=1e-6)

    def test_gap_nonnegative_and_zero_at_optimum(self):
        prob = random_problem(seed=8)
        w = cd_elastic_net(prob.X, prob.y, 0.5, 0.3)
        assert duality_gap(prob, w, 0.5, 0.3) == pytest.approx(0.0, abs=1e-8)
        rng = np.random.default_rng(0)
        for _ in range(10):
            assert duality_gap(prob, rng.standard_normal(prob.p), 0.5, 0.3) >= -1e-12

    def test_rejects_both_zero(self):
        with pytest.raises(InvalidInputError):
            elastic_net_solve(random_problem(), 0.0, 0.0)
