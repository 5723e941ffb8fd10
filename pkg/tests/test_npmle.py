import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvalda import (
    DegenerateDataError,
    DiscreteMixing,
    DomainError,
    FeatureSummary,
    KernelContext,
    SolverConfig,
    build_mean_grid,
    build_variance_grid,
    fit_mean_mixing,
    fit_variance_mixing,
    log_f_v,
    log_likelihood_matrix_v,
    solve_mixture_weights,
)

from oracles import brute_force_best, mixture_objective


def summary(x, v, n1=2, n2=2):
    x = np.asarray(x, float)
    return FeatureSummary(x, v, x, np.zeros_like(x), n1, n2)


class TestGrids:
    def test_variance_grid_geometric(self):
        np.testing.assert_allclose(build_variance_grid([1.0, 100.0], 3), [1, 10, 100], rtol=1e-14)

    def test_variance_grid_endpoints(self):
        np.testing.assert_array_equal(build_variance_grid([100.0, 1.0], 2), [1.0, 100.0])

    def test_variance_grid_collapsed(self):
        np.testing.assert_array_equal(build_variance_grid([4.0, 4.0, 4.0], 50), [4.0])

    def test_variance_grid_floor(self):
        g = build_variance_grid([0.0, 2.0], 5)
        assert g[0] == pytest.approx(2e-12)
        assert g[-1] == 2.0
        assert np.all(np.diff(g) > 0)

    def test_variance_grid_all_zero(self):
        with pytest.raises(DegenerateDataError):
            build_variance_grid([0.0, 0.0], 10)

    def test_mean_grid(self):
        np.testing.assert_allclose(build_mean_grid([-1.0, 1.0], 3), [-1, 0, 1], atol=1e-15)
        np.testing.assert_array_equal(build_mean_grid([0.0, 0.0], 7), [0.0])
        np.testing.assert_allclose(build_mean_grid([0.0, 10.0], 5), [0, 2.5, 5, 7.5, 10])
        with pytest.raises(DomainError):
            build_mean_grid([], 3)


class TestDiscreteMixing:
    def test_validation(self):
        with pytest.raises(DomainError):
            DiscreteMixing([1.0, 1.0], [0.5, 0.5])
        with pytest.raises(DomainError):
            DiscreteMixing([1.0, 2.0], [0.6, 0.6])
        with pytest.raises(DomainError):
            DiscreteMixing([1.0, 2.0], [-0.1, 1.1])

    def test_atoms_drop_zero_weight(self):
        s, w = DiscreteMixing([1.0, 2.0, 3.0], [0.5, 0.0, 0.5]).atoms
        np.testing.assert_array_equal(s, [1.0, 3.0])


class TestSolver:
    def test_single_column_dominance(self):
        row = log_f_v(1.0, np.array([1.0, 5.0]), KernelContext(2, 1.0))
        np.testing.assert_allclose(row, [-1.0, -1.80944], atol=1e-5)
        res = solve_mixture_weights(np.tile(row, (3, 1)))
        assert res.weights[0] == pytest.approx(1.0, abs=1e-6)
        assert res.objective == pytest.approx(-1.0, abs=1e-6)
        # brute-force scan of the 1-D simplex agrees
        assert res.objective >= brute_force_best(np.tile(row, (3, 1)), steps=1000) - 1e-6

    def test_forced_simplex(self):
        L = np.array([[-1.0], [-2.0], [-4.5]])
        res = solve_mixture_weights(L)
        assert res.weights.tolist() == [1.0]
        assert res.iters == 1
        assert res.objective == pytest.approx(-2.5, abs=1e-15)

    def test_identical_columns_split_evenly(self, rng):
        col = rng.normal(size=(20, 1))
        res = solve_mixture_weights(np.hstack([col, col]))
        np.testing.assert_array_equal(res.weights, [0.5, 0.5])

    def test_dead_row(self):
        L = np.array([[0.0, -1.0], [-np.inf, -np.inf]])
        with pytest.raises(DegenerateDataError, match="feature 1"):
            solve_mixture_weights(L)

    def test_partial_inf_rows_ok(self):
        L = np.array([[0.0, -np.inf], [-1.0, -0.5]])
        res = solve_mixture_weights(L)
        assert np.isfinite(res.objective)

    def test_simplex_and_beats_uniform(self, rng):
        for _ in range(20):
            L = rng.normal(0, 3, size=(int(rng.integers(1, 40)), int(rng.integers(1, 12))))
            res = solve_mixture_weights(L)
            assert np.all(res.weights >= 0)
            assert abs(res.weights.sum() - 1) <= 1e-10
            K = L.shape[1]
            assert res.objective >= mixture_objective(L, np.full(K, 1 / K)) - 1e-12
            assert res.objective == pytest.approx(mixture_objective(L, res.weights), abs=1e-12)

    def test_ascent_every_iteration(self, rng):
        L = rng.normal(0, 2, size=(200, 30))
        trace = []
        solve_mixture_weights(L, SolverConfig(max_iters=500, rel_tol=1e-15), lambda i, o: trace.append(o))
        assert len(trace) == 501
        assert np.diff(trace).min() >= -1e-14

    def test_row_shift_invariance(self, rng):
        L = rng.normal(0, 2, size=(30, 6))
        shifted = L + rng.normal(0, 50, size=(30, 1))
        a = solve_mixture_weights(L)
        b = solve_mixture_weights(shifted)
        assert a.iters == b.iters
        np.testing.assert_allclose(a.weights, b.weights, atol=1e-9)

    def test_deterministic(self, rng):
        L = rng.normal(size=(50, 10))
        a, b = solve_mixture_weights(L), solve_mixture_weights(L.copy())
        assert a.weights.tobytes() == b.weights.tobytes() and a.objective == b.objective

    def test_truncation(self):
        # a column that is never competitive ends with exactly zero weight
        L = np.array([[0.0, -60.0]] * 5)
        res = solve_mixture_weights(L)
        assert res.weights[1] == 0.0 and res.weights[0] == 1.0

    def test_iteration_cap_reported(self, rng):
        L = rng.normal(size=(30, 8))
        res = solve_mixture_weights(L, SolverConfig(max_iters=3, rel_tol=1e-300))
        assert res.iters == 3


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 30), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_optimal_against_brute_force(p, K, seed):
    L = np.random.default_rng(seed).normal(0, 2, size=(p, K))
    assert solve_mixture_weights(L).objective >= brute_force_best(L) - 1e-6


class TestVarianceFit:
    def test_all_equal(self):
        f = fit_variance_mixing(summary(np.zeros(4), [2.5] * 4))
        np.testing.assert_array_equal(f.support, [2.5])
        np.testing.assert_array_equal(f.weights, [1.0])

    def test_forced_grid(self):
        f = fit_variance_mixing(summary(np.zeros(3), [1.0, 1.0, 1.0]), grid=[1.0, 5.0])
        assert f.weights[0] == pytest.approx(1.0, abs=1e-6)

    def test_two_point_law_beats_truth(self, rng):
        p, n1, n2 = 400, 10, 10
        sig = np.where(rng.random(p) < 0.4, 1.0, 4.0)
        v = sig * rng.chisquare(n1 + n2 - 2, p) / (n1 + n2 - 2)
        s = summary(np.zeros(p), v, n1, n2)
        grid = np.unique(np.r_[build_variance_grid(v, 40), 1.0, 4.0])
        f = fit_variance_mixing(s, grid=grid)
        truth = np.where(grid == 1.0, 0.4, 0.0) + np.where(grid == 4.0, 0.6, 0.0)
        L = log_likelihood_matrix_v(s, grid)
        assert f.objective >= mixture_objective(L, truth) - 1e-6
        assert f.objective == pytest.approx(mixture_objective(L, f.weights), abs=1e-12)

    def test_zero_variance_rows_skipped(self):
        s = summary(np.zeros(4), [0.0, 1.0, 2.0, 1.5], 3, 3)
        f = fit_variance_mixing(s, SolverConfig(grid_size_variance=10))
        assert f.support[0] == pytest.approx(2e-12)
        assert np.isfinite(f.objective)


class TestMeanFit:
    def test_point_grid(self):
        s = summary([0.0, 0.0], [1.0, 2.0])
        f = fit_variance_mixing(s)
        g = fit_mean_mixing(s, f, SolverConfig(grid_size_mean=1))
        np.testing.assert_array_equal(g.support, [0.0])
        np.testing.assert_array_equal(g.weights, [1.0])

    def test_symmetric(self, rng):
        s = summary(np.zeros(6), rng.uniform(0.5, 2, 6), 4, 4)
        f = fit_variance_mixing(s, SolverConfig(grid_size_variance=5))
        g = fit_mean_mixing(s, f, grid=[-0.7, 0.0, 0.7])
        assert g.weights[0] == pytest.approx(g.weights[2], abs=1e-6)
        # brute-force scan of the 2-D simplex for the same objective
        from mvalda.npmle import mean_log_likelihood
        ctx = KernelContext(s.dof, s.var_scale)
        L = mean_log_likelihood(s.x_diff, s.pooled_var, f, np.array([-0.7, 0.0, 0.7]), ctx)
        assert g.objective >= brute_force_best(L) - 1e-6

    def test_two_point_means_beat_truth(self, rng):
        p, n1, n2 = 500, 8, 8
        mu = np.where(rng.random(p) < 0.2, 1.0, 0.0)
        c = (n1 + n2) / (n1 * n2)
        x = mu + rng.normal(0, np.sqrt(c), p)
        v = rng.chisquare(n1 + n2 - 2, p) / (n1 + n2 - 2)
        s = summary(x, v, n1, n2)
        f = fit_variance_mixing(s, grid=[1.0])
        grid = np.linspace(-1.0, 2.0, 31)  # contains 0 and 1
        g = fit_mean_mixing(s, f, grid=grid)
        from mvalda.npmle import mean_log_likelihood
        L = mean_log_likelihood(x, v, f, grid, KernelContext(s.dof, c))
        truth = np.where(np.isclose(grid, 0.0), 0.8, 0.0) + np.where(np.isclose(grid, 1.0), 0.2, 0.0)
        assert g.objective >= mixture_objective(L, truth) - 1e-6
