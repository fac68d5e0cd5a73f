import numpy as np
import pytest

from qnpe.baselines import BfgsState, bfgs_step, gd_step, solve_bfgs, solve_gd
from qnpe.core import SolverConfig
from qnpe.problems import make_quadratic, quadratic_objective


class TestGradientDescent:
    def test_minimizer_is_fixed_point(self):
        obj = make_quadratic(6, 1.0, 10.0, seed=0)
        out = gd_step(obj.minimizer, obj)
        assert np.allclose(out, obj.minimizer, atol=1e-12)

    def test_scalar_converges_in_one_step(self):
        obj = quadratic_objective(np.array([[4.0]]), np.array([2.0]), 4.0, 4.0)
        out = gd_step(np.array([7.0]), obj)
        assert out[0] == pytest.approx(0.5, rel=1e-15)

    def test_diagonal_contraction_matches_linear_map(self):
        a = np.diag([1.0, 10.0])
        obj = quadratic_objective(a, np.array([1.0, 10.0]), 1.0, 10.0)
        rng = np.random.default_rng(0)
        contraction = np.eye(2) - a / 10.0
        for _ in range(5):
            x = rng.standard_normal(2)
            stepped = gd_step(x, obj)
            mapped = obj.minimizer + contraction @ (x - obj.minimizer)
            assert np.allclose(stepped, mapped, atol=1e-12)
            ratio = np.linalg.norm(stepped - obj.minimizer)
            ratio /= np.linalg.norm(x - obj.minimizer)
            assert ratio <= 0.9 + 1e-12

    def test_solver_loop_terminates(self):
        obj = make_quadratic(5, 1.0, 10.0, seed=1)
        report = solve_gd(obj, SolverConfig(grad_tol=1e-8, max_iters=2000))
        assert report.termination == "grad_tol"
        assert report.method == "gd"
        assert all(r.eta == 1.0 / obj.l1 for r in report.records)


class TestBfgs:
    def test_secant_identity_after_update(self):
        obj = make_quadratic(6, 1.0, 30.0, seed=2)
        x0 = np.random.default_rng(3).standard_normal(6)
        state = BfgsState(x0, np.eye(6), obj.grad(x0))
        for _ in range(5):
            prev_x, prev_g = state.x, state.grad
            state, _, _ = bfgs_step(state, obj)
            s = state.x - prev_x
            y = state.grad - prev_g
            if y @ s > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
                assert np.allclose(state.h @ y, s, atol=1e-10)

    def test_scalar_learns_inverse_curvature_in_one_update(self):
        obj = quadratic_objective(np.array([[4.0]]), np.array([0.0]), 4.0, 4.0)
        state = BfgsState(np.array([1.0]), np.eye(1), obj.grad(np.array([1.0])))
        state, _, _ = bfgs_step(state, obj)
        assert state.h[0, 0] == pytest.approx(0.25, rel=1e-12)

    def test_converges_within_sixty_iterations(self):
        obj = make_quadratic(10, 1.0, 100.0, seed=7)
        x0 = np.random.default_rng(7).standard_normal(10)
        report = solve_bfgs(
            obj, SolverConfig(grad_tol=1e-10, max_iters=60), x0=x0
        )
        assert report.termination == "grad_tol"
        assert report.iterations <= 60

    def test_inverse_approximation_stays_positive_definite(self):
        obj = make_quadratic(8, 1.0, 50.0, seed=4)
        x0 = np.random.default_rng(5).standard_normal(8)
        state = BfgsState(x0, np.eye(8), obj.grad(x0))
        for _ in range(25):
            state, _, _ = bfgs_step(state, obj)
            assert np.linalg.eigvalsh(state.h)[0] > 0.0

    def test_report_schema_compatible(self):
        obj = make_quadratic(5, 1.0, 10.0, seed=0)
        report = solve_bfgs(obj, SolverConfig(grad_tol=1e-8, max_iters=100))
        assert report.method == "bfgs"
        for rec in report.records:
            assert rec.matvecs_linsolve == 0
            assert rec.loss_value is None
            assert rec.dist_sq is not None
