import numpy as np
import pytest

from qnpe.errors import DegenerateCurvature, StateMismatch, ZeroDisplacement
from qnpe.learner import (
    HessianLearner,
    LossSample,
    failure_budget,
    from_hat,
    loss,
    loss_gradient,
    project_frobenius_ball,
    to_hat,
)


def random_sample(d, rng):
    s = rng.standard_normal(d)
    y = rng.standard_normal(d)
    return LossSample(s, y)


class TestSpectralTransform:
    MU, L1 = 1.0, 3.0

    def test_center_maps_to_origin(self):
        b = 0.5 * (self.L1 + self.MU) * np.eye(4)
        assert np.allclose(to_hat(b, self.MU, self.L1), np.zeros((4, 4)), atol=1e-14)

    def test_edges(self):
        up = to_hat(self.L1 * np.eye(3), self.MU, self.L1)
        lo = to_hat(self.MU * np.eye(3), self.MU, self.L1)
        assert np.allclose(up, np.eye(3), atol=1e-14)
        assert np.allclose(lo, -np.eye(3), atol=1e-14)

    @pytest.mark.parametrize("seed", range(4))
    def test_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        b = rng.standard_normal((6, 6))
        b = 0.5 * (b + b.T)
        back = from_hat(to_hat(b, self.MU, self.L1), self.MU, self.L1)
        assert np.allclose(back, b, rtol=0.0, atol=1e-14 * np.abs(b).max())

    def test_degenerate_band(self):
        with pytest.raises(DegenerateCurvature):
            to_hat(np.eye(2), 1.0, 1.0)


class TestLoss:
    def test_exact_secant_zero(self):
        rng = np.random.default_rng(0)
        b = rng.standard_normal((5, 5))
        s = rng.standard_normal(5)
        assert loss(b, LossSample(s, b @ s)) == 0.0

    def test_zero_matrix_example(self):
        sample = LossSample(np.array([1.0, 0.0]), np.array([2.0, 0.0]))
        assert loss(np.zeros((2, 2)), sample) == pytest.approx(2.0)

    def test_hand_example(self):
        # B = I, s = (1,1), y = (1,0): ||(0,-1)||^2 / (2*2) = 1/4
        sample = LossSample(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
        assert loss(np.eye(2), sample) == pytest.approx(0.25)

    def test_zero_displacement_rejected(self):
        with pytest.raises(ZeroDisplacement):
            LossSample(np.zeros(3), np.ones(3))


class TestLossGradient:
    def test_unit_example(self):
        sample = LossSample(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        grad = loss_gradient(np.zeros((2, 2)), sample)
        expected = -np.outer([1.0, 0.0], [1.0, 0.0])
        assert np.allclose(grad, expected, atol=1e-14)

    def test_vanishes_on_exact_secant(self):
        rng = np.random.default_rng(1)
        b = rng.standard_normal((4, 4))
        s = rng.standard_normal(4)
        grad = loss_gradient(b, LossSample(s, b @ s))
        assert np.allclose(grad, np.zeros((4, 4)), atol=1e-14)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        d = 6
        b = rng.standard_normal((d, d))
        b = 0.5 * (b + b.T)
        sample = random_sample(d, rng)
        grad = loss_gradient(b, sample)
        h = 1e-6
        for _ in range(20):
            direction = rng.standard_normal((d, d))
            direction = 0.5 * (direction + direction.T)
            direction /= np.linalg.norm(direction)
            fd = (loss(b + h * direction, sample) - loss(b - h * direction, sample))
            fd /= 2.0 * h
            analytic = float(np.tensordot(grad, direction))
            assert analytic == pytest.approx(fd, rel=1e-6, abs=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_nuclear_norm_bound(self, seed):
        rng = np.random.default_rng(seed + 50)
        d = 7
        b = rng.standard_normal((d, d))
        b = 0.5 * (b + b.T)
        sample = random_sample(d, rng)
        nuclear = np.linalg.norm(loss_gradient(b, sample), "nuc")
        fro = np.linalg.norm(loss_gradient(b, sample))
        bound = np.sqrt(2.0 * loss(b, sample))
        assert fro <= nuclear + 1e-12
        assert nuclear <= bound + 1e-12


class TestProjection:
    def test_inside_unchanged(self):
        w = np.diag([0.5, 0.5])
        assert np.array_equal(project_frobenius_ball(w, 2.0), w)

    def test_scaling_example(self):
        # d=4, w=3I has Frobenius norm 6; radius 2 scales by 1/3
        w = 3.0 * np.eye(4)
        assert np.allclose(project_frobenius_ball(w, 2.0), np.eye(4), atol=1e-14)

    def test_zero(self):
        assert np.array_equal(
            project_frobenius_ball(np.zeros((3, 3)), 1.0), np.zeros((3, 3))
        )


class TestFailureBudget:
    def test_frozen_value(self):
        # q_1 = p / (2.5 * 2 * ln(2)^2); natural logarithm
        assert failure_budget(0.1, 1) == pytest.approx(0.0416273796, rel=1e-8)

    def test_decreasing_and_summable(self):
        p = 0.1
        values = [failure_budget(p, t) for t in range(1, 400)]
        assert all(v > 0 for v in values)
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert sum(values) <= p

    def test_round_zero_not_budgeted(self):
        with pytest.raises(ValueError):
            failure_budget(0.1, 0)


class TestLearner:
    MU, L1 = 1.0, 3.0

    def make(self, b0, **kw):
        defaults = dict(rho=1.0 / 18.0, delta=0.5, p=0.05, oracle_mode="exact")
        defaults.update(kw)
        return HessianLearner(b0, self.MU, self.L1, **defaults)

    def test_round_zero_plays_b0_verbatim(self):
        b0 = np.diag([1.0, 2.0])
        learner = self.make(b0)
        assert np.array_equal(learner.predict(), b0)

    def test_zero_w_maps_to_band_center(self):
        learner = self.make(2.0 * np.eye(2))
        learner.predict()
        learner.update_round(LossSample(np.array([1.0, 0.0]), np.array([2.0, 0.0])))
        learner.w = np.zeros((2, 2))
        b = learner.predict()
        assert np.allclose(b, 0.5 * (self.L1 + self.MU) * np.eye(2), atol=1e-14)

    def test_scalar_round_trace(self):
        # mu=1, L1=3, W=2 (scalar): exact oracle gives gamma=2, Bhat=1, B=3;
        # sample s=1, y=1: loss=(1-3)^2/2=2, grad=2, G=2, hinge inactive,
        # W' = clip(2 - 2*rho) to [-1, 1] = 1
        learner = self.make(np.array([[3.0]]), rho=1.0 / 18.0)
        learner.predict()
        learner.update_round(LossSample(np.array([1.0]), np.array([3.0])))
        learner.w = np.array([[2.0]])
        learner.t = 1
        b = learner.predict()
        assert b[0, 0] == pytest.approx(3.0)
        value = learner.update_round(LossSample(np.array([1.0]), np.array([1.0])))
        assert value == pytest.approx(2.0)
        assert learner.w[0, 0] == pytest.approx(1.0)

    def test_hinge_active_case_two_frozen_trace(self):
        # legal d=2 state with ||W||_F <= sqrt(2) but ||W||_op > 1:
        # W = diag(1.2, -0.4) -> gamma = 1.2, S = e1 e1^T, B = diag(3, 5/3).
        # Sample s = e2, y = -e2: grad = (8/3) e2 e2^T, the hinge argument
        # <G, Bhat> = -8/9 is negative, so the separator term fires:
        # W' = diag(1.2 - 4/81, -0.4 - 4/27) (projection inactive).
        # The untransformed action <G, B> = 40/9 would leave the first
        # entry untouched; this trace pins the transformed form.
        learner = self.make(2.0 * np.eye(2))
        learner.predict()
        learner.update_round(LossSample(np.array([1.0, 0.0]), np.array([2.0, 0.0])))
        learner.w = np.diag([1.2, -0.4])
        learner.t = 1
        b = learner.predict()
        assert np.allclose(b, np.diag([3.0, 5.0 / 3.0]), atol=1e-14)
        value = learner.update_round(
            LossSample(np.array([0.0, 1.0]), np.array([0.0, -1.0]))
        )
        assert value == pytest.approx(32.0 / 9.0)
        expected = np.diag([1.2 - 4.0 / 81.0, -0.4 - 4.0 / 27.0])
        assert np.allclose(learner.w, expected, atol=1e-14)

    def test_zero_gradient_fixed_point(self):
        rng = np.random.default_rng(3)
        b0 = 2.0 * np.eye(3)
        learner = self.make(b0)
        b = learner.predict()
        s = rng.standard_normal(3)
        w_before = learner.w.copy()
        learner.update_round(LossSample(s, b @ s))
        assert np.array_equal(learner.w, w_before)

    def test_projection_inactive_inside_ball(self):
        learner = self.make(2.0 * np.eye(2))
        b = learner.predict()
        sample = LossSample(np.array([1.0, 0.0]), np.array([2.1, 0.0]))
        grad = (2.0 / (self.L1 - self.MU)) * np.array(
            [[-(2.1 - b[0, 0]), 0.0], [0.0, 0.0]]
        )
        expected = learner.w - learner.rho * grad
        learner.update_round(sample)
        assert np.linalg.norm(expected) <= np.sqrt(2)
        assert np.allclose(learner.w, expected, atol=1e-14)

    def test_update_without_predict(self):
        learner = self.make(2.0 * np.eye(2))
        with pytest.raises(StateMismatch):
            learner.update_round(LossSample(np.ones(2), np.ones(2)))

    def test_feasibility_invariants_exact_mode(self):
        rng = np.random.default_rng(7)
        d = 8
        learner = self.make(self.L1 * np.eye(d))
        for _ in range(60):
            learner.predict()
            learner.update_round(random_sample(d, rng))
        sqrt_d = np.sqrt(d)
        for entry in learner.round_log:
            assert entry.w_fro_after <= sqrt_d + 1e-12
            assert entry.b_min >= self.MU / 2.0 - 1e-10
            assert entry.b_max <= self.L1 + self.MU / 2.0 + 1e-10

    @pytest.mark.parametrize("seed", range(3))
    def test_per_round_surrogate_domination(self, seed):
        # <G_t, Bhat_t - Bhat> <= <Gtilde_t, W_t - Bhat> for competitors in
        # the unit-operator-norm ball (the regret reduction inequality)
        rng = np.random.default_rng(seed)
        d = 6
        learner = self.make(self.L1 * np.eye(d))
        competitors = []
        for _ in range(10):
            raw = rng.standard_normal((d, d))
            raw = 0.5 * (raw + raw.T)
            lam, vecs = np.linalg.eigh(raw)
            lam = np.clip(lam, -1.0, 1.0)
            competitors.append((vecs * lam) @ vecs.T)
        for _ in range(40):
            b = learner.predict()
            outcome, b_hat = learner._pending
            w_before = learner.w.copy()
            sample = random_sample(d, rng)
            grad = (2.0 / (self.L1 - self.MU)) * np.array(
                loss_gradient(b, sample)
            )
            if outcome is not None and not outcome.inside:
                hinge = max(0.0, -float(np.tensordot(grad, b_hat)))
                surrogate = grad + hinge * outcome.separator()
            else:
                surrogate = grad
            learner.update_round(sample)
            # the learner's actual step must match the reconstructed
            # surrogate (hinge on the transformed action)
            expected_w = project_frobenius_ball(
                w_before - learner.rho * surrogate, np.sqrt(d)
            )
            assert np.allclose(learner.w, expected_w, atol=1e-13)
            for comp in competitors:
                lhs = float(np.tensordot(grad, b_hat - comp))
                rhs = float(np.tensordot(surrogate, w_before - comp))
                assert lhs <= rhs + 1e-10

    def test_small_loss_regret_synthetic_stream(self):
        # cumulative loss <= 18 ||B0 - H||_F^2 + 2 * cumulative loss of H
        rng = np.random.default_rng(11)
        d = 6
        target = np.diag(np.linspace(self.MU, self.L1, d))
        b0 = self.L1 * np.eye(d)
        learner = self.make(b0)
        samples = []
        for _ in range(200):
            s = rng.standard_normal(d)
            noise = 0.05 * rng.standard_normal(d) * np.linalg.norm(s)
            samples.append(LossSample(s, target @ s + noise))
        for sample in samples:
            learner.predict()
            learner.update_round(sample)
        competitor_loss = sum(loss(target, s) for s in samples)
        bound = 18.0 * np.linalg.norm(b0 - target) ** 2 + 2.0 * competitor_loss
        assert learner.cumulative_loss <= bound

    def test_degenerate_band_freezes_b(self):
        learner = HessianLearner(
            np.eye(3), 1.0, 1.0, rho=1.0 / 18.0, delta=1.0, p=0.05,
            oracle_mode="exact",
        )
        rng = np.random.default_rng(0)
        for _ in range(5):
            b = learner.predict()
            assert np.array_equal(b, np.eye(3))
            learner.update_round(random_sample(3, rng))
        assert learner.t == 5

    def test_lanczos_mode_runs(self):
        rng = np.random.default_rng(0)
        learner = self.make(
            self.L1 * np.eye(5), oracle_mode="lanczos",
            rng=np.random.default_rng(42),
        )
        for _ in range(10):
            learner.predict()
            learner.update_round(random_sample(5, rng))
        assert learner.matvecs > 0
        assert np.linalg.norm(learner.w) <= np.sqrt(5) + 1e-12
