import dataclasses

import numpy as np
import pytest

from qnpe.core import (
    Objective,
    SolverConfig,
    budget_log_term,
    config_from_kv,
    config_to_kv,
    default_delta,
    resolve_initial_matrix,
    validate_config,
)
from qnpe.errors import (
    DegenerateCurvature,
    ParameterConflict,
    SpectrumViolation,
    StepSeedTooSmall,
)


def simple_objective(mu=1.0, l1=4.0, d=3):
    return Objective(dim=d, grad=lambda x: l1 * x, mu=mu, l1=l1)


class TestValidateConfig:
    def test_theory_defaults(self):
        obj = simple_objective(mu=1.0, l1=4.0)
        cfg = validate_config(SolverConfig(), obj)
        assert cfg.alpha1 == 0.25
        assert cfg.alpha2 == 0.25
        assert cfg.beta == 0.5
        assert cfg.sigma0 == 1.0 / 16.0
        assert cfg.rho == 1.0 / 18.0
        assert cfg.delta == min(1.0 / 3.0, 1.0)

    def test_delta_default_caps_at_one(self):
        # mu/(L1 - mu) > 1 whenever mu > L1/2
        obj = simple_objective(mu=3.0, l1=4.0)
        assert validate_config(SolverConfig(), obj).delta == 1.0

    def test_delta_clamps_when_mu_equals_l1(self):
        obj = simple_objective(mu=1.0, l1=1.0)
        cfg = validate_config(SolverConfig(), obj)
        assert cfg.delta == 1.0

    def test_alpha_conflict(self):
        obj = simple_objective()
        with pytest.raises(ParameterConflict):
            validate_config(SolverConfig(alpha1=0.6, alpha2=0.5), obj)

    def test_alpha_ranges(self):
        obj = simple_objective()
        with pytest.raises(ParameterConflict):
            validate_config(SolverConfig(alpha1=-0.1), obj)
        with pytest.raises(ParameterConflict):
            validate_config(SolverConfig(alpha2=0.0), obj)
        with pytest.raises(ParameterConflict):
            validate_config(SolverConfig(beta=1.0), obj)

    def test_step_seed_too_small(self):
        obj = simple_objective(mu=1.0, l1=1.0)
        with pytest.raises(StepSeedTooSmall):
            validate_config(SolverConfig(sigma0=1e-9), obj)

    def test_step_seed_floor_is_inclusive(self):
        obj = simple_objective(mu=1.0, l1=2.0)
        cfg = validate_config(SolverConfig(sigma0=0.25 * 0.5 / 2.0), obj)
        assert cfg.sigma0 == 0.0625

    def test_degenerate_curvature(self):
        obj = simple_objective(mu=2.0, l1=1.0)
        with pytest.raises(DegenerateCurvature):
            validate_config(SolverConfig(), obj)
        with pytest.raises(DegenerateCurvature):
            validate_config(SolverConfig(), simple_objective(mu=0.0))

    def test_b0_scalar_out_of_band(self):
        obj = simple_objective(mu=1.0, l1=4.0)
        with pytest.raises(SpectrumViolation):
            validate_config(SolverConfig(b0=8.0), obj)
        with pytest.raises(SpectrumViolation):
            validate_config(SolverConfig(b0=0.5), obj)

    def test_b0_matrix_out_of_band(self):
        obj = simple_objective(mu=1.0, l1=4.0, d=2)
        with pytest.raises(SpectrumViolation):
            validate_config(SolverConfig(b0=np.diag([1.0, 5.0])), obj)

    def test_b0_matrix_in_band(self):
        obj = simple_objective(mu=1.0, l1=4.0, d=2)
        cfg = validate_config(SolverConfig(b0=np.diag([1.0, 4.0])), obj)
        assert np.array_equal(cfg.b0, np.diag([1.0, 4.0]))

    def test_idempotent(self):
        obj = simple_objective(mu=1.0, l1=4.0)
        first = validate_config(SolverConfig(), obj)
        second = validate_config(first, obj)
        for field in dataclasses.fields(SolverConfig):
            assert getattr(first, field.name) == getattr(second, field.name)

    def test_oracle_mode_checked(self):
        with pytest.raises(ParameterConflict):
            validate_config(SolverConfig(oracle_mode="magic"), simple_objective())


class TestBudgetLogTerm:
    def test_default_sigma0_zeroes_the_gradient_budget_term(self):
        # log_{1/beta}(4 sigma0 L1) with sigma0 = 1/(4 L1) is exactly zero
        for l1 in (1.0, 0.3, 1e3, 7.7):
            cfg = validate_config(SolverConfig(), simple_objective(mu=0.1, l1=l1))
            assert budget_log_term(4.0 * cfg.sigma0 * l1, cfg.beta) == 0.0

    def test_plain_values(self):
        assert budget_log_term(8.0, 0.5) == 3.0
        assert budget_log_term(10.0, 0.5) == pytest.approx(np.log2(10.0))


class TestInitialMatrix:
    def test_default_is_l1_identity(self):
        obj = simple_objective(mu=1.0, l1=4.0, d=3)
        assert np.array_equal(
            resolve_initial_matrix(SolverConfig(), obj), 4.0 * np.eye(3)
        )

    def test_scalar_policy(self):
        obj = simple_objective(mu=1.0, l1=4.0, d=2)
        assert np.array_equal(
            resolve_initial_matrix(SolverConfig(b0=2.0), obj), 2.0 * np.eye(2)
        )

    def test_dimension_mismatch(self):
        obj = simple_objective(d=3)
        with pytest.raises(SpectrumViolation):
            resolve_initial_matrix(SolverConfig(b0=np.eye(2)), obj)


class TestKvFormat:
    def test_round_trip(self):
        obj = simple_objective(mu=1.0, l1=4.0)
        cfg = validate_config(SolverConfig(seed=17, dist_tol=1e-12), obj)
        parsed = config_from_kv(config_to_kv(cfg))
        for field in dataclasses.fields(SolverConfig):
            assert getattr(parsed, field.name) == getattr(cfg, field.name)

    def test_none_encoding(self):
        text = config_to_kv(SolverConfig())
        assert "alpha1=none" in text.splitlines()
        assert config_from_kv(text).alpha1 is None

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError):
            config_from_kv("bogus=1\n")

    def test_matrix_b0_not_encodable(self):
        with pytest.raises(ValueError):
            config_to_kv(SolverConfig(b0=np.eye(2)))


class TestDefaultDelta:
    def test_matches_formula(self):
        assert default_delta(1.0, 4.0) == pytest.approx(1.0 / 3.0)
        assert default_delta(1.0, 1.5) == 1.0
        assert default_delta(1.0, 1.0) == 1.0
