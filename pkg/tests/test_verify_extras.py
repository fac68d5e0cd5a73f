import math

import numpy as np
import pytest

from qnpe.core import SolverConfig
from qnpe.errors import BacktrackCapExceeded
from qnpe.problems import make_quadratic
from qnpe.solver import solve
from qnpe.verify import (
    iteration_complexity_bound,
    superlinear_denominator,
    superlinear_envelope,
    transition_iteration,
)


class TestDerivedQuantities:
    def test_transition_matches_envelope_denominator(self):
        # the rate (1 + mu/(4 L1) sqrt(k/N_tr))^-k rewrites the printed
        # envelope exactly: 16 L1^2 N_tr = (64/3) * denominator
        mu, l1, gap, l2, d0 = 1.0, 10.0, 30.0, 0.5, 4.0
        n_tr = transition_iteration(mu, l1, gap, l2, d0)
        denom = superlinear_denominator(mu, l1, gap, l2, d0)
        assert 16.0 * l1**2 * n_tr == pytest.approx(64.0 * denom / 3.0, rel=1e-12)

    def test_envelope_decreases_in_k(self):
        denom = superlinear_denominator(1.0, 10.0, 5.0, 0.0, 1.0)
        values = [superlinear_envelope(k, 1.0, denom) for k in range(0, 200, 10)]
        assert values[0] == 1.0
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_complexity_bound_is_sufficient(self):
        # running the solver for the predicted iteration count reaches eps
        obj = make_quadratic(10, 1.0, 50.0, seed=3)
        report = solve(
            obj, SolverConfig(oracle_mode="exact", grad_tol=0.0,
                              dist_tol=1e-10, max_iters=20000)
        )
        d0_sq = float(np.linalg.norm(report.x0 - obj.minimizer) ** 2)
        bound = iteration_complexity_bound(
            1e-10, obj.mu, obj.l1, report.n_tr, d0_sq
        )
        assert report.iterations <= math.ceil(bound)

    def test_complexity_bound_zero_when_already_accurate(self):
        assert iteration_complexity_bound(1.0, 1.0, 10.0, 2.0, 0.5) == 0.0


class TestMetadataGuards:
    def test_lying_smoothness_metadata_raises(self):
        from qnpe.core import Objective

        liar = Objective(dim=1, grad=lambda x: 100.0 * x, mu=0.5, l1=1.0)
        cfg = SolverConfig(max_backtracks_slack=0, max_iters=50)
        with pytest.raises(BacktrackCapExceeded):
            solve(liar, cfg, x0=np.array([1.0]))
