"""Main loop: line search, strongly convex extragradient step, trial-step
propagation, conditional learner round, and full trace recording."""

from __future__ import annotations

import time
from typing import Optional

import numpy as np

from .core import (
    IterationRecord,
    Objective,
    SolverConfig,
    SolverReport,
    resolve_initial_matrix,
    validate_config,
)
from .errors import NonFiniteIterate
from .learner import HessianLearner, LossSample
from .linesearch import backtrack
from .verify import transition_iteration

Array = np.ndarray

#: consecutive zero-displacement iterations before declaring a stall
_STALL_LIMIT = 5


def extragradient_step(
    x: Array, x_hat: Array, g_hat: Array, eta: float, mu: float
) -> Array:
    """Strongly convex extragradient update
    (x - eta g_hat) / (1 + 2 eta mu) + (2 eta mu / (1 + 2 eta mu)) x_hat;
    reduces to x - eta g_hat at mu = 0."""
    denom = 1.0 + 2.0 * eta * mu
    return (x - eta * g_hat) / denom + (2.0 * eta * mu / denom) * x_hat


def solve(
    obj: Objective,
    cfg: Optional[SolverConfig] = None,
    x0: Optional[Array] = None,
) -> SolverReport:
    """Run the solver on `obj` from `x0` (zero vector by default).

    Stops when ||grad|| <= grad_tol, when ||x - x*||^2 <= dist_tol (if both
    are available), at max_iters, or when the iterate stops moving.

    Raises:
        NonFiniteIterate: NaN/Inf in an iterate or gradient, which signals
            inconsistent (mu, L1) metadata or a broken oracle.
    """
    cfg = validate_config(cfg if cfg is not None else SolverConfig(), obj)
    mu = float(obj.mu)
    d = obj.dim
    x = np.zeros(d) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (d,):
        raise ValueError(f"x0 must have shape ({d},)")
    x_start = x.copy()

    b0 = resolve_initial_matrix(cfg, obj)
    learner = HessianLearner(
        b0,
        mu,
        obj.l1,
        rho=cfg.rho,
        delta=cfg.delta,
        p=cfg.p,
        oracle_mode=cfg.oracle_mode,
        rng=np.random.default_rng(cfg.seed),
    )

    t_begin = time.perf_counter()
    sigma = cfg.sigma0
    records = []
    samples = []
    stall_run = 0
    termination = "max_iters"

    g = obj.grad(x)
    _require_finite(g, "gradient at the start point")
    grad_norm = float(np.linalg.norm(g))

    for k in range(cfg.max_iters):
        dist_sq = None
        if obj.minimizer is not None:
            diff = x - obj.minimizer
            dist_sq = float(diff @ diff)
        if grad_norm <= cfg.grad_tol:
            termination = "grad_tol"
            break
        if (
            cfg.dist_tol is not None
            and dist_sq is not None
            and dist_sq <= cfg.dist_tol
        ):
            termination = "dist_tol"
            break

        mv_before = learner.matvecs
        b = learner.predict()
        mv_extevec = learner.matvecs - mv_before

        ls = backtrack(x, g, b, sigma, cfg, obj)
        x_next = extragradient_step(x, ls.x_hat, ls.grad_x_hat, ls.eta, mu)
        _require_finite(x_next, f"iterate at k={k}")
        sigma = ls.eta / cfg.beta

        loss_value = None
        if ls.backtracked:
            sample = LossSample(ls.x_tilde - x, ls.grad_x_tilde - g)
            loss_value = learner.update_round(sample)
            samples.append((sample.s, sample.y))

        records.append(
            IterationRecord(
                k=k,
                eta=ls.eta,
                backtracked=ls.backtracked,
                ls_steps=ls.ls_steps,
                grad_evals=1 + ls.ls_steps,
                matvecs_linsolve=ls.matvecs,
                matvecs_extevec=mv_extevec,
                grad_norm=grad_norm,
                loss_value=loss_value,
                dist_sq=dist_sq,
                hat_disp=float(np.linalg.norm(ls.x_hat - x)),
            )
        )

        stall_run = stall_run + 1 if np.array_equal(x_next, x) else 0
        x = x_next
        g = obj.grad(x)
        _require_finite(g, f"gradient at k={k + 1}")
        grad_norm = float(np.linalg.norm(g))
        if stall_run >= _STALL_LIMIT:
            termination = "stalled"
            break

    wall = time.perf_counter() - t_begin
    n_tr = None
    if obj.minimizer is not None and obj.hessian is not None and obj.l2 is not None:
        diff0 = x_start - obj.minimizer
        n_tr = transition_iteration(
            mu,
            obj.l1,
            float(np.linalg.norm(b0 - obj.hessian(obj.minimizer)) ** 2),
            obj.l2,
            float(diff0 @ diff0),
        )

    return SolverReport(
        method="qnpe",
        records=tuple(records),
        final_x=x,
        final_grad_norm=grad_norm,
        termination=termination,
        config=cfg,
        x0=x_start,
        b0=b0,
        loss_samples=tuple(samples),
        learner_rounds=tuple(learner.round_log),
        n_tr=n_tr,
        inv_eta_sq_sum=float(sum(1.0 / r.eta**2 for r in records)),
        wall_time=wall,
        total_grad_evals=1 + sum(r.grad_evals for r in records),
    )


def _require_finite(arr: Array, what: str):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteIterate(f"non-finite values in {what}")
