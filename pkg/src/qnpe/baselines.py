"""Reference methods for comparison: fixed-step gradient descent and
classical inverse-form BFGS with Armijo backtracking.

Both produce reports on the same trace schema as the main solver so the
compare command can align them column by column.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    IterationRecord,
    Objective,
    SolverConfig,
    SolverReport,
    validate_config,
)
from .errors import LineSearchFailure, NonFiniteIterate

Array = np.ndarray

ARMIJO_C1 = 1e-4
ARMIJO_MAX_HALVINGS = 60


def gd_step(x: Array, obj: Objective) -> Array:
    """One fixed-step gradient descent update x - grad(x)/L1."""
    return x - obj.grad(x) / obj.l1


@dataclass
class BfgsState:
    """Iterate plus the inverse curvature approximation H."""

    x: Array
    h: Array
    grad: Array


def bfgs_step(state: BfgsState, obj: Objective) -> tuple:
    """One BFGS update with Armijo backtracking.

    Returns (new state, step size, armijo attempts). The inverse
    approximation update is skipped when the curvature pair is degenerate
    (<y, s> <= 1e-12 ||s|| ||y||), which keeps H positive definite.

    Raises:
        LineSearchFailure: no Armijo decrease within the halving cap.
    """
    if obj.value is None:
        raise LineSearchFailure("BFGS needs the objective value oracle")
    x, h, g = state.x, state.h, state.grad
    direction = -(h @ g)
    slope = float(g @ direction)
    f0 = obj.value(x)
    step = 1.0
    for _ in range(ARMIJO_MAX_HALVINGS):
        candidate = x + step * direction
        if obj.value(candidate) <= f0 + ARMIJO_C1 * step * slope:
            break
        step *= 0.5
    else:
        raise LineSearchFailure("Armijo backtracking exhausted its cap")
    attempts = int(round(np.log2(1.0 / step))) + 1

    x_new = x + step * direction
    g_new = obj.grad(x_new)
    s = x_new - x
    y = g_new - g
    ys = float(y @ s)
    if ys > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
        rho = 1.0 / ys
        d = x.shape[0]
        left = np.eye(d) - rho * np.outer(s, y)
        h = left @ h @ left.T + rho * np.outer(s, s)
    return BfgsState(x_new, h, g_new), step, attempts


def _terminated(cfg, grad_norm, dist_sq):
    if grad_norm <= cfg.grad_tol:
        return "grad_tol"
    if cfg.dist_tol is not None and dist_sq is not None and dist_sq <= cfg.dist_tol:
        return "dist_tol"
    return None


def solve_gd(
    obj: Objective,
    cfg: Optional[SolverConfig] = None,
    x0: Optional[Array] = None,
) -> SolverReport:
    """Gradient descent with the 1/L1 step under the shared stopping rules."""
    cfg = validate_config(cfg if cfg is not None else SolverConfig(), obj)
    x = np.zeros(obj.dim) if x0 is None else np.array(x0, dtype=float)
    x_start = x.copy()
    t_begin = time.perf_counter()
    records = []
    termination = "max_iters"
    g = obj.grad(x)
    grad_norm = float(np.linalg.norm(g))
    eta = 1.0 / obj.l1

    for k in range(cfg.max_iters):
        dist_sq = _dist_sq(x, obj)
        stop = _terminated(cfg, grad_norm, dist_sq)
        if stop is not None:
            termination = stop
            break
        x = x - eta * g
        if not np.all(np.isfinite(x)):
            raise NonFiniteIterate(f"non-finite iterate at k={k}")
        records.append(
            IterationRecord(
                k=k, eta=eta, backtracked=False, ls_steps=1, grad_evals=1,
                matvecs_linsolve=0, matvecs_extevec=0, grad_norm=grad_norm,
                dist_sq=dist_sq,
            )
        )
        g = obj.grad(x)
        grad_norm = float(np.linalg.norm(g))

    return SolverReport(
        method="gd",
        records=tuple(records),
        final_x=x,
        final_grad_norm=grad_norm,
        termination=termination,
        config=cfg,
        x0=x_start,
        wall_time=time.perf_counter() - t_begin,
    )


def solve_bfgs(
    obj: Objective,
    cfg: Optional[SolverConfig] = None,
    x0: Optional[Array] = None,
) -> SolverReport:
    """BFGS from H = I with Armijo backtracking, shared stopping rules."""
    cfg = validate_config(cfg if cfg is not None else SolverConfig(), obj)
    x = np.zeros(obj.dim) if x0 is None else np.array(x0, dtype=float)
    x_start = x.copy()
    t_begin = time.perf_counter()
    state = BfgsState(x, np.eye(obj.dim), obj.grad(x))
    records = []
    termination = "max_iters"
    grad_norm = float(np.linalg.norm(state.grad))

    for k in range(cfg.max_iters):
        dist_sq = _dist_sq(state.x, obj)
        stop = _terminated(cfg, grad_norm, dist_sq)
        if stop is not None:
            termination = stop
            break
        state, step, attempts = bfgs_step(state, obj)
        if not np.all(np.isfinite(state.x)):
            raise NonFiniteIterate(f"non-finite iterate at k={k}")
        records.append(
            IterationRecord(
                k=k, eta=step, backtracked=attempts > 1, ls_steps=attempts,
                grad_evals=1, matvecs_linsolve=0, matvecs_extevec=0,
                grad_norm=grad_norm, dist_sq=dist_sq,
            )
        )
        grad_norm = float(np.linalg.norm(state.grad))

    return SolverReport(
        method="bfgs",
        records=tuple(records),
        final_x=state.x,
        final_grad_norm=grad_norm,
        termination=termination,
        config=cfg,
        x0=x_start,
        wall_time=time.perf_counter() - t_begin,
    )


def _dist_sq(x, obj):
    if obj.minimizer is None:
        return None
    diff = x - obj.minimizer
    return float(diff @ diff)
