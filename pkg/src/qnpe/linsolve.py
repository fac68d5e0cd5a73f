"""Conjugate residual method for symmetric positive definite systems.

Implements the matrix-free linear-system oracle with stopping rule
||A s - b|| <= alpha ||s||, starting from s = 0. The operator is applied
once per iteration plus once at initialization; the second product of the
classical formulation is replaced by the p-update recurrence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import IterationCapExceeded

Array = np.ndarray

#: residuals at or below this multiple of ||b|| count as converged; finite
#: precision cannot drive a CR residual meaningfully lower.
RESIDUAL_FLOOR = 64.0 * np.finfo(float).eps


@dataclass(frozen=True)
class LinearOperator:
    """Matrix-free symmetric operator v -> A v on R^dim."""

    dim: int
    apply: Callable[[Array], Array]

    @staticmethod
    def from_matrix(mat: Array) -> "LinearOperator":
        mat = np.asarray(mat, dtype=float)
        return LinearOperator(dim=mat.shape[0], apply=lambda v: mat @ v)


def shifted_operator(b_mat: Array, eta: float) -> LinearOperator:
    """Operator for I + eta * B with B given densely."""
    return LinearOperator(dim=b_mat.shape[0], apply=lambda v: v + eta * (b_mat @ v))


@dataclass(frozen=True)
class CrResult:
    """Solution and accounting of one conjugate-residual run.

    `residual_norms` and `step_norms` hold ||r_k|| and ||s_k|| for
    k = 0..iterations (recurrence-tracked residuals).
    """

    s: Array
    residual_norm: float
    iterations: int
    matvecs: int
    residual_norms: tuple
    step_norms: tuple


def cr_iteration_cap(d: int, lam_max: float, kappa: float, alpha: float) -> int:
    """Default iteration budget from spectral bounds, hard-capped at 20 d.

    The convergence guarantee terminates well inside
    2 sqrt(kappa) log(2 lam_max / alpha); the generous remainder converts
    silent stagnation into a diagnosable error.
    """
    alpha_eff = max(alpha, 1e-14)
    bound = 2.0 * math.sqrt(max(kappa, 1.0)) * max(
        math.log(2.0 * lam_max / alpha_eff), 1.0
    )
    return min(int(math.ceil(bound)) + 10 * d, 20 * d)


def conjugate_residual(
    a: LinearOperator,
    b: Array,
    alpha: float,
    max_iters: Optional[int] = None,
) -> CrResult:
    """First CR iterate s_k with ||b - A s_k|| <= alpha ||s_k||.

    Parameters
    ----------
    a : symmetric positive definite operator.
    b : right-hand side.
    alpha : relative stopping factor in [0, 1).
    max_iters : iteration cap; defaults to 20 * dim.

    Raises
    ------
    IterationCapExceeded
        The cap was hit, which signals an operator violating the positive
        definite precondition or an unreachable tolerance. Breakdown never
        surfaces: a vanishing <Ap, Ap> means r ~ 0 for definite operators
        and returns the current iterate as converged.
    """
    d = a.dim
    if max_iters is None:
        max_iters = 20 * d

    b = np.asarray(b, dtype=float)
    s = np.zeros(d)
    r = b.copy()
    r_norm = float(np.linalg.norm(r))
    s_norm = 0.0
    floor = RESIDUAL_FLOOR * r_norm
    ap_floor = floor * floor

    iters = 0
    matvecs = 0
    r_hist = [r_norm]
    s_hist = [s_norm]
    p = a_p = a_r = None
    r_ar = 0.0

    while True:
        if r_norm <= alpha * s_norm or r_norm <= floor:
            return CrResult(
                s, r_norm, iters, matvecs, tuple(r_hist), tuple(s_hist)
            )
        if iters >= max_iters:
            raise IterationCapExceeded(
                f"no iterate with ||r|| <= {alpha} ||s|| within "
                f"{max_iters} iterations (last residual {r_norm:.3e})"
            )
        if iters == 0:
            a_r = a.apply(r)
            matvecs += 1
            p = r.copy()
            a_p = a_r.copy()
            r_ar = float(r @ a_r)

        ap_ap = float(a_p @ a_p)
        if ap_ap <= ap_floor or r_ar <= 0.0:
            # p ~ 0 implies r ~ 0 for a definite operator: converged
            return CrResult(
                s, r_norm, iters, matvecs, tuple(r_hist), tuple(s_hist)
            )
        step = r_ar / ap_ap
        s = s + step * p
        r = r - step * a_p
        a_r = a.apply(r)
        matvecs += 1
        r_ar_next = float(r @ a_r)
        scale = r_ar_next / r_ar
        r_ar = r_ar_next
        p = r + scale * p
        a_p = a_r + scale * a_p
        iters += 1
        r_norm = float(np.linalg.norm(r))
        s_norm = float(np.linalg.norm(s))
        r_hist.append(r_norm)
        s_hist.append(s_norm)
