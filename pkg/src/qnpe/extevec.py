"""Approximate separation oracle for the unit-operator-norm ball.

A query on a symmetric matrix W either certifies that W is (approximately)
inside {||.||_op <= 1} or returns gamma > 1 together with a rank-one
separator S = sign * u u^T built from an extreme eigenpair. The randomized
variant estimates the eigenpair by Lanczos with a random start and a
probabilistic iteration budget; the exact variant uses a full symmetric
eigendecomposition and is the deterministic test reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import EigFailure

Array = np.ndarray


@dataclass(frozen=True)
class SepOutcome:
    """Oracle answer: gamma plus either an inside certificate or a separator.

    sign is None for the inside case; otherwise S = sign * outer(vector,
    vector) with vector unit-norm, so ||S||_F = 1. lam_min/lam_max carry the
    (estimated) extreme eigenvalues when the oracle computed them.
    """

    gamma: float
    sign: Optional[int]
    vector: Optional[Array]
    matvecs: int = 0
    lam_min: Optional[float] = None
    lam_max: Optional[float] = None

    @property
    def inside(self) -> bool:
        return self.sign is None

    def separator(self) -> Array:
        if self.sign is None:
            raise ValueError("inside outcome has no separator")
        return self.sign * np.outer(self.vector, self.vector)

    def separator_action(self, mat: Array) -> float:
        """<S, mat> without forming S."""
        if self.sign is None:
            raise ValueError("inside outcome has no separator")
        return float(self.sign * (self.vector @ (mat @ self.vector)))


@dataclass(frozen=True)
class LanczosBudget:
    """Iteration count N and accuracy epsilon for one randomized query."""

    n_iters: int
    epsilon: float


def lanczos_budget(d: int, delta: float, q: float) -> LanczosBudget:
    """Budget N = min(ceil(eps^(-1/2)/4 * ln(11 d / q^2) + 1/2), d),
    eps = delta / (2 (1 + delta))."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    if not (0.0 < q < 1.0):
        raise ValueError("q must be in (0, 1)")
    eps = delta / (2.0 * (1.0 + delta))
    n = math.ceil(0.25 / math.sqrt(eps) * math.log(11.0 * d / q**2) + 0.5)
    return LanczosBudget(n_iters=min(n, d), epsilon=eps)


def ext_evec_exact(w: Array) -> SepOutcome:
    """Deterministic oracle from a full eigendecomposition.

    gamma equals ||W||_op exactly, the separator comes from the true extreme
    unit eigenvector, and the guarantees hold with zero slack.
    """
    w = np.asarray(w, dtype=float)
    try:
        lam, vecs = np.linalg.eigh(w)
    except np.linalg.LinAlgError as exc:
        raise EigFailure(str(exc)) from exc
    lo, hi = float(lam[0]), float(lam[-1])
    gamma = max(hi, -lo)
    if gamma <= 1.0:
        return SepOutcome(gamma, None, None, 0, lam_min=lo, lam_max=hi)
    if hi >= -lo:
        return SepOutcome(gamma, 1, vecs[:, -1].copy(), 0, lam_min=lo, lam_max=hi)
    return SepOutcome(gamma, -1, vecs[:, 0].copy(), 0, lam_min=lo, lam_max=hi)


def _tridiag_extremes(alphas: Array, betas: Array):
    """Extreme eigenpairs of the Lanczos tridiagonal matrix.

    Solved by bisection on the Sturm sequence plus inverse iteration
    (LAPACK stebz/stein), which eigh_tridiagonal uses for indexed selection.
    """
    m = alphas.shape[0]
    if m == 1:
        one = np.ones(1)
        return float(alphas[0]), one, float(alphas[0]), one
    lo_val, lo_vec = eigh_tridiagonal(alphas, betas, select="i", select_range=(0, 0))
    hi_val, hi_vec = eigh_tridiagonal(
        alphas, betas, select="i", select_range=(m - 1, m - 1)
    )
    return float(hi_val[0]), hi_vec[:, 0], float(lo_val[0]), lo_vec[:, 0]


def ext_evec_lanczos(
    w: Array, delta: float, q: float, rng: np.random.Generator
) -> SepOutcome:
    """Randomized oracle: Lanczos with a uniform random unit start.

    Runs the budgeted number of iterations with full reorthogonalization,
    takes the extreme Ritz pairs of the tridiagonal matrix, and maps the
    Ritz vectors back to R^d. With probability >= 1 - q the returned gamma
    satisfies ||W||_op <= (1 + delta) * max(gamma, 1). Early breakdown
    (beta = 0) is a success: the Krylov space is invariant and the
    tridiagonal matrix is exact on it.
    """
    w = np.asarray(w, dtype=float)
    d = w.shape[0]
    budget = lanczos_budget(d, delta, q)
    n = budget.n_iters

    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)

    basis = np.zeros((d, n))
    alphas = np.zeros(n)
    betas = np.zeros(max(n - 1, 0))
    scale = 0.0
    m = n
    matvecs = 0
    beta_prev = 0.0
    v_prev = np.zeros(d)

    for k in range(n):
        basis[:, k] = v
        work = w @ v - beta_prev * v_prev
        matvecs += 1
        a = float(work @ v)
        work -= a * v
        # full reorthogonalization against all prior Lanczos vectors
        work -= basis[:, : k + 1] @ (basis[:, : k + 1].T @ work)
        alphas[k] = a
        scale = max(scale, abs(a) + beta_prev)
        if k == n - 1:
            break
        b = float(np.linalg.norm(work))
        if b <= 64.0 * np.finfo(float).eps * max(scale, 1.0):
            m = k + 1
            break
        betas[k] = b
        v_prev = v
        beta_prev = b
        v = work / b

    hi, z_hi, lo, z_lo = _tridiag_extremes(alphas[:m], betas[: m - 1])
    gamma = max(hi, -lo)
    if gamma <= 1.0:
        return SepOutcome(gamma, None, None, matvecs, lam_min=lo, lam_max=hi)
    if hi >= -lo:
        u = basis[:, :m] @ z_hi
        sign = 1
    else:
        u = basis[:, :m] @ z_lo
        sign = -1
    u /= np.linalg.norm(u)
    return SepOutcome(gamma, sign, u, matvecs, lam_min=lo, lam_max=hi)
