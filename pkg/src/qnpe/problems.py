"""Test-problem generators and Matrix Market ingestion.

Every generated objective carries certified (mu, L1, L2) constants and,
where obtainable, a high-accuracy minimizer: quadratics solve the normal
system directly with iterative refinement, the logistic benchmark
bootstraps its reference solution by running the solver itself to a
1e-12 gradient norm in exact-oracle mode.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

import numpy as np
import scipy.io
import scipy.sparse
from scipy.special import expit

from .core import Objective, SolverConfig
from .errors import (
    InvalidSpectrum,
    NotPositiveDefinite,
    NotSymmetric,
    ParseError,
)

Array = np.ndarray


def _refined_solve(a: Array, b: Array, rel_tol: float = 1e-13) -> Array:
    """Dense solve with iterative refinement until ||A x - b|| <= rel_tol ||b||."""
    x = np.linalg.solve(a, b)
    b_norm = np.linalg.norm(b)
    for _ in range(5):
        r = b - a @ x
        if np.linalg.norm(r) <= rel_tol * b_norm:
            break
        x = x + np.linalg.solve(a, r)
    return x


def quadratic_objective(a: Array, b: Array, mu: float, l1: float) -> Objective:
    """Objective for f(x) = x^T A x / 2 - b^T x with certified band [mu, L1]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    minimizer = _refined_solve(a, b)
    return Objective(
        dim=b.shape[0],
        grad=lambda x: a @ x - b,
        value=lambda x: 0.5 * float(x @ (a @ x)) - float(b @ x),
        mu=float(mu),
        l1=float(l1),
        l2=0.0,
        hessian=lambda x: a,
        minimizer=minimizer,
    )


def make_quadratic(d: int, mu: float, l1: float, seed: int) -> Objective:
    """Seeded quadratic with log-uniform spectrum on [mu, L1].

    A = Q diag(lambda) Q^T with Q a seeded random orthogonal matrix and the
    eigenvalues geometrically spaced with both endpoints attained (d >= 2);
    b is seeded Gaussian.

    Raises:
        InvalidSpectrum: mu <= 0 or mu > L1.
    """
    if d < 1:
        raise InvalidSpectrum("d must be >= 1")
    if not (0.0 < mu <= l1):
        raise InvalidSpectrum(f"need 0 < mu <= L1, got mu={mu}, L1={l1}")
    rng = np.random.default_rng(seed)
    lam = np.geomspace(mu, l1, d)
    lam[0], lam[-1] = mu, l1
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    a = (q * lam) @ q.T
    a = 0.5 * (a + a.T)
    b = rng.standard_normal(d)
    return quadratic_objective(a, b, mu, l1)


def logistic_objective(
    features: Array, labels: Array, lam: float, minimizer: Optional[Array] = None
) -> Objective:
    """Regularized logistic regression objective from explicit data.

    f(x) = mean(log(1 + exp(-y_i a_i^T x))) + lam/2 ||x||^2 with
    mu = lam, L1 = lam + lambda_max(A^T A)/(4 n), and the conservative
    analytic bound L2 = sum ||a_i||^3 / (6 n).
    """
    a = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if lam <= 0.0:
        raise InvalidSpectrum("lam must be positive")
    n, d = a.shape
    signed = a * y[:, None]

    def value(x):
        margins = signed @ x
        return float(np.mean(np.logaddexp(0.0, -margins))) + 0.5 * lam * float(x @ x)

    def grad(x):
        margins = signed @ x
        return -(signed.T @ expit(-margins)) / n + lam * x

    def hessian(x):
        sig = expit(signed @ x)
        weights = sig * (1.0 - sig)
        return (a.T * weights) @ a / n + lam * np.eye(d)

    row_norms = np.linalg.norm(a, axis=1)
    data_curvature = float(np.linalg.eigvalsh(a.T @ a)[-1]) / (4.0 * n) if d else 0.0
    return Objective(
        dim=d,
        grad=grad,
        value=value,
        mu=lam,
        l1=lam + data_curvature,
        l2=float(np.sum(row_norms**3)) / (6.0 * n),
        hessian=hessian,
        minimizer=minimizer,
    )


def make_logistic(n: int, d: int, lam: float, seed: int) -> Objective:
    """Seeded logistic benchmark with unit-norm feature rows.

    The minimizer is the reference-oracle bootstrap: the solver itself run
    in exact-oracle mode to a 1e-12 gradient norm.
    """
    if n < 1 or d < 1:
        raise InvalidSpectrum("n and d must be >= 1")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, d))
    norms = np.linalg.norm(a, axis=1)
    a /= np.maximum(norms, 1e-12)[:, None]
    planted = rng.standard_normal(d)
    labels = np.sign(a @ planted + 0.5 * rng.standard_normal(n))
    labels[labels == 0.0] = 1.0

    obj = logistic_objective(a, labels, lam)
    from .solver import solve  # deferred: the bootstrap runs the solver

    cfg = SolverConfig(
        oracle_mode="exact", grad_tol=1e-12, max_iters=5000, seed=0
    )
    report = solve(obj, cfg)
    if report.termination != "grad_tol":
        raise RuntimeError(
            f"minimizer bootstrap stopped with {report.termination}"
        )
    return replace(obj, minimizer=report.final_x)


def load_matrix_market(path, b: Optional[Array] = None) -> Objective:
    """Quadratic objective from a symmetric positive definite Matrix Market
    file; b defaults to all-ones.

    The curvature band is read off the exact extreme eigenvalues (dense
    path, desk scale only).

    Raises:
        ParseError: unreadable or non-square input.
        NotSymmetric: matrix differs from its transpose.
        NotPositiveDefinite: smallest eigenvalue <= 0.
    """
    try:
        loaded = scipy.io.mmread(path)
    except Exception as exc:
        raise ParseError(f"{path}: {exc}") from exc
    a = loaded.toarray() if scipy.sparse.issparse(loaded) else np.asarray(loaded)
    a = a.astype(float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParseError(f"{path}: expected a square matrix, got {a.shape}")
    if not np.array_equal(a, a.T):
        raise NotSymmetric(f"{path}: matrix is not symmetric")
    eigs = np.linalg.eigvalsh(a)
    if eigs[0] <= 0.0:
        raise NotPositiveDefinite(
            f"{path}: smallest eigenvalue {eigs[0]:.6g} is not positive"
        )
    if b is None:
        b = np.ones(a.shape[0])
    return quadratic_objective(a, b, float(eigs[0]), float(eigs[-1]))
