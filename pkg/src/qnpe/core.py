"""Core domain types: objective oracle, solver configuration, run reports.

All types are immutable value records; `validate_config` fills the
theory-default parameters and rejects inconsistent settings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np

from .errors import (
    DegenerateCurvature,
    ParameterConflict,
    SpectrumViolation,
    StepSeedTooSmall,
)

Array = np.ndarray

#: relative slack used when checking eigenvalue band membership of an
#: explicitly supplied initial matrix (LAPACK eigenvalues carry O(eps*||B||)).
_SPECTRUM_SLACK = 1e-10


@dataclass(frozen=True)
class Objective:
    """Gradient oracle for a mu-strongly-convex, L1-smooth objective.

    Attributes:
        dim: problem dimension d.
        grad: x -> gradient, both shape (d,).
        mu: strong convexity constant, > 0.
        l1: gradient Lipschitz constant, >= mu.
        value: optional x -> objective value (needed by the BFGS baseline).
        l2: optional Lipschitz constant of the Hessian w.r.t. the minimizer.
        hessian: optional x -> symmetric (d, d) matrix; testing/verification only.
        minimizer: optional known minimizer x*.
    """

    dim: int
    grad: Callable[[Array], Array]
    mu: float
    l1: float
    value: Optional[Callable[[Array], float]] = None
    l2: Optional[float] = None
    hessian: Optional[Callable[[Array], Array]] = None
    minimizer: Optional[Array] = None

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")


@dataclass(frozen=True)
class SolverConfig:
    """All tunables of the main solver.

    Fields left as None are filled with the theory defaults by
    `validate_config`: alpha1 = alpha2 = 1/4, beta = 1/2, sigma0 = 1/(4 L1),
    delta = min(mu/(L1-mu), 1).

    b0 selects the initial curvature matrix: None means L1*I, a float c means
    c*I with c in [mu, L1], an explicit symmetric matrix is used as given.
    """

    alpha1: Optional[float] = None
    alpha2: Optional[float] = None
    beta: Optional[float] = None
    sigma0: Optional[float] = None
    rho: float = 1.0 / 18.0
    delta: Optional[float] = None
    p: float = 0.05
    b0: Union[None, float, Array] = None
    oracle_mode: str = "lanczos"
    seed: int = 0
    max_iters: int = 10000
    grad_tol: float = 1e-8
    dist_tol: Optional[float] = None
    max_backtracks_slack: int = 20


@dataclass(frozen=True)
class IterationRecord:
    """One row of the per-iteration trace.

    Counters are per-iteration (the report totals are their column sums).
    `loss_value` is the learner loss of the round, set only on backtracked
    iterations; `dist_sq` is ||x_k - x*||^2 when the minimizer is known.
    `hat_disp` is ||x_hat_k - x_k||, kept for the displacement certificate
    (not part of the CSV wire schema).
    """

    k: int
    eta: float
    backtracked: bool
    ls_steps: int
    grad_evals: int
    matvecs_linsolve: int
    matvecs_extevec: int
    grad_norm: float
    loss_value: Optional[float] = None
    dist_sq: Optional[float] = None
    hat_disp: Optional[float] = None

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.ls_steps < 1:
            raise ValueError("ls_steps must be >= 1")
        if min(self.grad_evals, self.matvecs_linsolve, self.matvecs_extevec) < 0:
            raise ValueError("counters must be nonnegative")


@dataclass(frozen=True)
class SolverReport:
    """Full outcome of one solver run.

    `records` hold the per-iteration trace; `loss_samples` the (s, y) pairs
    fed to the learner (one per backtracked iteration, in round order);
    `learner_rounds` per-round learner diagnostics
    (t, b_min, b_max, w_fro_after) with None entries where unavailable.
    Derived quantities (`n_tr`, `inv_eta_sq_sum`) are recomputable from the
    records and problem data.
    """

    method: str
    records: tuple
    final_x: Array
    final_grad_norm: float
    termination: str
    config: SolverConfig
    x0: Array
    b0: Optional[Array] = None
    loss_samples: tuple = ()
    learner_rounds: tuple = ()
    n_tr: Optional[float] = None
    inv_eta_sq_sum: float = 0.0
    wall_time: float = 0.0
    #: true oracle-call count including the evaluation that triggered
    #: termination; the budget certificates use the per-iteration column
    #: sums instead (the stopping probe belongs to no iteration)
    total_grad_evals: int = 0

    @property
    def iterations(self) -> int:
        return len(self.records)

    def totals(self) -> dict:
        """Column sums of the trace counters."""
        return {
            "grad_evals": sum(r.grad_evals for r in self.records),
            "ls_steps": sum(r.ls_steps for r in self.records),
            "mv_linsolve": sum(r.matvecs_linsolve for r in self.records),
            "mv_extevec": sum(r.matvecs_extevec for r in self.records),
        }

    def final_dist_sq(self, obj: Objective) -> Optional[float]:
        if obj.minimizer is None:
            return None
        diff = self.final_x - obj.minimizer
        return float(diff @ diff)


def default_delta(mu: float, l1: float) -> float:
    """Oracle slack min(mu/(L1-mu), 1), clamped to 1 when L1 = mu."""
    if l1 <= mu:
        return 1.0
    return min(mu / (l1 - mu), 1.0)


def budget_log_term(value: float, beta: float) -> float:
    """log_{1/beta}(value), snapped to the nearest integer within 1e-9.

    The snap makes the theory-default budget terms exact: with
    sigma0 = 1/(4 L1) the gradient-budget term log_{1/beta}(4 sigma0 L1)
    is identically zero, which floating point cannot deliver on its own.
    """
    t = math.log(value) / math.log(1.0 / beta)
    nearest = round(t)
    if abs(t - nearest) < 1e-9:
        return float(nearest)
    return t


def _check_b0(b0, mu: float, l1: float):
    if b0 is None:
        return
    if np.isscalar(b0):
        c = float(b0)
        if not (mu <= c <= l1):
            raise SpectrumViolation(
                f"scaled-identity factor {c} outside [{mu}, {l1}]"
            )
        return
    mat = np.asarray(b0, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise SpectrumViolation("explicit b0 must be a square matrix")
    if not np.allclose(mat, mat.T, rtol=0.0, atol=1e-12 * max(1.0, l1)):
        raise SpectrumViolation("explicit b0 must be symmetric")
    eigs = np.linalg.eigvalsh(mat)
    slack = _SPECTRUM_SLACK * max(1.0, l1)
    if eigs[0] < mu - slack or eigs[-1] > l1 + slack:
        raise SpectrumViolation(
            f"b0 spectrum [{eigs[0]:.6g}, {eigs[-1]:.6g}] outside [{mu}, {l1}]"
        )


def validate_config(cfg: SolverConfig, obj: Objective) -> SolverConfig:
    """Fill defaults and check every configuration invariant.

    Idempotent: validating an already-validated config returns an equal one.

    Raises:
        DegenerateCurvature: L1 < mu or mu <= 0.
        ParameterConflict: parameter range violations, alpha1 + alpha2 >= 1.
        StepSeedTooSmall: sigma0 < alpha2*beta/L1.
        SpectrumViolation: b0 spectrum outside [mu, L1].
    """
    mu, l1 = float(obj.mu), float(obj.l1)
    if mu <= 0 or l1 < mu:
        raise DegenerateCurvature(f"need 0 < mu <= L1, got mu={mu}, L1={l1}")

    alpha1 = 0.25 if cfg.alpha1 is None else float(cfg.alpha1)
    alpha2 = 0.25 if cfg.alpha2 is None else float(cfg.alpha2)
    beta = 0.5 if cfg.beta is None else float(cfg.beta)
    sigma0 = 1.0 / (4.0 * l1) if cfg.sigma0 is None else float(cfg.sigma0)
    delta = default_delta(mu, l1) if cfg.delta is None else float(cfg.delta)

    if not (0.0 <= alpha1 < 1.0):
        raise ParameterConflict(f"alpha1 must be in [0, 1), got {alpha1}")
    if not (0.0 < alpha2 < 1.0):
        raise ParameterConflict(f"alpha2 must be in (0, 1), got {alpha2}")
    if alpha1 + alpha2 >= 1.0:
        raise ParameterConflict(
            f"alpha1 + alpha2 must be < 1, got {alpha1} + {alpha2}"
        )
    if not (0.0 < beta < 1.0):
        raise ParameterConflict(f"beta must be in (0, 1), got {beta}")
    if not cfg.rho > 0.0:
        raise ParameterConflict(f"rho must be positive, got {cfg.rho}")
    if not (0.0 < delta <= 1.0):
        raise ParameterConflict(f"delta must be in (0, 1], got {delta}")
    if not (0.0 < cfg.p < 1.0):
        raise ParameterConflict(f"p must be in (0, 1), got {cfg.p}")
    if cfg.oracle_mode not in ("lanczos", "exact"):
        raise ParameterConflict(f"unknown oracle_mode {cfg.oracle_mode!r}")
    if cfg.max_iters < 1:
        raise ParameterConflict("max_iters must be >= 1")
    if cfg.grad_tol < 0.0:
        raise ParameterConflict("grad_tol must be >= 0")
    if cfg.dist_tol is not None and cfg.dist_tol < 0.0:
        raise ParameterConflict("dist_tol must be >= 0")
    if cfg.max_backtracks_slack < 0:
        raise ParameterConflict("max_backtracks_slack must be >= 0")
    if not sigma0 > 0.0:
        raise StepSeedTooSmall(f"sigma0 must be positive, got {sigma0}")
    if sigma0 < alpha2 * beta / l1:
        raise StepSeedTooSmall(
            f"sigma0={sigma0:.6g} below the step floor "
            f"alpha2*beta/L1={alpha2 * beta / l1:.6g}"
        )
    _check_b0(cfg.b0, mu, l1)

    return replace(
        cfg, alpha1=alpha1, alpha2=alpha2, beta=beta, sigma0=sigma0, delta=delta
    )


def resolve_initial_matrix(cfg: SolverConfig, obj: Objective) -> Array:
    """Materialize the initial curvature matrix from the b0 policy."""
    d = obj.dim
    if cfg.b0 is None:
        return float(obj.l1) * np.eye(d)
    if np.isscalar(cfg.b0):
        return float(cfg.b0) * np.eye(d)
    mat = np.array(cfg.b0, dtype=float)
    if mat.shape != (d, d):
        raise SpectrumViolation(
            f"b0 has shape {mat.shape}, problem dimension is {d}"
        )
    return mat


# --- flat key-value wire format (the CLI config contract) ---

_KV_FIELDS = (
    "alpha1", "alpha2", "beta", "sigma0", "rho", "delta", "p", "b0",
    "oracle_mode", "seed", "max_iters", "grad_tol", "dist_tol",
    "max_backtracks_slack",
)
_INT_FIELDS = {"seed", "max_iters", "max_backtracks_slack"}
_STR_FIELDS = {"oracle_mode"}


def config_to_kv(cfg: SolverConfig) -> str:
    """Serialize to `key=value` lines, one per field, in field order."""
    lines = []
    for name in _KV_FIELDS:
        val = getattr(cfg, name)
        if name == "b0" and val is not None and not np.isscalar(val):
            raise ValueError("an explicit b0 matrix has no flat encoding")
        if val is None:
            text = "none"
        elif name in _STR_FIELDS:
            text = str(val)
        elif name in _INT_FIELDS:
            text = str(int(val))
        else:
            text = repr(float(val))
        lines.append(f"{name}={text}")
    return "\n".join(lines) + "\n"


def config_from_kv(text: str) -> SolverConfig:
    """Parse the `key=value` format produced by `config_to_kv`."""
    values = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _KV_FIELDS:
            raise ValueError(f"unknown config key {key!r}")
        if val == "none":
            values[key] = None
        elif key in _STR_FIELDS:
            values[key] = val
        elif key in _INT_FIELDS:
            values[key] = int(val)
        else:
            values[key] = float(val)
    return SolverConfig(**values)
