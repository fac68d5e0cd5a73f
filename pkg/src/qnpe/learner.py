"""Online-learning update of the curvature approximation matrix.

The learner plays a symmetric matrix B_t from the widened band
{mu/2 I <= B <= (L1 + mu/2) I} against secant-style losses
l(B) = ||y - B s||^2 / (2 ||s||^2) observed on backtracked iterations.
Internally it runs projected online gradient descent on the Frobenius ball
of radius sqrt(d) in a spectrally normalized coordinate system, using the
separation oracle instead of eigendecomposition projections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateCurvature, StateMismatch, ZeroDisplacement
from .extevec import SepOutcome, ext_evec_exact, ext_evec_lanczos

Array = np.ndarray


@dataclass(frozen=True)
class LossSample:
    """Displacement s = x_tilde - x and gradient difference y along it."""

    s: Array
    y: Array

    def __post_init__(self):
        if float(self.s @ self.s) == 0.0:
            raise ZeroDisplacement("loss sample has zero displacement")


def loss(b: Array, sample: LossSample) -> float:
    """Secant loss ||y - B s||^2 / (2 ||s||^2)."""
    resid = sample.y - b @ sample.s
    return float(resid @ resid) / (2.0 * float(sample.s @ sample.s))


def loss_gradient(b: Array, sample: LossSample) -> Array:
    """Gradient of the secant loss:
    -(s (y - B s)^T + (y - B s) s^T) / (2 ||s||^2), a symmetric matrix with
    nuclear norm at most sqrt(2 * loss)."""
    s, y = sample.s, sample.y
    resid = y - b @ s
    outer = np.outer(s, resid)
    return -(outer + outer.T) / (2.0 * float(s @ s))


def to_hat(b: Array, mu: float, l1: float) -> Array:
    """Affine spectral map onto the unit-operator-norm ball coordinates:
    (2/(L1-mu)) * (B - (L1+mu)/2 * I)."""
    if l1 <= mu:
        raise DegenerateCurvature("spectral transform needs L1 > mu")
    d = b.shape[0]
    return (2.0 / (l1 - mu)) * (b - 0.5 * (l1 + mu) * np.eye(d))


def from_hat(b_hat: Array, mu: float, l1: float) -> Array:
    """Inverse of `to_hat`."""
    d = b_hat.shape[0]
    return 0.5 * (l1 - mu) * b_hat + 0.5 * (l1 + mu) * np.eye(d)


def project_frobenius_ball(w: Array, radius: float) -> Array:
    """Euclidean projection w * R / max(||w||_F, R) onto the Frobenius ball."""
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    norm = float(np.linalg.norm(w))
    return w * (radius / max(norm, radius))


def failure_budget(p: float, t: int) -> float:
    """Per-round oracle failure probability q_t = p / (2.5 (t+1) ln^2(t+1)).

    Natural logarithm; the budgets sum to at most p over all rounds t >= 1.
    """
    if t < 1:
        raise ValueError("rounds are budgeted from t = 1")
    return p / (2.5 * (t + 1) * math.log(t + 1) ** 2)


@dataclass(frozen=True)
class RoundLog:
    """Per-round diagnostics: prediction spectrum extremes (exact-oracle
    mode only) and the Frobenius norm of the internal iterate after the
    projected update."""

    t: int
    b_min: Optional[float]
    b_max: Optional[float]
    w_fro_after: float


class HessianLearner:
    """Single-owner mutable learner state.

    `predict` returns the matrix to play this round (B_0 verbatim at round 0,
    oracle-corrected afterwards) and caches the oracle outcome;
    `update_round` consumes one loss sample, performs the surrogate-gradient
    step with projection onto the Frobenius ball of radius sqrt(d), and
    advances the round counter. Rounds count backtracked iterations only:
    callers skip `update_round` when the first trial step was accepted, and
    repeated `predict` calls between updates return the cached prediction.
    """

    def __init__(
        self,
        b0: Array,
        mu: float,
        l1: float,
        *,
        rho: float = 1.0 / 18.0,
        delta: float = 1.0,
        p: float = 0.05,
        oracle_mode: str = "exact",
        rng: Optional[np.random.Generator] = None,
    ):
        self.mu = float(mu)
        self.l1 = float(l1)
        self.rho = float(rho)
        self.delta = float(delta)
        self.p = float(p)
        self.oracle_mode = oracle_mode
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.dim = b0.shape[0]
        self.radius = math.sqrt(self.dim)
        # mu == L1 pins the admissible band to the single point mu*I: the
        # normalized coordinates are undefined and learning is vacuous.
        self.degenerate = self.l1 <= self.mu
        self.b_current = np.array(b0, dtype=float)
        self.w = None if self.degenerate else to_hat(self.b_current, mu, l1)
        self.t = 0
        self.cumulative_loss = 0.0
        self.matvecs = 0
        self.round_log: list[RoundLog] = []
        self._pending = None  # (outcome or None, b_hat or None)

    def predict(self) -> Array:
        """Matrix to play this round; caches the oracle outcome for the
        matching `update_round` call."""
        if self._pending is not None:
            return self.b_current
        if self.degenerate:
            self._pending = (None, None)
            return self.b_current
        if self.t == 0:
            self._pending = (None, self.w)
            return self.b_current
        if self.oracle_mode == "exact":
            outcome = ext_evec_exact(self.w)
        else:
            q = failure_budget(self.p, self.t)
            outcome = ext_evec_lanczos(self.w, self.delta, q, self.rng)
        self.matvecs += outcome.matvecs
        if outcome.inside:
            b_hat = self.w
        else:
            b_hat = self.w / outcome.gamma
        self.b_current = from_hat(b_hat, self.mu, self.l1)
        self._pending = (outcome, b_hat)
        return self.b_current

    def update_round(self, sample: LossSample) -> float:
        """Consume the round's loss sample and advance; returns the loss
        value incurred by the played matrix."""
        if self._pending is None:
            raise StateMismatch("update_round without a preceding predict")
        outcome, b_hat = self._pending
        value = loss(self.b_current, sample)
        self.cumulative_loss += value
        if not self.degenerate:
            grad = (2.0 / (self.l1 - self.mu)) * loss_gradient(
                self.b_current, sample
            )
            if outcome is not None and not outcome.inside:
                hinge = max(0.0, -float(np.tensordot(grad, b_hat)))
                surrogate = grad + hinge * outcome.separator()
            else:
                surrogate = grad
            self.w = project_frobenius_ball(
                self.w - self.rho * surrogate, self.radius
            )
        self._log_round(outcome)
        self.t += 1
        self._pending = None
        return value

    def _log_round(self, outcome: Optional[SepOutcome]):
        b_min = b_max = None
        if self.degenerate:
            b_min = b_max = self.mu
        elif outcome is None:
            # round 0 plays b0 as given; extremes via the exact kernel
            if self.oracle_mode == "exact":
                eigs = np.linalg.eigvalsh(self.b_current)
                b_min, b_max = float(eigs[0]), float(eigs[-1])
        elif self.oracle_mode == "exact":
            lo, hi = outcome.lam_min, outcome.lam_max
            if not outcome.inside:
                lo, hi = lo / outcome.gamma, hi / outcome.gamma
            half_span = 0.5 * (self.l1 - self.mu)
            center = 0.5 * (self.l1 + self.mu)
            b_min, b_max = half_span * lo + center, half_span * hi + center
        w_fro = 0.0 if self.degenerate else float(np.linalg.norm(self.w))
        self.round_log.append(RoundLog(self.t, b_min, b_max, w_fro))
