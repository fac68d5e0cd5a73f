"""Post-hoc machine checks of the per-run invariants and oracle budgets.

`verify_trace` replays a report against the analytical guarantees:
per-iteration contraction, the linear-rate envelope, the universal step
floor, the step-size-sum inequality, the learner's small-loss regret bound,
the superlinear envelope, and the gradient/line-search budgets. Each check
reports pass/fail with its worst-case margin (bound minus observed, so
positive margins mean slack to spare).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Objective, SolverReport, budget_log_term
from .errors import MissingGroundTruth
from .learner import LossSample, loss

Array = np.ndarray

QNPE_CHECKS = (
    "contraction",
    "linear_rate",
    "step_floor",
    "stepsize_sum",
    "small_loss_regret",
    "displacement_sum",
    "superlinear_envelope",
    "grad_eval_budget",
    "ls_step_budget",
)


@dataclass(frozen=True)
class Certificate:
    name: str
    applicable: bool
    passed: Optional[bool]
    margin: Optional[float]
    detail: str = ""


@dataclass(frozen=True)
class TraceCertificates:
    results: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.results if c.applicable)

    def __getitem__(self, name: str) -> Certificate:
        for cert in self.results:
            if cert.name == name:
                return cert
        raise KeyError(name)


def transition_iteration(
    mu: float, l1: float, b0_gap_fro_sq: float, l2: float, d0_sq: float
) -> float:
    """Iteration threshold past which the superlinear envelope beats the
    linear one: 4/3 + 48 ||B0-H*||_F^2 / L1^2
    + (36/L1^2 + 64/(3 mu L1)) L2^2 ||x0-x*||^2."""
    return (
        4.0 / 3.0
        + 48.0 * b0_gap_fro_sq / l1**2
        + (36.0 / l1**2 + 64.0 / (3.0 * mu * l1)) * l2**2 * d0_sq
    )


def superlinear_denominator(
    mu: float, l1: float, b0_gap_fro_sq: float, l2: float, d0_sq: float
) -> float:
    """L1^2 + 36 ||B0-H*||_F^2 + (27 + 16 L1/mu) L2^2 ||x0-x*||^2."""
    return l1**2 + 36.0 * b0_gap_fro_sq + (27.0 + 16.0 * l1 / mu) * l2**2 * d0_sq


def superlinear_envelope(k: int, mu: float, denom: float) -> float:
    """Certified global envelope (1 + (sqrt(3)/8) mu sqrt(k/denom))^(-k)
    on ||x_k - x*||^2 / ||x0 - x*||^2."""
    if k == 0:
        return 1.0
    base = 1.0 + (math.sqrt(3.0) / 8.0) * mu * math.sqrt(k / denom)
    return base ** (-k)


def iteration_complexity_bound(
    eps: float, mu: float, l1: float, n_tr: float, d0_sq: float
) -> float:
    """Upper bound on the iterations needed for ||x-x*||^2 <= eps:
    min of the linear and superlinear complexity expressions."""
    if eps >= d0_sq:
        return 0.0
    target = math.log(d0_sq / eps)
    linear = 1.0 / math.log1p(mu / (4.0 * l1))
    if eps >= 1.0:
        return linear * target
    inner = (mu**2 * math.log(1.0 / eps) / (16.0 * l1**2 * n_tr)) ** (1.0 / 3.0)
    superlinear = 1.0 / math.log1p(inner)
    return min(linear, superlinear) * target


def _distance_sequence(report: SolverReport, obj: Objective):
    if obj.minimizer is None:
        raise MissingGroundTruth("minimizer required for distance checks")
    dists = [r.dist_sq for r in report.records]
    if any(v is None for v in dists):
        raise MissingGroundTruth("trace lacks dist_sq entries")
    diff = report.final_x - obj.minimizer
    dists.append(float(diff @ diff))
    return dists


def verify_trace(
    report: SolverReport,
    obj: Objective,
    checks: Optional[Sequence[str]] = None,
    *,
    contraction_slack: float = 1e-12,
    rate_slack: float = 1e-12,
    regret_competitors: int = 0,
    seed: int = 0,
) -> TraceCertificates:
    """Evaluate the requested certificates (all, by default) on a trace.

    For baseline reports every check is reported not-applicable. With
    `regret_competitors` > 0 the small-loss bound is additionally checked
    against that many random competitors from the admissible band.

    Raises:
        MissingGroundTruth: a requested check needs the minimizer or the
            Hessian oracle and the objective does not expose it.
    """
    wanted = tuple(checks) if checks is not None else QNPE_CHECKS
    for name in wanted:
        if name not in QNPE_CHECKS:
            raise ValueError(f"unknown check {name!r}")

    if report.method != "qnpe":
        return TraceCertificates(
            tuple(
                Certificate(name, False, None, None, "method without guarantees")
                for name in wanted
            )
        )

    cfg = report.config
    mu, l1 = float(obj.mu), float(obj.l1)
    records = report.records
    n = len(records)
    results = []

    dists = None
    if any(
        name in wanted
        for name in (
            "contraction", "linear_rate", "displacement_sum", "superlinear_envelope"
        )
    ):
        dists = _distance_sequence(report, obj)

    for name in wanted:
        if name == "contraction":
            results.append(_check_contraction(records, dists, mu, contraction_slack))
        elif name == "linear_rate":
            results.append(_check_linear_rate(dists, cfg, mu, l1, rate_slack))
        elif name == "step_floor":
            results.append(_check_step_floor(records, cfg, l1))
        elif name == "stepsize_sum":
            results.append(_check_stepsize_sum(records, cfg))
        elif name == "small_loss_regret":
            results.append(
                _check_small_loss(report, obj, regret_competitors, seed)
            )
        elif name == "displacement_sum":
            results.append(_check_displacement_sum(records, cfg, dists))
        elif name == "superlinear_envelope":
            results.append(_check_superlinear(report, obj, dists, mu, l1))
        elif name == "grad_eval_budget":
            bound = 3.0 * n + budget_log_term(cfg.sigma0 * l1 / cfg.alpha2, cfg.beta)
            total = sum(r.grad_evals for r in records)
            results.append(_budget_cert(name, total, bound))
        elif name == "ls_step_budget":
            bound = 2.0 * n + budget_log_term(cfg.sigma0 * l1 / cfg.alpha2, cfg.beta)
            total = sum(r.ls_steps for r in records)
            results.append(_budget_cert(name, total, bound))

    return TraceCertificates(tuple(results))


def _budget_cert(name: str, total: int, bound: float) -> Certificate:
    margin = bound - total
    return Certificate(
        name, True, margin >= 0.0, margin, f"total {total} vs bound {bound:.6g}"
    )


def _check_contraction(records, dists, mu, slack) -> Certificate:
    worst = math.inf
    worst_k = -1
    for rec, d_now, d_next in zip(records, dists, dists[1:]):
        bound = d_now / (1.0 + 2.0 * rec.eta * mu) + slack * d_now
        margin = bound - d_next
        if margin < worst:
            worst, worst_k = margin, rec.k
    if worst_k < 0:
        return Certificate("contraction", True, True, math.inf, "empty trace")
    return Certificate(
        "contraction", True, worst >= 0.0, worst, f"worst at k={worst_k}"
    )


def _check_linear_rate(dists, cfg, mu, l1, slack) -> Certificate:
    # the step floor alpha2*beta/L1 gives ratio <= (1 + 2 mu alpha2 beta/L1)^-1,
    # which is the printed (1 + mu/(4 L1))^-1 at the default parameters
    target = 1.0 / (1.0 + 2.0 * mu * cfg.alpha2 * cfg.beta / l1) + slack
    worst = math.inf
    worst_k = -1
    for k, (d_now, d_next) in enumerate(zip(dists, dists[1:])):
        if d_now == 0.0:
            continue
        margin = target - d_next / d_now
        if margin < worst:
            worst, worst_k = margin, k
    if worst_k < 0:
        return Certificate("linear_rate", True, True, math.inf, "empty trace")
    return Certificate(
        "linear_rate", True, worst >= 0.0, worst, f"worst at k={worst_k}"
    )


def _check_step_floor(records, cfg, l1) -> Certificate:
    floor = cfg.alpha2 * cfg.beta / l1
    worst = math.inf
    worst_k = -1
    for rec in records:
        margin = rec.eta - floor
        if margin < worst:
            worst, worst_k = margin, rec.k
    if worst_k < 0:
        return Certificate("step_floor", True, True, math.inf, "empty trace")
    return Certificate(
        "step_floor", True, worst >= 0.0, worst,
        f"floor {floor:.6g}, worst at k={worst_k}",
    )


def _check_stepsize_sum(records, cfg) -> Certificate:
    lhs = sum(1.0 / r.eta**2 for r in records)
    geo = 1.0 - cfg.beta**2
    rhs = 1.0 / (geo * cfg.sigma0**2)
    backtracked_losses = [
        r.loss_value for r in records if r.backtracked and r.loss_value is not None
    ]
    rhs += sum(2.0 * v for v in backtracked_losses) / (
        geo * cfg.alpha2**2 * cfg.beta**2
    )
    margin = rhs - lhs
    return Certificate(
        "stepsize_sum", True, margin >= 0.0, margin,
        f"sum 1/eta^2 = {lhs:.6g} vs bound {rhs:.6g}",
    )


def _regret_gap(report: SolverReport, competitor: Array) -> float:
    """18 ||B0 - H||_F^2 + 2 sum_t l_t(H) - sum_t l_t(B_t)."""
    learner_total = sum(
        r.loss_value
        for r in report.records
        if r.backtracked and r.loss_value is not None
    )
    competitor_total = sum(
        loss(competitor, LossSample(s, y)) for s, y in report.loss_samples
    )
    gap_fro_sq = float(np.linalg.norm(report.b0 - competitor) ** 2)
    return 18.0 * gap_fro_sq + 2.0 * competitor_total - learner_total


def _check_small_loss(report, obj, extra_competitors, seed) -> Certificate:
    if obj.minimizer is None or obj.hessian is None:
        raise MissingGroundTruth(
            "small-loss check needs the Hessian at the minimizer"
        )
    if not report.loss_samples:
        return Certificate(
            "small_loss_regret", True, True, math.inf, "no learner rounds"
        )
    h_star = obj.hessian(obj.minimizer)
    worst = _regret_gap(report, h_star)
    detail = "competitor H*"
    if extra_competitors > 0:
        rng = np.random.default_rng(seed)
        d = obj.dim
        for i in range(extra_competitors):
            gauss = rng.standard_normal((d, d))
            q, _ = np.linalg.qr(gauss)
            lam = rng.uniform(obj.mu, obj.l1, size=d)
            competitor = (q * lam) @ q.T
            margin = _regret_gap(report, competitor)
            if margin < worst:
                worst, detail = margin, f"random competitor {i}"
    return Certificate("small_loss_regret", True, worst >= 0.0, worst, detail)


def _check_displacement_sum(records, cfg, dists) -> Certificate:
    total = sum(r.hat_disp**2 for r in records if r.hat_disp is not None)
    bound = dists[0] / (1.0 - cfg.alpha1 - cfg.alpha2) if dists else 0.0
    margin = bound - total
    return Certificate(
        "displacement_sum", True, margin >= 0.0, margin,
        f"sum {total:.6g} vs bound {bound:.6g}",
    )


def _check_superlinear(report, obj, dists, mu, l1) -> Certificate:
    if obj.hessian is None or obj.l2 is None:
        raise MissingGroundTruth(
            "superlinear envelope needs the Hessian oracle and L2"
        )
    h_star = obj.hessian(obj.minimizer)
    gap = float(np.linalg.norm(report.b0 - h_star) ** 2)
    denom = superlinear_denominator(mu, l1, gap, obj.l2, dists[0])
    if dists[0] == 0.0:
        return Certificate(
            "superlinear_envelope", True, True, math.inf, "started at x*"
        )
    worst = math.inf
    worst_k = -1
    # k = 0 compares 1 <= 1 identically; start at the first real iterate
    for k, d_k in enumerate(dists[1:], start=1):
        margin = superlinear_envelope(k, mu, denom) - d_k / dists[0]
        if margin < worst:
            worst, worst_k = margin, k
    if worst_k < 0:
        return Certificate(
            "superlinear_envelope", True, True, math.inf, "empty trace"
        )
    return Certificate(
        "superlinear_envelope", True, worst >= 0.0, worst, f"worst at k={worst_k}"
    )
