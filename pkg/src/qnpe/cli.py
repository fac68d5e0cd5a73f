"""Benchmark command line: run solvers on configured problems, verify the
per-run certificates, and compare methods.

Problem specs use the `name:key=val,...` micro-syntax
(`quadratic:d=50,mu=1,l1=1000,seed=7`, `logistic:n=200,d=20,lambda=0.1,seed=3`,
`mm:path/to/matrix.mtx`); generator seeds are mandatory. Traces are CSV with
the fixed header below, summaries and certificate reports are flat
`key=value` text. Identical spec and seed produce byte-identical traces.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from typing import Optional

from .baselines import solve_bfgs, solve_gd
from .core import Objective, SolverConfig, SolverReport
from .errors import ProblemMismatch, SolverError
from .problems import load_matrix_market, make_logistic, make_quadratic
from .solver import solve
from .verify import iteration_complexity_bound, verify_trace

CSV_HEADER = (
    "k,eta,backtracked,ls_steps,grad_evals,mv_linsolve,mv_extevec,"
    "loss,dist_sq,grad_norm"
)

OUT_DIR_ENV = "QNPE_OUT_DIR"

_CONFIG_FLOAT_FLAGS = (
    "alpha1", "alpha2", "beta", "sigma0", "rho", "delta", "p", "b0",
    "grad_tol", "dist_tol",
)
_CONFIG_INT_FLAGS = ("seed", "max_iters", "max_backtracks_slack")


def _fmt(value) -> str:
    """Shortest round-trip decimal for floats, NA for missing."""
    if value is None:
        return "NA"
    return repr(float(value))


def parse_problem(spec: str) -> tuple:
    """Resolve a problem spec string to (Objective, canonical key)."""
    name, _, rest = spec.partition(":")
    if name == "mm":
        if not rest:
            raise ProblemMismatch("mm spec needs a file path: mm:PATH")
        return load_matrix_market(rest), f"mm:{rest}"
    params = {}
    if rest:
        for item in rest.split(","):
            key, _, val = item.partition("=")
            if not val:
                raise ProblemMismatch(f"malformed problem parameter {item!r}")
            params[key.strip()] = val.strip()
    if name == "quadratic":
        required = ("d", "mu", "l1", "seed")
        _require_params(spec, params, required)
        obj = make_quadratic(
            int(params["d"]), float(params["mu"]), float(params["l1"]),
            int(params["seed"]),
        )
    elif name == "logistic":
        required = ("n", "d", "lambda", "seed")
        _require_params(spec, params, required)
        obj = make_logistic(
            int(params["n"]), int(params["d"]), float(params["lambda"]),
            int(params["seed"]),
        )
    else:
        raise ProblemMismatch(f"unknown problem generator {name!r}")
    key = name + ":" + ",".join(f"{k}={params[k]}" for k in required)
    return obj, key


def _require_params(spec, params, required):
    missing = [k for k in required if k not in params]
    if missing:
        raise ProblemMismatch(f"{spec!r} is missing {', '.join(missing)}")
    extra = [k for k in params if k not in required]
    if extra:
        raise ProblemMismatch(f"{spec!r} has unknown keys {', '.join(extra)}")


def config_from_args(args) -> SolverConfig:
    overrides = {}
    for name in _CONFIG_FLOAT_FLAGS + _CONFIG_INT_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "oracle_mode", None) is not None:
        overrides["oracle_mode"] = args.oracle_mode
    return SolverConfig(**overrides)


def run_method(method: str, obj: Objective, cfg: SolverConfig) -> SolverReport:
    if method == "qnpe":
        return solve(obj, cfg)
    if method == "gd":
        return solve_gd(obj, cfg)
    if method == "bfgs":
        return solve_bfgs(obj, cfg)
    raise ProblemMismatch(f"unknown method {method!r}")


def trace_csv(report: SolverReport) -> str:
    lines = [CSV_HEADER]
    for r in report.records:
        lines.append(
            ",".join(
                (
                    str(r.k),
                    _fmt(r.eta),
                    "1" if r.backtracked else "0",
                    str(r.ls_steps),
                    str(r.grad_evals),
                    str(r.matvecs_linsolve),
                    str(r.matvecs_extevec),
                    _fmt(r.loss_value),
                    _fmt(r.dist_sq),
                    _fmt(r.grad_norm),
                )
            )
        )
    return "\n".join(lines) + "\n"


def summary_kv(report: SolverReport, obj: Objective, problem_key: str) -> str:
    totals = report.totals()
    pairs = [
        ("method", report.method),
        ("problem", problem_key),
        ("termination", report.termination),
        ("iterations", str(report.iterations)),
        ("grad_evals", str(totals["grad_evals"])),
        ("ls_steps", str(totals["ls_steps"])),
        ("mv_linsolve", str(totals["mv_linsolve"])),
        ("mv_extevec", str(totals["mv_extevec"])),
        ("final_grad_norm", _fmt(report.final_grad_norm)),
        ("final_dist_sq", _fmt(report.final_dist_sq(obj))),
        ("inv_eta_sq_sum", _fmt(report.inv_eta_sq_sum)),
        ("n_tr", _fmt(report.n_tr)),
        ("wall_time", _fmt(report.wall_time)),
    ]
    return "".join(f"{k}={v}\n" for k, v in pairs)


def _out_dir(args) -> str:
    if args.out_dir is not None:
        return args.out_dir
    return os.environ.get(OUT_DIR_ENV, ".")


def cmd_run(args) -> int:
    obj, key = parse_problem(args.problem)
    cfg = config_from_args(args)
    report = run_method(args.method, obj, cfg)
    out = _out_dir(args)
    os.makedirs(out, exist_ok=True)
    trace_path = args.trace or os.path.join(out, "trace.csv")
    summary_path = args.summary or os.path.join(out, "summary.txt")
    with open(trace_path, "w") as fh:
        fh.write(trace_csv(report))
    with open(summary_path, "w") as fh:
        fh.write(summary_kv(report, obj, key))
    print(f"{report.method} on {key}: {report.termination} "
          f"after {report.iterations} iterations")
    print(f"trace: {trace_path}")
    print(f"summary: {summary_path}")
    return 0


def cmd_verify(args) -> int:
    obj, key = parse_problem(args.problem)
    cfg = config_from_args(args)
    out = _out_dir(args)
    os.makedirs(out, exist_ok=True)
    report_path = args.report or os.path.join(out, "certificates.txt")

    lines = [f"method={args.method}", f"problem={key}"]
    if args.seeds <= 1:
        run = run_method(args.method, obj, cfg)
        certs = verify_trace(run, obj, regret_competitors=args.regret_competitors)
        ok = certs.all_passed
        for cert in certs.results:
            if not cert.applicable:
                lines.append(f"cert_{cert.name}=na")
                continue
            lines.append(f"cert_{cert.name}={'true' if cert.passed else 'false'}")
            lines.append(f"margin_{cert.name}={_fmt(cert.margin)}")
        lines.append(f"n_tr={_fmt(run.n_tr)}")
        final_dist = run.final_dist_sq(obj)
        if run.n_tr is not None and final_dist is not None and final_dist > 0.0:
            d0 = run.x0 - obj.minimizer
            bound = iteration_complexity_bound(
                final_dist, obj.mu, obj.l1, run.n_tr, float(d0 @ d0)
            )
            lines.append(f"n_eps_bound={_fmt(bound)}")
        lines.append(f"all_passed={'true' if ok else 'false'}")
        exit_code = 0 if ok else 1
    else:
        base_seed = cfg.seed
        passes = 0
        applicable = True
        for offset in range(args.seeds):
            seeded = dataclasses.replace(cfg, seed=base_seed + offset)
            run = run_method(args.method, obj, seeded)
            certs = verify_trace(run, obj)
            applicable = any(c.applicable for c in certs.results)
            ok = certs.all_passed
            passes += ok
            lines.append(f"seed_{base_seed + offset}={'pass' if ok else 'fail'}")
        rate = passes / args.seeds
        lines.append(f"pass_rate={_fmt(rate)}")
        exit_code = 0 if (not applicable or rate >= args.min_pass_rate) else 1

    text = "\n".join(lines) + "\n"
    with open(report_path, "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return exit_code


def cmd_compare(args) -> int:
    if len(args.run) < 2:
        raise ProblemMismatch("compare needs at least two --run specs")
    parsed = []
    for item in args.run:
        method, sep, problem = item.partition("@")
        if not sep:
            raise ProblemMismatch(
                f"--run must look like METHOD@PROBLEM, got {item!r}"
            )
        parsed.append((method, problem))
    problems = {problem for _, problem in parsed}
    if len(problems) != 1:
        raise ProblemMismatch(
            f"compare runs must share one problem, got {sorted(problems)}"
        )

    cfg = config_from_args(args)
    obj, key = parse_problem(parsed[0][1])
    reports = [(method, run_method(method, obj, cfg)) for method, _ in parsed]

    use_dist = obj.minimizer is not None
    metric = "dist_sq" if use_dist else "grad_norm"
    columns = []
    for _, report in reports:
        vals = [
            (r.dist_sq if use_dist else r.grad_norm) for r in report.records
        ]
        columns.append(vals)
    depth = max(len(c) for c in columns)

    lines = [f"# problem {key}", f"# metric {metric}"]
    lines.append("# k " + " ".join(method for method, _ in reports))
    for k in range(depth):
        row = [str(k)]
        for col in columns:
            row.append(_fmt(col[k]) if k < len(col) else "NA")
        lines.append(" ".join(row))
    for method, report in reports:
        totals = report.totals()
        lines.append(
            f"# totals {method} iterations={report.iterations} "
            f"grad_evals={totals['grad_evals']} "
            f"mv_linsolve={totals['mv_linsolve']} "
            f"mv_extevec={totals['mv_extevec']}"
        )
    text = "\n".join(lines) + "\n"

    out = _out_dir(args)
    os.makedirs(out, exist_ok=True)
    data_path = args.out or os.path.join(out, "compare.dat")
    with open(data_path, "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0


def _add_config_flags(parser):
    for name in _CONFIG_FLOAT_FLAGS:
        parser.add_argument(f"--{name.replace('_', '-')}", type=float, default=None)
    for name in _CONFIG_INT_FLAGS:
        parser.add_argument(f"--{name.replace('_', '-')}", type=int, default=None)
    parser.add_argument("--oracle-mode", choices=("lanczos", "exact"), default=None)
    parser.add_argument("--out-dir", default=None,
                        help=f"output directory (default ${OUT_DIR_ENV} or .)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnpe",
        description="quasi-Newton proximal extragradient benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve one problem and write trace/summary")
    run.add_argument("--problem", required=True)
    run.add_argument("--method", choices=("qnpe", "gd", "bfgs"), default="qnpe")
    run.add_argument("--trace", default=None)
    run.add_argument("--summary", default=None)
    _add_config_flags(run)
    run.set_defaults(func=cmd_run)

    verify = sub.add_parser("verify", help="run and machine-check certificates")
    verify.add_argument("--problem", required=True)
    verify.add_argument("--method", choices=("qnpe", "gd", "bfgs"), default="qnpe")
    verify.add_argument("--seeds", type=int, default=1,
                        help="number of consecutive seeds for statistical runs")
    verify.add_argument("--min-pass-rate", type=float, default=0.95)
    verify.add_argument("--regret-competitors", type=int, default=0)
    verify.add_argument("--report", default=None)
    _add_config_flags(verify)
    verify.set_defaults(func=cmd_verify)

    compare = sub.add_parser("compare", help="align runs on one problem")
    compare.add_argument("--run", action="append", default=[],
                         metavar="METHOD@PROBLEM")
    compare.add_argument("--out", default=None)
    _add_config_flags(compare)
    compare.set_defaults(func=cmd_compare)

    return parser


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SolverError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
