"""Command-line experiment harness.

Subcommands:

  nodes      dump a mapped Gauss rule (j, z, x, chi)
  quad-test  mapped quadrature against reference values for singular
             integrands with the -log(x(1-x)) weight, or Gaussian moments
  solve      solve one registry problem at a single resolution
  converge   error sweep over a list of resolutions, written as CSV
  compare    node-value discrepancy between the two discretizations

Options may also come from a key=value config file (--config); explicit
flags win.  Exit codes: 0 success, 1 solver/oracle failure, 2 usage error.

Report CSVs carry metadata as '#' comment lines so the data rows stay
bit-identical across runs (runtime_ms excepted, by its nature).
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import __version__
from .approx import error_norms, eval_grid_1d, eval_grid_axis_2d
from .mhf import MhfBasis, mhf_gauss_rule, mhf_unit_weights
from .problem import OracleError, get_problem, problem_names, tanh_sinh
from .solver import (
    METHOD_MHF,
    METHOD_SMOOTHED,
    AssemblyError,
    NonConvergenceError,
    SolverConfig,
    SolverError,
    solve,
)

__all__ = [
    "ConvergenceReport",
    "ReportRow",
    "UsageError",
    "main",
    "run_convergence",
]


class UsageError(ValueError):
    """Bad arguments or config input.

    Subclasses ValueError so argparse turns a failing type callable (such
    as a malformed --n-list) into a normal usage exit instead of letting
    the exception escape main.
    """


REPORT_HEADER = ("N", "NI", "alpha", "err_inf", "err_l2chi", "newton_iters", "runtime_ms")

CONFIG_KEYS = {
    "problem",
    "method",
    "alpha",
    "alpha2",
    "n",
    "ni",
    "n_list",
    "ni_offset",
    "newton_tol",
    "out",
    "integrand",
    "k",
}

INTEGRANDS = ("sqrt-logweight", "log-logweight", "moments")


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _read_config(path: str) -> dict:
    cfg = {}
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        cfg[key] = value.strip()
    return cfg


def _parse_n_list(text: str) -> list:
    try:
        values = [int(part) for part in text.replace(" ", "").split(",") if part]
    except ValueError:
        raise UsageError(f"bad resolution list {text!r}") from None
    if not values or any(v < 0 for v in values):
        raise UsageError(f"bad resolution list {text!r}")
    return sorted(values)


def _effective(args, cfg: dict, name: str, cast, default=None):
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in cfg:
        try:
            return cast(cfg[name])
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad config value for {name!r}: {cfg[name]!r}") from exc
    return default


def _metadata(extra: dict) -> dict:
    meta = {"build": f"mhfie {__version__}"}
    meta.update(extra)
    meta["timestamp"] = datetime.now(timezone.utc).isoformat()
    return meta


def _emit(out: Optional[str], text: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _csv_text(meta: dict, header, rows) -> str:
    lines = [f"# {key}: {value}" for key, value in meta.items()]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# convergence reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReportRow:
    n: int
    ni: int
    alpha: float
    err_inf: float
    err_l2chi: float
    newton_iters: int
    runtime_ms: float
    err_colloc: Optional[float] = None


@dataclass
class ConvergenceReport:
    problem: str
    method: str
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    with_colloc: bool = False

    @property
    def failed(self) -> bool:
        return any(math.isnan(row.err_inf) for row in self.rows)

    def to_csv_text(self) -> str:
        header = REPORT_HEADER + (("err_colloc",) if self.with_colloc else ())
        rows = []
        for r in self.rows:
            row = [r.n, r.ni, r.alpha, r.err_inf, r.err_l2chi, r.newton_iters, r.runtime_ms]
            if self.with_colloc:
                row.append(r.err_colloc if r.err_colloc is not None else float("nan"))
            rows.append(row)
        meta = dict(self.metadata)
        meta.setdefault("problem", self.problem)
        meta.setdefault("method", self.method)
        return _csv_text(meta, header, rows)

    @classmethod
    def from_csv_text(cls, text: str) -> "ConvergenceReport":
        metadata, header, data = {}, None, []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                metadata[key.strip()] = value.strip()
                continue
            if header is None:
                header = tuple(line.split(","))
                if header[: len(REPORT_HEADER)] != REPORT_HEADER:
                    raise ValueError(f"unexpected report header {header}")
                continue
            data.append(line.split(","))
        if header is None:
            raise ValueError("no header row found")
        with_colloc = "err_colloc" in header
        rows = []
        for parts in data:
            rows.append(
                ReportRow(
                    n=int(parts[0]),
                    ni=int(parts[1]),
                    alpha=float(parts[2]),
                    err_inf=float(parts[3]),
                    err_l2chi=float(parts[4]),
                    newton_iters=int(parts[5]),
                    runtime_ms=float(parts[6]),
                    err_colloc=float(parts[7]) if with_colloc else None,
                )
            )
        report = cls(
            problem=metadata.get("problem", ""),
            method=metadata.get("method", ""),
            rows=rows,
            metadata=metadata,
            with_colloc=with_colloc,
        )
        return report


def _solution_errors(problem, config, solution):
    if problem.exact_solution is None:
        return float("nan"), float("nan"), float("nan")
    if problem.dimension == 1:
        norms = error_norms(
            solution.interpolant, problem.exact_solution, config.alpha, dim=1
        )
        colloc = float(
            np.max(np.abs(solution.node_values - problem.exact_solution(solution.nodes_x)))
        )
    else:
        a2 = config.alpha2 if config.alpha2 is not None else config.alpha
        norms = error_norms(
            solution.interpolant,
            problem.exact_solution,
            (config.alpha, a2),
            dim=2,
            degree=config.n,
        )
        gx, gy = np.meshgrid(solution.nodes_x, solution.nodes_y, indexing="ij")
        colloc = float(
            np.max(np.abs(solution.node_values - problem.exact_solution(gx, gy)))
        )
    return norms.err_inf, norms.err_l2chi, colloc


def run_convergence(problem_name: str, n_list, method: str = METHOD_MHF,
                    alpha: float = None, alpha2: Optional[float] = None,
                    ni_offset: int = 1, newton_tol: float = 1e-12,
                    with_colloc: bool = False) -> ConvergenceReport:
    """Solve at each resolution and collect the error report (rows sorted by N)."""
    problem = get_problem(problem_name)
    if alpha is None:
        alpha = problem.default_alpha
    report = ConvergenceReport(
        problem=problem_name,
        method=method,
        with_colloc=with_colloc,
        metadata=_metadata(
            {
                "problem": problem_name,
                "method": method,
                "alpha": _fmt(alpha),
                "ni_offset": str(ni_offset),
                "newton_tol": _fmt(newton_tol),
            }
        ),
    )
    for n in sorted(n_list):
        config = SolverConfig(
            n=n,
            ni=n + ni_offset,
            alpha=alpha,
            alpha2=alpha2,
            method=method,
            newton_tol=newton_tol,
        )
        start = time.perf_counter()
        try:
            solution = solve(problem, config)
        except (SolverError, NonConvergenceError, AssemblyError, OracleError, ValueError):
            runtime = 1e3 * (time.perf_counter() - start)
            report.rows.append(
                ReportRow(
                    n=n,
                    ni=config.ni_value,
                    alpha=alpha,
                    err_inf=float("nan"),
                    err_l2chi=float("nan"),
                    newton_iters=-1,
                    runtime_ms=runtime,
                    err_colloc=float("nan") if with_colloc else None,
                )
            )
            continue
        runtime = 1e3 * (time.perf_counter() - start)
        err_inf, err_l2, colloc = _solution_errors(problem, config, solution)
        report.rows.append(
            ReportRow(
                n=n,
                ni=config.ni_value,
                alpha=alpha,
                err_inf=err_inf,
                err_l2chi=err_l2,
                newton_iters=solution.newton_iters,
                runtime_ms=runtime,
                err_colloc=colloc if with_colloc else None,
            )
        )
    return report


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_nodes(args) -> int:
    cfg = _read_config(args.config) if args.config else {}
    alpha = _effective(args, cfg, "alpha", float, 1.0)
    n = _effective(args, cfg, "n", int)
    out = _effective(args, cfg, "out", str)
    if n is None:
        raise UsageError("nodes requires --n")
    rule = mhf_gauss_rule(MhfBasis(alpha=alpha, degree=n))
    rows = [
        (j, rule.hermite.nodes[j], rule.nodes[j], rule.weights[j])
        for j in range(n + 1)
    ]
    meta = _metadata({"alpha": _fmt(alpha), "n": str(n)})
    _emit(out, _csv_text(meta, ("j", "z", "x", "chi"), rows))
    return 0


def _quad_oracle(integrand: str, alpha: float, k: int) -> float:
    if integrand == "moments":
        return math.gamma((k + 1) / 2.0) / alpha ** (k + 1) if k % 2 == 0 else 0.0
    if integrand == "sqrt-logweight":
        f = lambda r, c: np.sqrt(r) * -(np.log(r) + np.log(c))
    else:
        f = lambda r, c: np.log(r) * -(np.log(r) + np.log(c))
    return tanh_sinh(f, 1.0, tol=1e-13)


def _quad_value(integrand: str, rule, k: int) -> float:
    t = rule.logits
    if integrand == "moments":
        return float((t**k) @ rule.weights)
    # weight -log(x(1-x)) from the logits, unit-weight quadrature coefficients
    w = np.logaddexp(0.0, -t) + np.logaddexp(0.0, t)
    if integrand == "sqrt-logweight":
        f = np.sqrt(rule.nodes)
    else:
        f = -np.logaddexp(0.0, -t)  # log(x)
    return float((f * w) @ mhf_unit_weights(rule))


def _cmd_quad_test(args) -> int:
    cfg = _read_config(args.config) if args.config else {}
    alpha = _effective(args, cfg, "alpha", float, 1.0)
    integrand = _effective(args, cfg, "integrand", str)
    k = _effective(args, cfg, "k", int, 2)
    n_list = _effective(args, cfg, "n_list", _parse_n_list)
    out = _effective(args, cfg, "out", str)
    if integrand not in INTEGRANDS:
        raise UsageError(
            f"unknown integrand {integrand!r}; available: {', '.join(INTEGRANDS)}"
        )
    if n_list is None:
        raise UsageError("quad-test requires --n-list")
    oracle = _quad_oracle(integrand, alpha, k)
    rows = []
    for n in n_list:
        rule = mhf_gauss_rule(MhfBasis(alpha=alpha, degree=n))
        value = _quad_value(integrand, rule, k)
        rows.append((n, value, abs(value - oracle)))
    meta = _metadata(
        {"integrand": integrand, "alpha": _fmt(alpha), "oracle": _fmt(oracle)}
    )
    _emit(out, _csv_text(meta, ("N", "value", "abs_error"), rows))
    return 0


def _solver_config_from(args, cfg) -> tuple:
    problem_name = _effective(args, cfg, "problem", str)
    if problem_name is None:
        raise UsageError("a problem name is required (--problem)")
    try:
        problem = get_problem(problem_name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    method = _effective(args, cfg, "method", str, METHOD_MHF)
    if method not in (METHOD_MHF, METHOD_SMOOTHED):
        raise UsageError(f"unknown method {method!r}")
    alpha = _effective(args, cfg, "alpha", float, problem.default_alpha)
    alpha2 = _effective(args, cfg, "alpha2", float)
    newton_tol = _effective(args, cfg, "newton_tol", float, 1e-12)
    return problem, method, alpha, alpha2, newton_tol


def _cmd_solve(args) -> int:
    cfg = _read_config(args.config) if args.config else {}
    problem, method, alpha, alpha2, newton_tol = _solver_config_from(args, cfg)
    n = _effective(args, cfg, "n", int)
    if n is None:
        raise UsageError("solve requires --n")
    ni = _effective(args, cfg, "ni", int)
    ni_offset = _effective(args, cfg, "ni_offset", int, 1)
    config = SolverConfig(
        n=n,
        ni=ni if ni is not None else n + ni_offset,
        alpha=alpha,
        alpha2=alpha2,
        method=method,
        newton_tol=newton_tol,
    )
    solution = solve(problem, config)
    err_inf, err_l2, _ = _solution_errors(problem, config, solution)
    print(f"problem={problem.name} method={method} N={n} NI={config.ni_value} "
          f"alpha={_fmt(alpha)}")
    if not math.isnan(err_inf):
        print(f"err_inf={_fmt(err_inf)} err_l2chi={_fmt(err_l2)}")
    print(f"newton_iters={solution.newton_iters} residual={_fmt(solution.final_residual)}")
    if args.dump:
        if problem.dimension == 1:
            grid = eval_grid_1d()
            vals = solution.interpolant.eval(grid)
            rows = list(zip(grid, vals))
            header = ("x", "u")
        else:
            axis = eval_grid_axis_2d()
            vals = solution.interpolant.eval_grid(axis, axis)
            rows = [
                (axis[i], axis[j], vals[i, j])
                for i in range(axis.size)
                for j in range(axis.size)
            ]
            header = ("x", "y", "u")
        meta = _metadata({"problem": problem.name, "method": method, "n": str(n)})
        _emit(args.dump, _csv_text(meta, header, rows))
    return 0


def _cmd_converge(args) -> int:
    cfg = _read_config(args.config) if args.config else {}
    problem, method, alpha, alpha2, newton_tol = _solver_config_from(args, cfg)
    n_list = _effective(args, cfg, "n_list", _parse_n_list)
    if n_list is None:
        raise UsageError("converge requires --n-list")
    ni_offset = _effective(args, cfg, "ni_offset", int, 1)
    out = _effective(args, cfg, "out", str)
    report = run_convergence(
        problem.name,
        n_list,
        method=method,
        alpha=alpha,
        alpha2=alpha2,
        ni_offset=ni_offset,
        newton_tol=newton_tol,
        with_colloc=args.with_colloc,
    )
    _emit(out, report.to_csv_text())
    return 1 if report.failed else 0


def _cmd_compare(args) -> int:
    cfg = _read_config(args.config) if args.config else {}
    problem, _, alpha, alpha2, newton_tol = _solver_config_from(args, cfg)
    n_list = _effective(args, cfg, "n_list", _parse_n_list)
    if n_list is None:
        raise UsageError("compare requires --n-list")
    ni_offset = _effective(args, cfg, "ni_offset", int, 1)
    out = _effective(args, cfg, "out", str)
    threshold = 10.0 * newton_tol
    rows, all_ok = [], True
    for n in n_list:
        base = dict(
            n=n, ni=n + ni_offset, alpha=alpha, alpha2=alpha2, newton_tol=newton_tol
        )
        sol_m = solve(problem, SolverConfig(method=METHOD_MHF, **base))
        sol_s = solve(problem, SolverConfig(method=METHOD_SMOOTHED, **base))
        disc = float(np.max(np.abs(sol_m.node_values - sol_s.node_values)))
        ok = disc <= threshold
        all_ok &= ok
        rows.append((n, disc, int(ok)))
        print(f"N={n} max_discrepancy={_fmt(disc)} {'PASS' if ok else 'FAIL'}")
    if out:
        meta = _metadata({"problem": problem.name, "threshold": _fmt(threshold)})
        _emit(out, _csv_text(meta, ("N", "max_discrepancy", "pass"), rows))
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mhfie",
        description="Mapped Hermite collocation experiments for weakly "
        "singular integral equations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key=value config file; flags override")
        p.add_argument("--alpha", type=float, help="map scale parameter")
        p.add_argument("--out", help="output path ('-' for stdout)")

    p_nodes = sub.add_parser("nodes", help="dump a mapped Gauss rule as CSV")
    add_common(p_nodes)
    p_nodes.add_argument("--n", type=int, help="rule degree (n+1 nodes)")
    p_nodes.set_defaults(func=_cmd_nodes)

    p_quad = sub.add_parser("quad-test", help="quadrature error against reference")
    add_common(p_quad)
    p_quad.add_argument("--integrand", choices=INTEGRANDS)
    p_quad.add_argument("--k", type=int, help="moment power (moments integrand)")
    p_quad.add_argument("--n-list", dest="n_list", type=_parse_n_list)
    p_quad.set_defaults(func=_cmd_quad_test)

    def add_solver(p):
        add_common(p)
        p.add_argument("--problem", help=f"one of: {', '.join(problem_names())}")
        p.add_argument("--method", choices=(METHOD_MHF, METHOD_SMOOTHED))
        p.add_argument("--alpha2", type=float, help="second-axis map scale (2D)")
        p.add_argument("--newton-tol", dest="newton_tol", type=float)
        p.add_argument("--ni-offset", dest="ni_offset", type=int)

    p_solve = sub.add_parser("solve", help="solve one problem at one resolution")
    add_solver(p_solve)
    p_solve.add_argument("--n", type=int)
    p_solve.add_argument("--ni", type=int)
    p_solve.add_argument("--dump", help="CSV of the solution on the evaluation grid")
    p_solve.set_defaults(func=_cmd_solve)

    p_conv = sub.add_parser("converge", help="error sweep over resolutions")
    add_solver(p_conv)
    p_conv.add_argument("--n-list", dest="n_list", type=_parse_n_list)
    p_conv.add_argument(
        "--with-colloc",
        action="store_true",
        help="append a column with the collocation-point error",
    )
    p_conv.set_defaults(func=_cmd_converge)

    p_cmp = sub.add_parser("compare", help="mhf vs smoothed node values")
    add_solver(p_cmp)
    p_cmp.add_argument("--n-list", dest="n_list", type=_parse_n_list)
    p_cmp.set_defaults(func=_cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, NonConvergenceError, AssemblyError, OracleError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
