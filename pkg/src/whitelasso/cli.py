"""Command-line entry point.

Exit codes: 0 success, 2 validation error, 1 runtime failure.  Data goes to
stdout (or ``-o``), human messages to stderr.  Every flag of a subcommand
can also be given in a YAML file passed with ``--config``; keys are flag
names with dashes or underscores, unknown keys are rejected, and flags on
the command line override file values.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import plot as svgplot
from .datagen import DgpConfig, simulate_dataset, sparsity_for
from .diagnostics import bound_cor3, bound_prop1, bound_prop3, bound_thm1, psi_frobenius_growth
from .mc import (ESTIMATORS, TUNING_KINDS, DgpTemplate, Scenario, TuningMode, dump_csv,
                 results_csv, run_scenario)
from .solver import (Fgls, Gls, Lasso, SolverConfig, fit_gls_lasso, fit_lasso, rho_from_residuals)
from .tuning import (TheoryConstants, cv_two_fold, default_grid, lambda_fgls_theoretical,
                     lambda_lasso_theoretical)
from .whiten import apply_whitener, build_whitener, estimate_ar1, residuals


class UsageError(Exception):
    """Bad input detected before any computation; exit code 2."""


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _names(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in str(text).split(",") if v.strip())


def _init_var(text: str) -> float | None:
    if text in ("stationary", "none", ""):
        return None
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"init must be 'stationary' or a variance, got {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError("initial variance must be positive")
    return v


def _theory_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau", type=float, default=2.0, help="probability exponent (>= 1)")
    p.add_argument("--theory-c", type=float, default=1.0, help="absolute constant c")
    p.add_argument("--theory-k", type=float, default=1.0, help="sub-Gaussian constant K")
    p.add_argument("--theory-C", dest="theory_C", type=float, default=1.0,
                   help="AR-estimation constant C")


def _consts(args) -> TheoryConstants:
    return TheoryConstants(K=args.theory_k, c=args.theory_c, tau=args.tau, C_prop3=args.theory_C)


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-7, help="max coefficient change per sweep")
    p.add_argument("--max-sweeps", type=int, default=10_000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="whitelasso", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help):
        p = sub.add_parser(name, help=help, description=help)
        p.add_argument("--config", type=Path, help="YAML file with flag values")
        return p

    p = add("simulate", "simulate one dataset and write it as CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--s", type=int, help="nonzero coefficients (default floor(p/10))")
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--sigma-u", type=float, default=1.0)
    p.add_argument("--init", type=_init_var, default=None,
                   help="'stationary' (default) or Var[eps_1]")
    p.add_argument("--beta-magnitude", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", type=Path, required=True,
                   help="dataset CSV; metadata goes to <output>.meta.json")

    p = add("fit", "fit LASSO, GLS-LASSO or FGLS-LASSO to a dataset CSV")
    p.add_argument("data", type=Path, help="CSV with header y,x1..xp")
    p.add_argument("--estimator", choices=ESTIMATORS, default="lasso")
    p.add_argument("--rho", type=float, help="AR coefficient (gls only)")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--lambda", dest="lam", type=float, help="fixed penalty level")
    mode.add_argument("--cv", action="store_true", help="two-fold temporal CV (default)")
    mode.add_argument("--lambda-theory", action="store_true", help="theoretical penalty level")
    p.add_argument("--grid-len", type=int, default=50)
    p.add_argument("--s", type=int, help="sparsity used by the FGLS theoretical level")
    _theory_flags(p)
    _solver_flags(p)
    p.add_argument("-o", "--output", type=Path, help="coefficient CSV (default stdout)")
    p.add_argument("--summary", type=Path,
                   help="summary JSON (default stdout when -o is given, else stderr)")

    p = add("estimate-ar", "AR(1) coefficient of a residual series")
    p.add_argument("residuals", type=Path, help="one value per line, or a CSV")
    p.add_argument("--column", default="0", help="CSV column name or 0-based index")

    p = add("bounds", "tabulate theoretical penalty levels and error bounds")
    p.add_argument("--bound", type=_names, default=("prop1",),
                   help="comma list of prop1,thm1,prop3,cor3,lambda_lasso,lambda_fgls")
    p.add_argument("--n", type=_floats, required=True)
    p.add_argument("--rho", type=_floats, default=(0.0,))
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--eta-min", type=float, default=1.0)
    p.add_argument("--lambda-t", type=float, default=1.0)
    p.add_argument("--kappa-t", type=float, default=1.0)
    p.add_argument("--s-size", type=int, default=1)
    p.add_argument("--tail-l1", type=float, default=0.0)
    p.add_argument("--sigma-max", type=float, default=1.0)
    _theory_flags(p)

    p = add("frobenius", "cumulative error-variance (Frobenius growth) curves")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rho", type=_floats, default=(0.9,))
    p.add_argument("--init", type=_names, default=("stationary",),
                   help="comma list of 'stationary' or Var[eps_1] values")
    p.add_argument("--sigma-u", type=float, default=1.0)
    p.add_argument("-o", "--output", type=Path)

    p = add("mc-run", "Monte Carlo grid over (estimator, n, p, rho)")
    p.add_argument("--n", type=_ints, default=tuple(range(50, 501, 50)))
    p.add_argument("--p", type=_ints, default=(128,))
    p.add_argument("--rho", type=_floats, default=(0.0, 0.5, 0.9, 0.99))
    p.add_argument("--estimators", type=_names, default=ESTIMATORS)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tuning", choices=TUNING_KINDS, default="cv")
    p.add_argument("--lambda", dest="lam", type=float, help="penalty for --tuning fixed")
    p.add_argument("--grid-len", type=int, default=50)
    p.add_argument("--s", type=int, help="nonzero coefficients (default floor(p/10))")
    p.add_argument("--sigma-u", type=float, default=1.0)
    p.add_argument("--init", type=_init_var, default=None)
    p.add_argument("--beta-magnitude", type=float, default=1.0)
    _theory_flags(p)
    _solver_flags(p)
    p.add_argument("--threads", type=int,
                   help="worker threads (default $WHITELASSO_THREADS or 1)")
    p.add_argument("-o", "--output", type=Path, required=True, help="results CSV")
    p.add_argument("--dump-reps", type=Path, help="per-replication CSV")

    p = add("plot", "SVG charts from an mc-run results CSV")
    p.add_argument("results", type=Path)
    p.add_argument("--y", choices=svgplot.Y_COLUMNS, default="mean_l2_scaled")
    p.add_argument("--no-bands", action="store_true", help="omit dashed percentile bands")
    p.add_argument("--panel-by-p", action="store_true", help="one panel per (p, rho)")
    p.add_argument("-o", "--output", type=Path, required=True, help="output directory")
    return parser


# ---------------------------------------------------------------- config files

def _subparser(parser, name):
    for action in parser._subparsers._group_actions:
        if name in action.choices:
            return action.choices[name]
    return None


def _config_argv(sub: argparse.ArgumentParser, path: Path) -> list[str]:
    """Translate a YAML mapping into flag tokens for ``sub``."""
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}")
    except yaml.YAMLError as exc:
        raise UsageError(f"invalid YAML in {path}: {exc}")
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must be a mapping")
    flags = {}
    for action in sub._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                flags[opt[2:].replace("-", "_")] = (opt, action)
    unknown = sorted(k for k in data if str(k).replace("-", "_") not in flags
                     or str(k).replace("-", "_") == "config")
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(map(str, unknown))}")
    argv = []
    for key, value in data.items():
        opt, action = flags[str(key).replace("-", "_")]
        if isinstance(action, argparse._StoreTrueAction):
            if value:
                argv.append(opt)
            continue
        if value is None:
            continue
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        argv += [opt, str(value)]
    return argv


def parse_args(argv: list[str]):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    sub = _subparser(parser, args.command)
    k = argv.index(args.command)
    # file values first so that explicit flags win
    return parser.parse_args(argv[:k + 1] + _config_argv(sub, args.config) + argv[k + 1:])


# ---------------------------------------------------------------- helpers

def _write(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)


def _check_out(path: Path | None, is_dir: bool = False) -> None:
    if path is None:
        return
    parent = path if is_dir else path.parent
    if is_dir and not path.exists():
        parent = path.parent
    if not (parent.exists() or str(parent) in ("", ".")):
        raise UsageError(f"output directory {parent} does not exist")
    if is_dir and path.exists() and not path.is_dir():
        raise UsageError(f"{path} exists and is not a directory")


def _check_in(path: Path) -> None:
    if not path.is_file():
        raise UsageError(f"input file {path} not found")


def _g(v: float) -> str:
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))


def _threads(args) -> int:
    if args.threads is not None:
        t = args.threads
    else:
        env = os.environ.get("WHITELASSO_THREADS", "1")
        try:
            t = int(env)
        except ValueError:
            raise UsageError(f"WHITELASSO_THREADS must be an integer, got {env!r}")
    if t < 1:
        raise UsageError("thread count must be >= 1")
    return t


def read_dataset(path: Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0].strip() != "y":
        raise UsageError(f"{path}: expected header starting with 'y'")
    if len(rows[0]) < 2:
        raise UsageError(f"{path}: need at least one predictor column")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise UsageError(f"{path}: non-numeric entry ({exc})")
    if data.ndim != 2 or data.shape[1] != len(rows[0]):
        raise UsageError(f"{path}: ragged rows")
    return data[:, 1:], data[:, 0]


# ---------------------------------------------------------------- commands

def cmd_simulate(args) -> int:
    _check_out(args.output)
    s = sparsity_for(args.p) if args.s is None else args.s
    try:
        cfg = DgpConfig(n=args.n, p=args.p, s=s, rho=args.rho, sigma_u=args.sigma_u,
                        init_var=args.init, beta_magnitude=args.beta_magnitude, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc))
    d = simulate_dataset(cfg)
    lines = [",".join(["y"] + [f"x{j + 1}" for j in range(cfg.p)])]
    for i in range(cfg.n):
        lines.append(",".join(repr(float(v)) for v in (d.y[i], *d.X[i])))
    _write(args.output, "\n".join(lines) + "\n")
    meta = {"config": {"n": cfg.n, "p": cfg.p, "s": cfg.s, "rho": cfg.rho,
                       "sigma_u": cfg.sigma_u,
                       "init": "stationary" if cfg.init_var is None else cfg.init_var,
                       "beta_magnitude": cfg.beta_magnitude, "seed": cfg.seed},
            "support": [int(j) + 1 for j in d.support],
            "beta0": [float(v) for v in d.beta0]}
    _write(Path(str(args.output) + ".meta.json"), json.dumps(meta, indent=2) + "\n")
    print(f"wrote {args.output} ({cfg.n} x {cfg.p})", file=sys.stderr)
    return 0


def _fit_lambda(args, X, y, kind, consts, stage2_rho=None):
    base = SolverConfig(lam=0.0, tol=args.tol, max_sweeps=args.max_sweeps)
    if args.lam is not None:
        return args.lam
    n, p = X.shape
    if args.lambda_theory:
        if stage2_rho is not None:
            s = args.s if args.s is not None else max(sparsity_for(p), 1)
            return lambda_fgls_theoretical(consts, n, p, s, stage2_rho)
        # whitened errors are white, so GLS uses the rho = 0 level
        rho = 0.0 if isinstance(kind, Gls) else (args.rho or 0.0)
        return lambda_lasso_theoretical(consts, n, p, rho)
    Xg, yg = X, y
    if isinstance(kind, Gls):
        op = build_whitener(kind.rho)
        Xg, yg = apply_whitener(op, X), apply_whitener(op, y)
    grid = default_grid(Xg, yg, args.grid_len)
    return cv_two_fold(X, y, kind, grid, base).chosen_lambda


def cmd_fit(args) -> int:
    _check_in(args.data)
    _check_out(args.output)
    _check_out(args.summary)
    if args.estimator == "gls" and args.rho is None:
        raise UsageError("--estimator gls needs --rho")
    if args.rho is not None and not abs(args.rho) < 1:
        raise UsageError("rho must lie in (-1,1)")
    if args.lam is not None and args.lam < 0:
        raise UsageError("lambda must be non-negative")
    if args.grid_len < 2:
        raise UsageError("--grid-len must be >= 2")
    try:
        consts = _consts(args)
        SolverConfig(lam=0.0, tol=args.tol, max_sweeps=args.max_sweeps)
    except ValueError as exc:
        raise UsageError(str(exc))
    X, y = read_dataset(args.data)
    if not args.lambda_theory and args.lam is None and X.shape[0] < 4:
        raise UsageError("cross-validation needs at least 4 rows")

    cfg = lambda lam: SolverConfig(lam=lam, tol=args.tol, max_sweeps=args.max_sweeps)
    summary = {"estimator": args.estimator}
    if args.estimator == "lasso":
        lam = _fit_lambda(args, X, y, Lasso(), consts)
        fit = fit_lasso(X, y, cfg(lam))
    elif args.estimator == "gls":
        lam = _fit_lambda(args, X, y, Gls(args.rho), consts)
        fit = fit_gls_lasso(X, y, args.rho, cfg(lam))
        summary["rho"] = args.rho
    else:
        lam1 = _fit_lambda(args, X, y, Lasso(), consts)
        first = fit_lasso(X, y, cfg(lam1))
        ar = rho_from_residuals(residuals(y, X, first.beta))
        lam = _fit_lambda(args, X, y, Gls(ar.rho_used), consts, stage2_rho=ar.rho_used)
        fit = fit_gls_lasso(X, y, ar.rho_used, cfg(lam))
        summary.update(stage1_lambda=lam1, rho_raw=ar.rho_raw, rho_used=ar.rho_used,
                       clamped=ar.clamped)
    summary.update(**{"lambda": fit.lam, "objective": fit.objective, "sweeps": fit.sweeps,
                      "converged": fit.converged, "kkt_violation": fit.kkt_violation,
                      "nonzero": int(np.count_nonzero(fit.beta))})
    beta_csv = "j,beta\n" + "".join(f"{j + 1},{float(b)!r}\n" for j, b in enumerate(fit.beta))
    _write(args.output, beta_csv)
    text = json.dumps(summary, indent=2) + "\n"
    if args.summary is not None:
        _write(args.summary, text)
    elif args.output is not None:
        sys.stdout.write(text)
    else:
        sys.stderr.write(text)
    return 0


def _read_series(path: Path, column: str) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise UsageError(f"{path} is empty")
    header = None
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        header, rows = rows[0], rows[1:]
    if column.isdigit():
        idx = int(column)
    elif header is not None and column in header:
        idx = header.index(column)
    else:
        raise UsageError(f"column {column!r} not found")
    try:
        return np.array([float(r[idx]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise UsageError(f"{path}: bad value in column {column!r} ({exc})")


def cmd_estimate_ar(args) -> int:
    _check_in(args.residuals)
    e = _read_series(args.residuals, args.column)
    if e.size < 2:
        raise UsageError("need at least 2 residuals")
    try:
        ar = estimate_ar1(e)
    except ValueError as exc:
        raise UsageError(str(exc))
    sys.stdout.write(f"rho_raw={ar.rho_raw!r}\nrho_used={ar.rho_used!r}\n"
                     f"clamped={str(ar.clamped).lower()}\nn_terms={ar.n_terms}\n")
    return 0


BOUND_KINDS = ("prop1", "thm1", "prop3", "cor3", "lambda_lasso", "lambda_fgls")


def cmd_bounds(args) -> int:
    bad = [b for b in args.bound if b not in BOUND_KINDS]
    if bad:
        raise UsageError(f"unknown bounds {bad}; choose from {BOUND_KINDS}")
    try:
        consts = _consts(args)
    except ValueError as exc:
        raise UsageError(str(exc))
    if not args.p > 1:
        raise UsageError("p must exceed 1")
    if any(not abs(r) < 1 for r in args.rho):
        raise UsageError("rho must lie in (-1,1)")
    if any(not n > 0 for n in args.n):
        raise UsageError("n must be positive")
    lines = ["bound,n,rho,value"]
    for b in args.bound:
        for rho in args.rho:
            for n in args.n:
                try:
                    if b == "prop1":
                        v = bound_prop1(consts, args.kappa, n, args.p, args.s, rho).value
                    elif b == "thm1":
                        v = bound_thm1(args.lambda_t, args.kappa_t, args.s_size, args.tail_l1,
                                       args.sigma_max, n, args.p).value
                    elif b == "prop3":
                        v = bound_prop3(consts, n, args.p, args.s).value
                    elif b == "cor3":
                        v = bound_cor3(consts, args.eta_min, n, args.p, args.s, rho).value
                    elif b == "lambda_lasso":
                        v = lambda_lasso_theoretical(consts, n, args.p, rho)
                    else:
                        v = lambda_fgls_theoretical(consts, n, args.p, args.s, rho)
                except ValueError as exc:
                    raise UsageError(str(exc))
                lines.append(f"{b},{n!r},{rho!r},{'vacuous' if v is None else repr(v)}")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_frobenius(args) -> int:
    _check_out(args.output)
    if args.n < 1:
        raise UsageError("n must be >= 1")
    if any(not abs(r) < 1 for r in args.rho):
        raise UsageError("rho must lie in (-1,1)")
    try:
        inits = [(name, _init_var(name)) for name in args.init]
    except argparse.ArgumentTypeError as exc:
        raise UsageError(str(exc))
    cols, names = [], []
    for rho in args.rho:
        for label, v in inits:
            cols.append(psi_frobenius_growth(args.n, rho, args.sigma_u, v))
            names.append(f"F_rho{rho!r}_init{label}")
    lines = [",".join(["t"] + names)]
    for t in range(args.n):
        lines.append(",".join([str(t + 1)] + [repr(float(c[t])) for c in cols]))
    _write(args.output, "\n".join(lines) + "\n")
    return 0


def scenario_from_args(args) -> Scenario:
    try:
        return Scenario(
            n_values=args.n, p_values=args.p, rho_values=args.rho,
            estimators=args.estimators, replications=args.reps, base_seed=args.seed,
            dgp=DgpTemplate(s=args.s, sigma_u=args.sigma_u, init_var=args.init,
                            beta_magnitude=args.beta_magnitude),
            tuning=TuningMode(kind=args.tuning, lam=args.lam, grid_len=args.grid_len,
                              consts=_consts(args), tol=args.tol, max_sweeps=args.max_sweeps))
    except ValueError as exc:
        raise UsageError(str(exc))


def cmd_mc_run(args) -> int:
    _check_out(args.output)
    _check_out(args.dump_reps)
    scenario = scenario_from_args(args)
    if scenario.dgp.s is not None and scenario.dgp.s > min(scenario.p_values):
        raise UsageError("s exceeds the smallest p")
    if not 0 <= args.seed < 2**64:
        raise UsageError("seed must be an unsigned 64-bit integer")
    threads = _threads(args)

    def progress(done, total):
        print(f"cells {done}/{total}", file=sys.stderr, flush=True)

    result = run_scenario(scenario, threads=threads, progress=progress)
    _write(args.output, results_csv(result))
    if args.dump_reps is not None:
        _write(args.dump_reps, dump_csv(result))
    failed = sum(r.error is not None for r in result.records)
    if failed:
        print(f"{failed} replications failed and were excluded", file=sys.stderr)
    return 0


def cmd_plot(args) -> int:
    _check_in(args.results)
    _check_out(args.output, is_dir=True)
    spec = svgplot.ChartSpec(y=args.y, bands=not args.no_bands, panel_by_p=args.panel_by_p)
    try:
        charts = svgplot.render(args.results.read_text(encoding="utf-8"), spec)
    except ValueError as exc:  # missing columns or no rows
        raise UsageError(str(exc))
    args.output.mkdir(exist_ok=True)
    for stem, svg in charts.items():
        _write(args.output / f"{args.y}_{stem}.svg", svg)
    print(f"wrote {len(charts)} charts to {args.output}", file=sys.stderr)
    return 0


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "estimate-ar": cmd_estimate_ar,
            "bounds": cmd_bounds, "frobenius": cmd_frobenius, "mc-run": cmd_mc_run,
            "plot": cmd_plot}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
