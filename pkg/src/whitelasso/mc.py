"""Monte Carlo comparison of LASSO, GLS-LASSO and FGLS-LASSO.

Every replication owns a seed derived from ``(base_seed, n, p, rho index,
estimator index, replication index)`` through ``numpy.random.SeedSequence``
spawn keys, so results do not depend on scheduling or worker count.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .datagen import (DgpConfig, SimulatedDataset, make_rng, simulate_ar1_noise, simulate_dataset,
                      sparsity_for)
from .diagnostics import estimation_errors, sign_recovered
from .solver import (Gls, Lasso, SolverConfig, fit_gls_lasso, fit_lasso, lambda_max,
                     rho_from_residuals)
from .tuning import (TheoryConstants, cv_two_fold, default_grid, lambda_fgls_theoretical,
                     lambda_lasso_theoretical, oracle_holdout_lambda)
from .whiten import apply_whitener, build_whitener, residuals

log = logging.getLogger(__name__)

ESTIMATORS = ("lasso", "gls", "fgls")
TUNING_KINDS = ("cv", "fixed", "theory", "oracle", "lambda_max")

RESULT_COLUMNS = ("estimator", "n", "p", "rho", "mean_l1", "mean_l2_scaled", "mean_linf",
                  "ci_lo_l2", "ci_hi_l2", "sign_rate", "mean_rho_hat", "mean_abs_rho_err",
                  "reps")
DUMP_COLUMNS = ("estimator", "n", "p", "rho", "rep", "l1", "l2_scaled", "linf", "sign",
                "rho_hat")


@dataclass(frozen=True)
class DgpTemplate:
    """Everything in :class:`DgpConfig` except the grid coordinates and seed.

    ``s=None`` applies the ``floor(p / 10)`` rule.
    """

    s: int | None = None
    sigma_u: float = 1.0
    init_var: float | None = None
    beta_magnitude: float = 1.0

    def config(self, n: int, p: int, rho: float, seed: int) -> DgpConfig:
        s = sparsity_for(p) if self.s is None else self.s
        return DgpConfig(n=n, p=p, s=s, rho=rho, sigma_u=self.sigma_u, init_var=self.init_var,
                         beta_magnitude=self.beta_magnitude, seed=seed)


@dataclass(frozen=True)
class TuningMode:
    kind: str = "cv"
    lam: float | None = None
    grid_len: int = 50
    consts: TheoryConstants = field(default_factory=TheoryConstants)
    tol: float = 1e-7
    max_sweeps: int = 10_000

    def __post_init__(self):
        if self.kind not in TUNING_KINDS:
            raise ValueError(f"tuning kind must be one of {TUNING_KINDS}, got {self.kind!r}")
        if self.kind == "fixed" and (self.lam is None or self.lam < 0):
            raise ValueError("fixed tuning needs a non-negative lambda")
        if self.grid_len < 1:
            raise ValueError("grid_len must be >= 1")

    @property
    def solver(self) -> SolverConfig:
        return SolverConfig(lam=0.0, tol=self.tol, max_sweeps=self.max_sweeps)


@dataclass(frozen=True)
class Scenario:
    n_values: tuple[int, ...]
    p_values: tuple[int, ...]
    rho_values: tuple[float, ...]
    estimators: tuple[str, ...] = ESTIMATORS
    replications: int = 200
    base_seed: int = 0
    dgp: DgpTemplate = field(default_factory=DgpTemplate)
    tuning: TuningMode = field(default_factory=TuningMode)

    def __post_init__(self):
        for name in ("n_values", "p_values", "rho_values", "estimators"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must be nonempty")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad:
            raise ValueError(f"unknown estimators {bad}; choose from {ESTIMATORS}")
        if any(abs(r) >= 1 for r in self.rho_values):
            raise ValueError("rho must lie in (-1,1)")
        if min(self.n_values) < 4:
            raise ValueError("every n must be >= 4 (two-fold CV)")
        if min(self.p_values) < 1:
            raise ValueError("every p must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")

    def cells(self):
        for est in self.estimators:
            for p in self.p_values:
                for ri, rho in enumerate(self.rho_values):
                    for n in self.n_values:
                        yield est, n, p, ri, rho


@dataclass
class RepRecord:
    estimator: str
    n: int
    p: int
    rho: float
    rep: int
    l1: float = math.nan
    l2_scaled: float = math.nan
    linf: float = math.nan
    sign: bool = False
    rho_hat: float = math.nan
    lam: float = math.nan
    error: str | None = None


@dataclass
class ResultRow:
    estimator: str
    n: int
    p: int
    rho: float
    mean_l1: float
    mean_l2_scaled: float
    mean_linf: float
    ci_lo_l2: float
    ci_hi_l2: float
    sign_rate: float
    mean_rho_hat: float
    mean_abs_rho_err: float
    reps: int


@dataclass
class ScenarioResult:
    rows: list[ResultRow]
    records: list[RepRecord]

    def row(self, estimator: str, n: int, p: int, rho: float) -> ResultRow:
        for r in self.rows:
            if (r.estimator, r.n, r.p, r.rho) == (estimator, n, p, rho):
                return r
        raise KeyError((estimator, n, p, rho))

    def cell_records(self, estimator: str, n: int, p: int, rho: float) -> list[RepRecord]:
        return [r for r in self.records if (r.estimator, r.n, r.p, r.rho) == (estimator, n, p, rho)
                and r.error is None]


def percentile(values: Iterable[float], q: float) -> float:
    """Order statistic at rank ``q * (m - 1)`` with linear interpolation."""
    v = np.sort(np.asarray(list(values), dtype=float))
    if v.size == 0:
        raise ValueError("percentile of an empty sequence")
    if not 0 <= q <= 1:
        raise ValueError("q must lie in [0, 1]")
    h = q * (v.size - 1)
    lo = int(math.floor(h))
    hi = min(lo + 1, v.size - 1)
    return float(v[lo] + (h - lo) * (v[hi] - v[lo]))


def replication_seed(base_seed: int, n: int, p: int, rho_index: int, estimator: str,
                     rep: int, stream: int = 0) -> int:
    """64-bit seed for one replication; ``stream`` separates auxiliary draws (e.g. hold-out)."""
    ss = np.random.SeedSequence(base_seed, spawn_key=(n, p, rho_index, ESTIMATORS.index(estimator),
                                                      rep, stream))
    return int(ss.generate_state(1, np.uint64)[0])


def _choose_lambda(X, y, kind, tuning: TuningMode, rho_for_theory, data: SimulatedDataset,
                   holdout: SimulatedDataset | None, stage2: bool = False) -> float:
    if tuning.kind == "fixed":
        return float(tuning.lam)
    if tuning.kind == "theory":
        n, p = X.shape
        if stage2:
            s = max(int(np.count_nonzero(data.beta0)), 1)
            return lambda_fgls_theoretical(tuning.consts, n, p, s, rho_for_theory)
        return lambda_lasso_theoretical(tuning.consts, n, p, rho_for_theory)
    if tuning.kind == "oracle":
        grid = default_grid(holdout.X, holdout.y, max(tuning.grid_len, 2))
        return oracle_holdout_lambda(data, holdout, grid, tuning.solver)
    # grids live on the scale of the data actually fitted
    Xg, yg = X, y
    if isinstance(kind, Gls):
        op = build_whitener(kind.rho)
        Xg, yg = apply_whitener(op, X), apply_whitener(op, y)
    if tuning.kind == "lambda_max" or tuning.grid_len == 1:
        return lambda_max(Xg, yg)
    grid = default_grid(Xg, yg, tuning.grid_len)
    return cv_two_fold(X, y, kind, grid, tuning.solver).chosen_lambda


def run_replication(estimator: str, n: int, p: int, rho: float, dgp: DgpTemplate,
                    tuning: TuningMode, seed: int, rep: int = 0,
                    holdout_seed: int | None = None) -> RepRecord:
    """Simulate, tune, fit and score one replication.  Failures are recorded, not raised."""
    rec = RepRecord(estimator=estimator, n=n, p=p, rho=rho, rep=rep)
    try:
        data = simulate_dataset(dgp.config(n, p, rho, seed))
        holdout = None
        if tuning.kind == "oracle":
            hs = holdout_seed if holdout_seed is not None else seed ^ 0x9E3779B97F4A7C15
            holdout = _holdout_like(data, dgp, hs)
        X, y = data.X, data.y
        base = tuning.solver
        if estimator == "lasso":
            lam = _choose_lambda(X, y, Lasso(), tuning, rho, data, holdout)
            fit = fit_lasso(X, y, SolverConfig(lam, base.tol, base.max_sweeps))
        elif estimator == "gls":
            lam = _choose_lambda(X, y, Gls(rho), tuning, 0.0, data, holdout)
            fit = fit_gls_lasso(X, y, rho, SolverConfig(lam, base.tol, base.max_sweeps))
        elif estimator == "fgls":
            lam1 = _choose_lambda(X, y, Lasso(), tuning, rho, data, holdout)
            first = fit_lasso(X, y, SolverConfig(lam1, base.tol, base.max_sweeps))
            ar = rho_from_residuals(residuals(y, X, first.beta))
            rec.rho_hat = ar.rho_used
            lam = _choose_lambda(X, y, Gls(ar.rho_used), tuning, rho, data, holdout, stage2=True)
            fit = fit_gls_lasso(X, y, ar.rho_used, SolverConfig(lam, base.tol, base.max_sweeps))
        else:
            raise ValueError(f"unknown estimator {estimator!r}")
        err = estimation_errors(fit.beta, data.beta0)
        rec.l1, rec.l2_scaled, rec.linf = err.l1, err.l2_scaled, err.linf
        rec.sign = sign_recovered(fit.beta, data.beta0)
        rec.lam = lam
    except Exception as exc:  # recorded and excluded from aggregation
        log.warning("replication %s n=%d p=%d rho=%g rep=%d failed: %s", estimator, n, p, rho,
                    rep, exc)
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def _holdout_like(data: SimulatedDataset, dgp: DgpTemplate, seed: int) -> SimulatedDataset:
    # fresh design and noise, same coefficients
    cfg = data.config
    rng = make_rng(seed)
    X = rng.standard_normal((cfg.n, cfg.p))
    eps, u = simulate_ar1_noise(cfg.n, cfg.rho, cfg.sigma_u, cfg.init_var, rng)
    return SimulatedDataset(X=X, y=X @ data.beta0 + eps, beta0=data.beta0.copy(),
                            support=data.support.copy(), epsilon=eps, u=u, config=cfg)


def aggregate(estimator: str, n: int, p: int, rho: float, recs: list[RepRecord]) -> ResultRow:
    ok = sorted((r for r in recs if r.error is None), key=lambda r: r.rep)
    if not ok:
        nan = math.nan
        return ResultRow(estimator, n, p, rho, nan, nan, nan, nan, nan, nan, nan, nan, 0)
    l2 = [r.l2_scaled for r in ok]
    rho_hats = [r.rho_hat for r in ok if not math.isnan(r.rho_hat)]
    return ResultRow(
        estimator=estimator, n=n, p=p, rho=rho,
        mean_l1=float(np.mean([r.l1 for r in ok])),
        mean_l2_scaled=float(np.mean(l2)),
        mean_linf=float(np.mean([r.linf for r in ok])),
        ci_lo_l2=percentile(l2, 0.025),
        ci_hi_l2=percentile(l2, 0.975),
        sign_rate=sum(r.sign for r in ok) / len(ok),
        mean_rho_hat=float(np.mean(rho_hats)) if rho_hats else math.nan,
        mean_abs_rho_err=float(np.mean([abs(h - rho) for h in rho_hats])) if rho_hats else math.nan,
        reps=len(ok),
    )


def run_scenario(scenario: Scenario, threads: int = 1,
                 progress: Callable[[int, int], None] | None = None) -> ScenarioResult:
    """Run every cell of the grid; output is independent of ``threads``."""
    cells = list(scenario.cells())
    tasks = []
    for est, n, p, ri, rho in cells:
        for rep in range(scenario.replications):
            seed = replication_seed(scenario.base_seed, n, p, ri, est, rep)
            hold = replication_seed(scenario.base_seed, n, p, ri, est, rep, stream=1)
            tasks.append((est, n, p, rho, seed, rep, hold))

    def work(t):
        est, n, p, rho, seed, rep, hold = t
        return run_replication(est, n, p, rho, scenario.dgp, scenario.tuning, seed, rep, hold)

    reps = scenario.replications
    records: list[RepRecord] = []
    if threads <= 1:
        it = map(work, tasks)
        pool = None
    else:
        pool = ThreadPoolExecutor(max_workers=threads)
        it = pool.map(work, tasks)
    try:
        for k, rec in enumerate(it, 1):
            records.append(rec)
            if progress is not None and k % reps == 0:
                progress(k // reps, len(cells))
    finally:
        if pool is not None:
            pool.shutdown()

    rows = []
    for ci, (est, n, p, ri, rho) in enumerate(cells):
        rows.append(aggregate(est, n, p, rho, records[ci * reps:(ci + 1) * reps]))
    return ScenarioResult(rows=rows, records=records)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def results_csv(result: ScenarioResult) -> str:
    lines = [",".join(RESULT_COLUMNS)]
    for r in result.rows:
        lines.append(",".join(_fmt(getattr(r, c)) for c in RESULT_COLUMNS))
    return "\n".join(lines) + "\n"


def dump_csv(result: ScenarioResult) -> str:
    lines = [",".join(DUMP_COLUMNS)]
    for r in result.records:
        if r.error is None:
            lines.append(",".join(_fmt(getattr(r, c)) for c in DUMP_COLUMNS))
    return "\n".join(lines) + "\n"


def lasso_degradation_replication(n: int, p: int, rho: float, dgp: DgpTemplate, grid_len: int,
                                  seed: int, holdout_seed: int, tuning: TuningMode | None = None):
    """LASSO on AR(1) errors vs the same draw with iid errors, sharing one oracle lambda.

    The iid arm reuses the design, coefficients and innovations of the AR arm
    (``y_iid = X beta0 + u``).  Returns ``(err_ar, err_iid, lambda)``.
    """
    tuning = tuning or TuningMode(kind="oracle", grid_len=grid_len)
    data = simulate_dataset(dgp.config(n, p, rho, seed))
    holdout = _holdout_like(data, dgp, holdout_seed)
    grid = default_grid(holdout.X, holdout.y, max(grid_len, 2))
    lam = oracle_holdout_lambda(data, holdout, grid, tuning.solver)
    cfg = SolverConfig(lam, tuning.tol, tuning.max_sweeps)
    ar = fit_lasso(data.X, data.y, cfg)
    iid = fit_lasso(data.X, data.X @ data.beta0 + data.u, cfg)
    return estimation_errors(ar.beta, data.beta0), estimation_errors(iid.beta, data.beta0), lam


def run_degradation(n_values, p: int, rho_values, replications: int, base_seed: int = 0,
                    grid_len: int = 50, dgp: DgpTemplate | None = None) -> ScenarioResult:
    """LASSO error against n for several rho, with a matched iid-error arm.

    Rows use estimator labels ``lasso`` (AR errors) and ``lasso_iid``.
    """
    dgp = dgp or DgpTemplate()
    rows, records = [], []
    for ri, rho in enumerate(rho_values):
        for n in n_values:
            ar_recs, iid_recs = [], []
            for rep in range(replications):
                seed = replication_seed(base_seed, n, p, ri, "lasso", rep)
                hold = replication_seed(base_seed, n, p, ri, "lasso", rep, stream=1)
                e_ar, e_iid, lam = lasso_degradation_replication(n, p, rho, dgp, grid_len, seed,
                                                                 hold)
                for label, e, bucket in (("lasso", e_ar, ar_recs), ("lasso_iid", e_iid, iid_recs)):
                    bucket.append(RepRecord(label, n, p, rho, rep, e.l1, e.l2_scaled, e.linf,
                                            lam=lam))
            rows.append(aggregate("lasso", n, p, rho, ar_recs))
            rows.append(aggregate("lasso_iid", n, p, rho, iid_recs))
            records += ar_recs + iid_recs
    return ScenarioResult(rows=rows, records=records)
