"""Acceptance gate: the ten primary criteria at their stated tolerances.

Each test records one PASS/FAIL line; the lines are printed together at
the end of the session (see conftest.py).  The Monte Carlo cells are run
once per session at desk scale (200 replications, p = 128, CV tuning) with
the same seeding as ``mc-run``, so every number here can be reproduced
from the CLI with ``--seed 0``.
"""
import math

import numpy as np
import pytest

from oracles import lasso_by_sign_enumeration
from whitelasso.cli import main
from whitelasso.datagen import make_rng, simulate_ar1_noise
from whitelasso.diagnostics import psi_frobenius_growth
from whitelasso.mc import (DgpTemplate, TuningMode, aggregate, replication_seed,
                           run_replication)
from whitelasso.solver import SolverConfig, fit_lasso
from whitelasso.whiten import apply_whitener, ar1_cholesky_factor, build_whitener

pytestmark = pytest.mark.slow

REPS = 200
P = 128
BASE_SEED = 0
# rho index follows the paper grid (0, 0.5, 0.9, 0.99) so seeds match a full mc-run
RHO_GRID = (0.0, 0.5, 0.9, 0.99)
N_GRID = tuple(range(50, 501, 50))

RESULTS: list[str] = []


def record(k: int, ok: bool, detail: str) -> None:
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  criterion {k:2d}: {detail}")


def _cells():
    cells = [(e, 500, 0.0) for e in ("lasso", "gls", "fgls")]
    cells += [(e, n, 0.9) for e in ("lasso", "gls", "fgls") for n in N_GRID if n >= 200]
    cells += [("fgls", n, 0.9) for n in (100, 150)]
    cells += [(e, n, 0.99) for e in ("gls", "fgls") for n in N_GRID if n >= 150]
    cells += [("lasso", 500, 0.99)]
    return sorted(set(cells), key=lambda c: (c[2], c[0], c[1]))


@pytest.fixture(scope="session")
def mc():
    dgp, tuning = DgpTemplate(), TuningMode()
    out = {}
    for est, n, rho in _cells():
        ri = RHO_GRID.index(rho)
        recs = [run_replication(est, n, P, rho, dgp, tuning,
                                replication_seed(BASE_SEED, n, P, ri, est, rep), rep,
                                replication_seed(BASE_SEED, n, P, ri, est, rep, stream=1))
                for rep in range(REPS)]
        out[est, n, rho] = (aggregate(est, n, P, rho, recs), recs)
    return out


def test_1_solver_matches_brute_force():
    rng = make_rng(20240601)
    worst, kkt_bad, count = 0.0, 0, 0
    for _ in range(500):
        n, p = int(rng.integers(1, 7)), int(rng.integers(1, 4))
        lam = float(rng.choice([0.01, 0.1, 1.0]))
        X = rng.standard_normal((n, p))
        y = X @ rng.standard_normal(p) + 0.5 * rng.standard_normal(n)
        cfg = SolverConfig(lam=lam)
        fit = fit_lasso(X, y, cfg)
        expected, _ = lasso_by_sign_enumeration(X, y, lam)
        worst = max(worst, float(np.max(np.abs(fit.beta - expected))))
        if fit.converged:
            count += 1
            g = X.T @ (y - X @ fit.beta) / n
            slack = 10 * cfg.tol * max(1.0, float((X * X).mean(axis=0).max()))
            on = fit.beta != 0
            if (np.any(np.abs(g) > lam + slack)
                    or np.any(np.abs(g[on] - lam * np.sign(fit.beta[on])) > slack)):
                kkt_bad += 1
    ok = worst < 1e-4 and kkt_bad == 0 and count == 500
    record(1, ok, f"500 instances, max l-inf gap {worst:.2e} (< 1e-4), "
                  f"{count} converged, {kkt_bad} KKT failures")
    assert ok


def test_2_whitening_inverts_cholesky_factor():
    worst = 0.0
    for rho in (0.0, 0.5, -0.5, 0.9, -0.9, 0.99):
        for n in range(1, 33):
            R = build_whitener(rho).dense(n)
            worst = max(worst, float(np.abs(R @ ar1_cholesky_factor(rho, n) - np.eye(n)).max()))
    ok = worst <= 1e-10
    record(2, ok, f"max |R Psi0 - I| = {worst:.2e} over n <= 32 (<= 1e-10)")
    assert ok


def test_3_frobenius_growth():
    worst = 0.0
    for rho in (0.0, 0.5, -0.5, 0.9, -0.9, 0.99):
        for n in (1, 10, 100, 1000, 10_000):
            F = psi_frobenius_growth(n, rho)
            worst = max(worst, abs(F[-1] / (n / (1 - rho * rho)) - 1))
    F = psi_frobenius_growth(4000, 0.9, init_var=1.0)
    ratio = lambda t: F[2 * t - 1] / F[t - 1]
    # early regime: t up to the AR memory 1/(1 - rho^2) ~ 5
    early = min(ratio(t) for t in range(1, 6))
    late = max(ratio(t) for t in range(200, 2001))
    ok = worst <= 1e-9 and early > 1.9 and late < 2.2
    record(3, ok, f"stationary F_n vs n a^2 rel err {worst:.1e} (<= 1e-9); fixed start "
                  f"min early F_2t/F_t {early:.3f} (> 1.9), max late {late:.4f} (< 2.2)")
    assert ok


def test_4_comparable_at_zero_rho(mc):
    means = {e: mc[e, 500, 0.0][0].mean_l2_scaled for e in ("lasso", "gls", "fgls")}
    spread = max(means.values()) / min(means.values()) - 1
    ok = spread <= 0.10
    record(4, ok, "rho=0 n=500 mean l2 " + ", ".join(f"{e} {v:.5f}" for e, v in means.items())
           + f"; spread {100 * spread:.1f}% (<= 10%)")
    assert ok


def test_5_dominance_at_rho_09(mc):
    bad, worst = [], math.inf
    for n in (n for n in N_GRID if n >= 200):
        lasso = mc["lasso", n, 0.9][0].mean_l2_scaled
        for e in ("gls", "fgls"):
            v = mc[e, n, 0.9][0].mean_l2_scaled
            worst = min(worst, lasso / v)
            if not v < lasso:
                bad.append((e, n))
    ok = not bad
    record(5, ok, f"rho=0.9 n>=200: GLS/FGLS below LASSO in every cell; smallest "
                  f"LASSO/other ratio {worst:.2f}; violations {bad}")
    assert ok


def test_6_near_unit_root_gap(mc):
    lasso = mc["lasso", 500, 0.99][0].mean_l2_scaled
    fgls = mc["fgls", 500, 0.99][0].mean_l2_scaled
    ok = lasso >= 2 * fgls
    record(6, ok, f"rho=0.99 n=500 LASSO/FGLS mean l2 ratio {lasso / fgls:.2f} (>= 2)")
    assert ok


def test_7_sign_recovery(mc):
    rates = {(e, n): mc[e, n, 0.99][0].sign_rate
             for e in ("gls", "fgls") for n in N_GRID if n >= 150}
    lasso = mc["lasso", 500, 0.99][0].sign_rate
    low = min(rates.values())
    ok = low >= 0.95 and lasso <= 0.85
    record(7, ok, f"rho=0.99: min GLS/FGLS sign_rate over n>=150 = {low:.3f} (>= 0.95); "
                  f"LASSO n=500 sign_rate {lasso:.3f} (<= 0.85)")
    assert ok


def test_8_rho_hat_consistency(mc):
    med = []
    for n in (100, 300, 500):
        recs = [r for r in mc["fgls", n, 0.9][1] if r.error is None]
        med.append(float(np.median([abs(r.rho_hat - 0.9) / 0.9 for r in recs])))
    ok = med[0] > med[1] > med[2] and med[2] < 0.10
    record(8, ok, "median |rho_hat - rho|/rho at n=100,300,500: "
                  + ", ".join(f"{m:.4f}" for m in med) + " (decreasing, last < 0.10)")
    assert ok


def test_9_whitening_decorrelates():
    n, rates = 500, {}
    for k, rho in enumerate((0.5, 0.9, 0.99)):
        hits = 0
        for rep in range(200):
            rng = make_rng(replication_seed(BASE_SEED, n, 1, k, "gls", rep))
            eps, _ = simulate_ar1_noise(n, rho, 1.0, None, rng)
            w = apply_whitener(build_whitener(rho), eps)
            r1 = np.corrcoef(w[:-1], w[1:])[0, 1]
            hits += abs(r1) < 2 / math.sqrt(n)
        rates[rho] = hits / 200
    ok = min(rates.values()) >= 0.90
    record(9, ok, "share with |lag-1 autocorr| < 2/sqrt(n): "
                  + ", ".join(f"rho={r} {v:.3f}" for r, v in rates.items()) + " (>= 0.90)")
    assert ok


def test_10_mc_run_thread_determinism(tmp_path, capsys):
    args = ["mc-run", "--n", "60,120", "--p", str(P), "--rho", "0,0.9,0.99", "--reps", "4",
            "--seed", "123"]
    outputs = {}
    for t in (1, 4, 8):
        path = tmp_path / f"t{t}.csv"
        assert main(args + ["--threads", str(t), "-o", str(path)]) == 0
        outputs[t] = path.read_bytes()
    capsys.readouterr()
    ok = outputs[1] == outputs[4] == outputs[8]
    record(10, ok, f"mc-run results CSV byte-identical at threads 1, 4, 8: {ok} "
                   f"({len(outputs[1])} bytes)")
    assert ok
