"""Choosing the penalty level.

Three routes: closed-form theoretical levels (diagnostic, depend on
unpinned absolute constants), two-fold temporal cross-validation (the
default), and a hold-out oracle that minimises coefficient error and is only
meaningful on simulated data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .datagen import SimulatedDataset
from .solver import (Fgls, Gls, Lasso, SolverConfig, fit_lasso, lambda_max, lasso_path,
                     rho_from_residuals)
from .whiten import DegenerateInputError, apply_whitener, build_whitener


@dataclass(frozen=True)
class TheoryConstants:
    K: float = 1.0
    c: float = 1.0
    tau: float = 2.0
    C_prop3: float = 1.0

    def __post_init__(self):
        if not self.tau >= 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")
        for name in ("K", "c", "C_prop3"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def with_kappa(cls, kappa: float, sigma_u: float = 1.0, **kw) -> TheoryConstants:
        """Fill ``C_prop3 = sqrt(30) * 8 / sqrt(c * kappa * sigma_u^2)`` from a restricted-eigenvalue constant."""
        if not kappa > 0:
            raise ValueError("kappa must be positive")
        c = kw.get("c", 1.0)
        return cls(C_prop3=math.sqrt(30.0) * 8.0 / math.sqrt(c * kappa * sigma_u**2), **kw)


def delta_scaling(n: float, r: float) -> float:
    """``sqrt(ln r / n)``."""
    if not r > 1:
        raise ValueError(f"r must exceed 1, got {r}")
    return delta_from_log(n, math.log(r))


def delta_from_log(n: float, log_r: float) -> float:
    """``delta_scaling`` taking ``ln r`` directly; ``r = p^(s*tau)`` overflows quickly."""
    if not n > 0:
        raise ValueError(f"n must be positive, got {n}")
    if not log_r > 0:
        raise ValueError("r must exceed 1")
    return math.sqrt(log_r / n)


def _inv_a2(rho: float) -> float:
    if not abs(rho) < 1:
        raise ValueError(f"rho must lie in (-1,1), got {rho}")
    return 1.0 - rho * rho


def lambda_lasso_theoretical(consts: TheoryConstants, n: float, p: float, rho: float) -> float:
    """``(4K / sqrt(c)) * delta(n / a^2, p^tau)``; grows with |rho|."""
    return 4.0 * consts.K / math.sqrt(consts.c) * delta_from_log(_inv_a2(rho) * n,
                                                                  consts.tau * math.log(p))


def fgls_inflation(consts: TheoryConstants, n: float, p: float, s: int, rho: float) -> float:
    """``(1 + rho^2 C delta(n / a^2, p^(s tau)))^(1/2)``."""
    if s < 1:
        raise ValueError("s must be >= 1")
    d = delta_from_log(_inv_a2(rho) * n, s * consts.tau * math.log(p))
    return math.sqrt(1.0 + rho * rho * consts.C_prop3 * d)


def lambda_fgls_theoretical(consts: TheoryConstants, n: float, p: float, s: int,
                            rho: float) -> float:
    """Second-stage level ``(4 / sqrt(c)) * inflation * delta(n, p^tau)``.

    Carries no ``K`` factor, exactly as the displayed formula.
    """
    base = delta_from_log(n, consts.tau * math.log(p))
    return 4.0 / math.sqrt(consts.c) * fgls_inflation(consts, n, p, s, rho) * base


@dataclass
class CvResult:
    lambda_grid: np.ndarray
    validation_mse: np.ndarray
    chosen_lambda: float
    chosen_index: int


def default_grid(X: np.ndarray, y: np.ndarray, length: int = 50, ratio: float = 1e-3) -> np.ndarray:
    """Log-spaced grid from ``lambda_max`` down to ``ratio * lambda_max``."""
    if length < 2:
        raise ValueError("grid length must be >= 2")
    top = lambda_max(X, y)
    if top == 0.0:
        raise DegenerateInputError("y is orthogonal to every column; lambda_max is zero")
    return np.geomspace(top, ratio * top, length)


def _path(X, y, lams_desc, base: SolverConfig):
    """Warm-started coefficient vectors along a decreasing grid."""
    return [f.beta for f in lasso_path(X, y, lams_desc, base)]


def _mse(X, y, beta):
    r = y - X @ beta
    return float(r @ r) / y.size


def _fold_errors(Xtr, ytr, Xva, yva, lams_desc, base):
    return np.array([_mse(Xva, yva, b) for b in _path(Xtr, ytr, lams_desc, base)])


def _fgls_fold_errors(X, y, train, valid, lams_desc, base):
    # per lambda: stage-1 LASSO on the training half, rho from its residuals,
    # then whiten the full series and fit/score on the whitened halves
    out = np.empty(len(lams_desc))
    stage1 = _path(X[train], y[train], lams_desc, base)
    warm = None
    for k, (lam, b1) in enumerate(zip(lams_desc, stage1)):
        rho = rho_from_residuals(y[train] - X[train] @ b1).rho_used
        op = build_whitener(rho)
        Xw, yw = apply_whitener(op, X), apply_whitener(op, y)
        fit = fit_lasso(Xw[train], yw[train], replace(base, lam=float(lam), warm_start=warm))
        warm = fit.beta
        out[k] = _mse(Xw[valid], yw[valid], fit.beta)
    return out


def cv_two_fold(X: np.ndarray, y: np.ndarray, estimator, grid,
                base: SolverConfig | None = None) -> CvResult:
    """Two-fold CV with folds = first and second halves of the series.

    For GLS the whole series is whitened before splitting, so the first row
    of the second half still uses the last observation of the first half.
    Validation error is the mean of the two held-out MSEs.  Ties go to the
    larger lambda.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if n < 4:
        raise ValueError(f"two-fold CV needs n >= 4, got {n}")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or not (grid > 0).all():
        raise ValueError("grid must be a nonempty sequence of positive values")
    base = base or SolverConfig(lam=0.0)

    if isinstance(estimator, Gls):
        op = build_whitener(estimator.rho)
        X, y = apply_whitener(op, X), apply_whitener(op, y)
    elif not isinstance(estimator, (Lasso, Fgls)):
        raise TypeError(f"unknown estimator {estimator!r}")

    # fit in decreasing order for warm starts, report in the caller's order
    order = np.argsort(-grid, kind="stable")
    lams_desc = grid[order]
    half = n // 2
    first, second = np.arange(half), np.arange(half, n)
    if isinstance(estimator, Fgls):
        e1 = _fgls_fold_errors(X, y, first, second, lams_desc, base)
        e2 = _fgls_fold_errors(X, y, second, first, lams_desc, base)
    else:
        e1 = _fold_errors(X[first], y[first], X[second], y[second], lams_desc, base)
        e2 = _fold_errors(X[second], y[second], X[first], y[first], lams_desc, base)
    mse_desc = 0.5 * (e1 + e2)
    mse = np.empty_like(mse_desc)
    mse[order] = mse_desc

    best = mse.min()
    ties = np.flatnonzero(mse == best)
    idx = int(ties[np.argmax(grid[ties])])
    return CvResult(lambda_grid=grid, validation_mse=mse, chosen_lambda=float(grid[idx]),
                    chosen_index=idx)


def oracle_holdout_lambda(train: SimulatedDataset, holdout: SimulatedDataset, grid,
                          base: SolverConfig | None = None) -> float:
    """Grid value whose LASSO fit on ``holdout`` is closest to ``beta0`` in l2.

    ``train`` only supplies the reference ``beta0``; the chosen level is then
    meant to be reused on ``train`` (and on any comparison arm).
    """
    if train.p != holdout.p:
        raise ValueError(f"datasets disagree on p: {train.p} vs {holdout.p}")
    if not np.array_equal(train.beta0, holdout.beta0):
        raise ValueError("datasets must share beta0")
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    base = base or SolverConfig(lam=0.0)
    order = np.argsort(-grid, kind="stable")
    betas = _path(holdout.X, holdout.y, grid[order], base)
    err = np.array([np.linalg.norm(b - holdout.beta0) for b in betas])
    k = int(np.argmin(err))
    return float(grid[order][k])
