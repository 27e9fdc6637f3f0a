"""Cyclic coordinate descent for the LASSO and its AR(1)-whitened variants.

All three estimators minimise

    (1 / 2n) * ||y - X beta||^2 + lam * ||beta||_1

on either the raw data (LASSO) or data premultiplied by the AR(1) whitening
filter (GLS with known rho, FGLS with rho estimated from first-stage
residuals).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numba
import numpy as np

from .whiten import ArFitResult, apply_whitener, build_whitener, estimate_ar1, residuals

# Relative to n: below this the stage-1 residual energy is treated as zero.
DEGENERATE_RESID = 1e-12
# Active-set coordinate passes attempted before each Newton step.
ACTIVE_PASSES = 5
# Active-set passes when a Newton step is unavailable.
STALL_PASSES = 200
NEWTON_ROUNDS = 100


@dataclass(frozen=True)
class SolverConfig:
    lam: float
    tol: float = 1e-7
    max_sweeps: int = 10_000
    warm_start: np.ndarray | None = None
    standardize: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lambda must be a finite non-negative number, got {self.lam}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")


@dataclass
class LassoFit:
    beta: np.ndarray
    sweeps: int
    converged: bool
    objective: float
    kkt_violation: float
    lam: float


@dataclass(frozen=True)
class Lasso:
    name = "lasso"


@dataclass(frozen=True)
class Gls:
    rho: float
    name = "gls"

    def __post_init__(self):
        if not abs(self.rho) < 1:
            raise ValueError(f"rho must lie in (-1,1), got {self.rho}")


@dataclass(frozen=True)
class Fgls:
    name = "fgls"


EstimatorKind = Lasso | Gls | Fgls


def soft_threshold(z, t):
    """``sign(z) * max(|z| - t, 0)``; works on scalars and arrays."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("threshold must be non-negative")
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


@numba.njit(cache=True, nogil=True)
def _coord_pass(X, r, beta, col_sq, lam, n, active_only):
    # one cyclic pass; returns the largest absolute coefficient change
    p = X.shape[1]
    max_delta = 0.0
    for j in range(p):
        bj = beta[j]
        if active_only and bj == 0.0:
            continue
        cj = col_sq[j]
        if cj == 0.0:
            beta[j] = 0.0
            continue
        g = 0.0
        for i in range(n):
            g += X[i, j] * r[i]
        z = bj * cj + g / n
        if z > lam:
            new = (z - lam) / cj
        elif z < -lam:
            new = (z + lam) / cj
        else:
            new = 0.0
        d = new - bj
        if d != 0.0:
            for i in range(n):
                r[i] -= d * X[i, j]
            beta[j] = new
            if abs(d) > max_delta:
                max_delta = abs(d)
    return max_delta


@numba.njit(cache=True, nogil=True)
def _active_passes(X, r, beta, col_sq, lam, tol, max_passes):
    n = X.shape[0]
    delta = 0.0
    for k in range(max_passes):
        delta = _coord_pass(X, r, beta, col_sq, lam, n, True)
        if delta < tol:
            return k + 1, delta
    return max_passes, delta


# outcomes of a Newton step
FAILED, PARTIAL, FULL = 0, 1, 2


def _truncated(old, d, t_max):
    # largest t <= t_max keeping old + t*d in the closed orthant of old
    toward_zero = np.flatnonzero(old * d < 0)
    t, hit = t_max, -1
    if toward_zero.size:
        ratios = -old[toward_zero] / d[toward_zero]
        k = int(np.argmin(ratios))
        if ratios[k] < t_max:
            t, hit = float(ratios[k]), int(toward_zero[k])
    if not np.isfinite(t):
        return None, FAILED
    new = old + t * d
    if hit >= 0:
        new[hit] = 0.0
        return new, PARTIAL
    return new, FULL


def _orthant_step(GA, grad, old):
    """Newton step for ``0.5 b'GA b + grad'(b - old)`` restricted to the orthant of ``old``.

    Truncated where the first coordinate reaches zero.  Returns the new point
    (or None) and the status.
    """
    try:
        d = -np.linalg.solve(GA, grad)
    except np.linalg.LinAlgError:
        return None, FAILED
    if not np.isfinite(d).all():
        return None, FAILED
    return _truncated(old, d, 1.0)


def _singular_step(GA, grad, old):
    """Fallback when ``GA`` is (numerically) singular, e.g. more active
    coordinates than rows.

    If the gradient has a component in the null space of ``GA`` the restricted
    objective falls linearly along it, so follow that ray to the first zero
    crossing.  Otherwise take the minimum-norm Newton step.
    """
    w, V = np.linalg.eigh(GA)
    keep = w > 1e-10 * max(w[-1], 1e-300)
    coef = V.T @ grad
    g_null = V[:, ~keep] @ coef[~keep]
    if np.linalg.norm(g_null) > 1e-12 * (1.0 + np.linalg.norm(grad)):
        return _truncated(old, -g_null, np.inf)
    return _truncated(old, -(V[:, keep] @ (coef[keep] / w[keep])), 1.0)


def _restricted_objective(GA, cA, b, lam):
    # 0.5 b'GA b - cA'b + lam |b|_1, equal to the objective up to a constant
    return 0.5 * b @ (GA @ b) - cA @ b + lam * np.abs(b).sum()


def _best_step(GA, cA, old, lam):
    """Orthant-restricted Newton step, falling back to the singular variant.

    Returns the accepted point (strict decrease) or None, and the status.
    """
    grad = GA @ old - cA + lam * np.sign(old)
    before = _restricted_objective(GA, cA, old, lam)
    for step in (_orthant_step, _singular_step):
        new, status = step(GA, grad, old)
        if new is not None and _restricted_objective(GA, cA, new, lam) < before:
            return new, status
    return None, FAILED


def _newton_step(X, y, r, beta, lam):
    """Jump toward the minimiser of the objective restricted to the current orthant.

    On the orthant fixed by the signs of the active coordinates the objective
    is a convex quadratic, so moving toward its minimiser, stopping where the
    first coordinate reaches zero, cannot increase the objective.  Returns
    FULL when the minimiser was reached, PARTIAL when a coordinate was zeroed
    on the way, FAILED when no step was taken.
    """
    A = np.flatnonzero(beta)
    n = X.shape[0]
    if A.size == 0:
        return FAILED
    XA = X[:, A]
    old = beta[A]
    new, status = _best_step(XA.T @ XA / n, XA.T @ y / n, old, lam)
    if new is None:
        return FAILED
    beta[A] = new
    r[:] = y - XA @ new
    return status


def _descend(X, y, r, beta, col_sq, lam, tol, max_sweeps):
    # Full cyclic sweeps; between them, a few passes over the active set and
    # Newton steps on the active block.  Convergence is only declared after a
    # full sweep moving no coefficient by more than tol.
    n = X.shape[0]

    def active(passes):
        return _active_passes(X, r, beta, col_sq, lam, tol, passes)[1]

    def newton():
        return _newton_step(X, y, r, beta, lam)

    return _outer_loop(lambda: _coord_pass(X, r, beta, col_sq, lam, n, False), active, newton,
                       tol, max_sweeps)


def _outer_loop(full_sweep, active, newton, tol, max_sweeps):
    sweeps = 0
    while sweeps < max_sweeps:
        delta = full_sweep()
        sweeps += 1
        if delta < tol:
            return sweeps, True
        if sweeps >= max_sweeps:
            break
        for _ in range(NEWTON_ROUNDS):
            if active(ACTIVE_PASSES) < tol:
                break
            status = newton()
            while status == PARTIAL:
                status = newton()
            if status == FAILED:
                active(STALL_PASSES)
                break
    return sweeps, False


@numba.njit(cache=True, nogil=True)
def _gram_pass(G, c, q, beta, lam, idx):
    # coordinate pass in covariance form over the indices ``idx``; q = G @ beta
    # is kept current on ``idx`` only
    m = idx.size
    max_delta = 0.0
    for a in range(m):
        j = idx[a]
        gjj = G[j, j]
        bj = beta[j]
        if gjj == 0.0:
            beta[j] = 0.0
            continue
        z = c[j] - q[j] + gjj * bj
        if z > lam:
            new = (z - lam) / gjj
        elif z < -lam:
            new = (z + lam) / gjj
        else:
            new = 0.0
        d = new - bj
        if d != 0.0:
            for b in range(m):
                k = idx[b]
                q[k] += d * G[j, k]
            beta[j] = new
            if abs(d) > max_delta:
                max_delta = abs(d)
    return max_delta


@numba.njit(cache=True, nogil=True)
def _gram_active(G, c, q, beta, lam, tol, max_passes):
    idx = np.flatnonzero(beta)
    delta = 0.0
    for _ in range(max_passes):
        delta = _gram_pass(G, c, q, beta, lam, idx)
        if delta < tol:
            break
    return delta


def _gram_newton(G, c, beta, lam, n):
    # same orthant-restricted step as _newton_step, in covariance form
    A = np.flatnonzero(beta)
    if A.size == 0:
        return FAILED
    new, status = _best_step(G[np.ix_(A, A)], c[A], beta[A], lam)
    if new is None:
        return FAILED
    beta[A] = new
    return status


def _gram_descend(G, c, beta, lam, tol, max_sweeps, n):
    everything = np.arange(beta.size)

    def full_sweep():
        return _gram_pass(G, c, G @ beta, beta, lam, everything)

    def active(passes):
        return _gram_active(G, c, G @ beta, beta, lam, tol, passes)

    def newton():
        return _gram_newton(G, c, beta, lam, n)

    return _outer_loop(full_sweep, active, newton, tol, max_sweeps)


def lasso_path(X: np.ndarray, y: np.ndarray, lams, config: SolverConfig | None = None):
    """Warm-started LASSO fits along ``lams`` (in the given order).

    Works in covariance form: the Gram matrix is formed once, after which a
    coordinate update costs O(p) instead of O(n).  Update rule, stopping rule
    and certificates are those of :func:`fit_lasso`.
    """
    X, y = _check_inputs(X, y)
    config = config or SolverConfig(lam=0.0)
    n, p = X.shape
    G = X.T @ X / n
    c = X.T @ y / n
    top = lambda_max(X, y)
    beta = np.zeros(p) if config.warm_start is None else np.array(config.warm_start, dtype=float)
    fits = []
    for lam in lams:
        lam = float(lam)
        if not (np.isfinite(lam) and lam >= 0):
            raise ValueError(f"lambda must be a finite non-negative number, got {lam}")
        if lam >= top:
            # exact zero solution; skips rounding noise from the kernel
            beta[:] = 0.0
            sweeps, converged = 0, True
        else:
            sweeps, converged = _gram_descend(G, c, beta, lam, float(config.tol),
                                              int(config.max_sweeps), n)
        b = beta.copy()
        fits.append(LassoFit(beta=b, sweeps=int(sweeps), converged=bool(converged),
                             objective=lasso_objective(X, y, b, lam),
                             kkt_violation=kkt_violation(X, y, b, lam), lam=lam))
    return fits


def lasso_objective(X: np.ndarray, y: np.ndarray, beta: np.ndarray, lam: float) -> float:
    r = y - X @ beta
    return float(r @ r) / (2 * X.shape[0]) + lam * float(np.abs(beta).sum())


def kkt_violation(X: np.ndarray, y: np.ndarray, beta: np.ndarray, lam: float) -> float:
    """Largest stationarity residual of the LASSO subgradient conditions."""
    g = X.T @ (y - X @ beta) / X.shape[0]
    on = beta != 0
    viol = np.where(on, np.abs(g - lam * np.sign(beta)), np.maximum(np.abs(g) - lam, 0.0))
    return float(viol.max()) if viol.size else 0.0


def lambda_max(X: np.ndarray, y: np.ndarray) -> float:
    """Smallest lambda at which the LASSO solution is exactly zero."""
    return float(np.abs(X.T @ y).max()) / X.shape[0]


def _check_inputs(X, y):
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
        raise ValueError(f"expected X (n, p) and y (n,), got {X.shape} and {y.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError("need n >= 1 and p >= 1")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("X and y must be finite")
    return X, y


def fit_lasso(X: np.ndarray, y: np.ndarray, config: SolverConfig) -> LassoFit:
    """Coordinate-descent LASSO fit with residual maintenance.

    Non-convergence within ``config.max_sweeps`` is reported through
    ``converged=False``, not raised.
    """
    X, y = _check_inputs(X, y)
    n, p = X.shape
    scale = None
    if config.standardize:
        scale = np.sqrt((X * X).mean(axis=0))
        scale[scale == 0] = 1.0
        X = np.ascontiguousarray(X / scale)
    col_sq = (X * X).sum(axis=0) / n
    if config.warm_start is not None:
        beta = np.array(config.warm_start, dtype=float)
        if beta.shape != (p,):
            raise ValueError(f"warm_start must have shape ({p},)")
        if scale is not None:
            beta *= scale
        beta[col_sq == 0] = 0.0
    else:
        beta = np.zeros(p)
    r = y - X @ beta
    # Fortran order makes column access contiguous inside the kernel
    Xf = np.asfortranarray(X)
    if config.lam >= lambda_max(X, y):
        beta[:] = 0.0
        sweeps, converged = 0, True
    else:
        sweeps, converged = _descend(Xf, y, r, beta, col_sq, float(config.lam),
                                     float(config.tol), int(config.max_sweeps))
    if scale is not None:
        beta = beta / scale
        X = X * scale
    return LassoFit(
        beta=beta,
        sweeps=int(sweeps),
        converged=bool(converged),
        objective=lasso_objective(X, y, beta, config.lam),
        kkt_violation=kkt_violation(X, y, beta, config.lam),
        lam=float(config.lam),
    )


def fit_gls_lasso(X: np.ndarray, y: np.ndarray, rho: float, config: SolverConfig) -> LassoFit:
    """LASSO on data whitened by the AR(1) filter with coefficient ``rho``."""
    op = build_whitener(rho)
    X, y = _check_inputs(X, y)
    return fit_lasso(apply_whitener(op, X), apply_whitener(op, y), config)


def rho_from_residuals(resid: np.ndarray) -> ArFitResult:
    """AR(1) estimate with the identity fallback for (near-)zero residual energy."""
    lagged = resid[:-1]
    if float(lagged @ lagged) < DEGENERATE_RESID * resid.size:
        return ArFitResult(rho_raw=0.0, rho_used=0.0, n_terms=resid.size - 1, clamped=False)
    return estimate_ar1(resid)


def fit_fgls_lasso(X: np.ndarray, y: np.ndarray, stage1_config: SolverConfig,
                   stage2_config: SolverConfig) -> tuple[LassoFit, ArFitResult]:
    """Two-stage feasible GLS: LASSO, AR(1) fit on its residuals, then GLS-LASSO."""
    X, y = _check_inputs(X, y)
    if X.shape[0] < 2:
        raise ValueError("FGLS needs n >= 2")
    first = fit_lasso(X, y, stage1_config)
    ar = rho_from_residuals(residuals(y, X, first.beta))
    return fit_gls_lasso(X, y, ar.rho_used, stage2_config), ar


def with_warm_start(config: SolverConfig, beta: np.ndarray | None) -> SolverConfig:
    return replace(config, warm_start=beta)
