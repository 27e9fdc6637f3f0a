"""AR(1) whitening filter and least-squares estimation of the AR coefficient."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RHO_CAP = 0.999


class DegenerateInputError(ValueError):
    """Input for which the requested quantity is undefined."""


@dataclass(frozen=True)
class WhiteningOperator:
    """Inverse of the AR(1) Cholesky factor.

    Lower bidiagonal with diagonal ``(first_scale, 1, ..., 1)`` and
    subdiagonal ``-rho``, where ``first_scale = sqrt(1 - rho^2)``.
    """

    rho: float
    first_scale: float

    def apply(self, v: np.ndarray) -> np.ndarray:
        return apply_whitener(self, v)

    def dense(self, n: int) -> np.ndarray:
        R = np.eye(n)
        R[0, 0] = self.first_scale
        idx = np.arange(1, n)
        R[idx, idx - 1] = -self.rho
        return R


def build_whitener(rho: float) -> WhiteningOperator:
    if not np.isfinite(rho) or abs(rho) >= 1.0:
        raise ValueError(f"rho must lie in (-1,1), got {rho}")
    return WhiteningOperator(rho=float(rho), first_scale=float(np.sqrt(1.0 - rho * rho)))


def apply_whitener(op: WhiteningOperator, v: np.ndarray) -> np.ndarray:
    """Filter ``v`` along its first axis in O(n); matrices are filtered column by column."""
    v = np.asarray(v, dtype=float)
    if v.ndim not in (1, 2) or v.shape[0] < 1:
        raise ValueError(f"expected a nonempty vector or matrix, got shape {v.shape}")
    if op.rho == 0.0:
        return v.copy()
    out = np.empty_like(v)
    out[0] = op.first_scale * v[0]
    out[1:] = v[1:] - op.rho * v[:-1]
    return out


def ar1_cholesky_factor(rho: float, n: int) -> np.ndarray:
    """Dense lower-triangular factor with ``eps = Psi @ u`` for a stationary AR(1).

    Column 0 is ``a * rho^i``; column ``j >= 1`` is ``rho^(i-j)`` below the diagonal.
    """
    if abs(rho) >= 1.0:
        raise ValueError(f"rho must lie in (-1,1), got {rho}")
    a = 1.0 / np.sqrt(1.0 - rho * rho)
    i, j = np.indices((n, n))
    lag = i - j
    Psi = np.where(lag >= 0, np.power(rho, np.maximum(lag, 0)), 0.0)
    Psi[:, 0] *= a
    return Psi


@dataclass(frozen=True)
class ArFitResult:
    rho_raw: float
    rho_used: float
    n_terms: int
    clamped: bool


def estimate_ar1(residuals: np.ndarray, rho_cap: float = RHO_CAP) -> ArFitResult:
    """Least-squares AR(1) coefficient ``sum e_{t-1} e_t / sum e_{t-1}^2``, clamped to ``+-rho_cap``."""
    e = np.asarray(residuals, dtype=float).ravel()
    if e.size < 2:
        raise ValueError("need at least two residuals")
    lagged, current = e[:-1], e[1:]
    den = float(lagged @ lagged)
    if den == 0.0:
        raise DegenerateInputError("all lagged residuals are zero; AR coefficient undefined")
    rho_raw = float(lagged @ current) / den
    clamped = abs(rho_raw) > rho_cap
    rho_used = float(np.clip(rho_raw, -rho_cap, rho_cap))
    return ArFitResult(rho_raw=rho_raw, rho_used=rho_used, n_terms=e.size - 1, clamped=clamped)


def residuals(y: np.ndarray, X: np.ndarray, beta: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or beta.ndim != 1:
        raise ValueError("expected y: (n,), X: (n, p), beta: (p,)")
    if X.shape != (y.size, beta.size):
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}, beta {beta.shape}")
    return y - X @ beta
