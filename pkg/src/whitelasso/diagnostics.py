"""Error metrics, sign recovery, error-covariance growth, RE cone probe and bound evaluators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tuning import TheoryConstants, delta_from_log
from .whiten import build_whitener


@dataclass(frozen=True)
class ErrorReport:
    l1: float
    l2: float
    linf: float
    l2_scaled: float


def _pair(beta_est, beta0):
    a = np.asarray(beta_est, dtype=float).ravel()
    b = np.asarray(beta0, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    return a, b


def estimation_errors(beta_est, beta0) -> ErrorReport:
    a, b = _pair(beta_est, beta0)
    d = a - b
    l2 = float(np.linalg.norm(d))
    return ErrorReport(l1=float(np.abs(d).sum()), l2=l2,
                       linf=float(np.abs(d).max()) if d.size else 0.0,
                       l2_scaled=l2 / math.sqrt(d.size))


def sign_recovered(beta_est, beta0) -> bool:
    """Exact agreement of signs in every coordinate, with sign(0) = 0."""
    a, b = _pair(beta_est, beta0)
    return bool(np.array_equal(np.sign(a), np.sign(b)))


def error_variances(n: int, rho: float, sigma_u: float = 1.0,
                    init_var: float | None = None) -> np.ndarray:
    """``Var[eps_t]`` for t = 1..n from ``V_t = rho^2 V_{t-1} + sigma_u^2``."""
    if not abs(rho) < 1:
        raise ValueError(f"rho must lie in (-1,1), got {rho}")
    if n < 1:
        raise ValueError("n must be >= 1")
    stationary = sigma_u**2 / (1.0 - rho * rho)
    v = np.empty(n)
    v[0] = stationary if init_var is None else init_var
    if init_var is None:
        # exact fixed point; the recursion would only reproduce it up to round-off
        v[:] = stationary
        return v
    r2, s2 = rho * rho, sigma_u**2
    for t in range(1, n):
        v[t] = r2 * v[t - 1] + s2
    return v


def psi_frobenius_growth(n: int, rho: float, sigma_u: float = 1.0,
                         init_var: float | None = None) -> np.ndarray:
    """Cumulative sums ``F_t = sum_{k <= t} Var[eps_k]``, i.e. the squared Frobenius
    norm of the leading t x t block of the error Cholesky factor (times sigma_u^2)."""
    return np.cumsum(error_variances(n, rho, sigma_u, init_var))


@dataclass
class ReProbe:
    alpha: float
    support: np.ndarray
    num_samples: int
    min_ratio: float
    ratios: np.ndarray = field(repr=False)


def sample_cone(p: int, support, alpha: float, num_samples: int,
                rng: np.random.Generator) -> np.ndarray:
    """Random vectors ``v`` with ``||v_off||_1 <= alpha ||v_S||_1``, one per row."""
    support = np.asarray(support, dtype=np.int64)
    off = np.setdiff1d(np.arange(p), support)
    V = np.zeros((num_samples, p))
    on_part = rng.standard_normal((num_samples, support.size))
    V[:, support] = on_part
    if off.size:
        direction = rng.standard_normal((num_samples, off.size))
        frac = rng.uniform(size=num_samples)
        budget = alpha * frac * np.abs(on_part).sum(axis=1)
        norm1 = np.abs(direction).sum(axis=1)
        V[:, off] = direction * (budget / norm1)[:, None]
    return V


def re_cone_probe(X: np.ndarray, support, alpha: float, num_samples: int,
                  rng: np.random.Generator) -> ReProbe:
    """Sampled upper estimate of the restricted-eigenvalue constant over the cone.

    Not a certificate: the true constant is a minimum over the whole cone and
    can only be smaller than what sampling finds.
    """
    support = np.unique(np.asarray(support, dtype=np.int64))
    if support.size == 0:
        raise ValueError("support must be nonempty")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    V = sample_cone(p, support, alpha, num_samples, rng)
    XV = V @ X.T
    ratios = (XV * XV).sum(axis=1) / (n * (V * V).sum(axis=1))
    return ReProbe(alpha=alpha, support=support, num_samples=num_samples,
                   min_ratio=float(ratios.min()), ratios=ratios)


def whitener_norm(rho: float, n: int) -> float:
    """Spectral norm of the dense n x n whitening matrix."""
    return float(np.linalg.norm(build_whitener(rho).dense(n), 2))


def kappa_footnote(eta_min: float, sigma_max: float, alpha: float, n: float, p: float,
                   s: int) -> float:
    """``eta_min^2 / 4 - 9 sigma_max^2 (log p / n) (1 + alpha)^2 s``; may be negative."""
    return eta_min**2 / 4.0 - 9.0 * sigma_max**2 * math.log(p) / n * (1 + alpha) ** 2 * s


@dataclass(frozen=True)
class BoundReport:
    """A numerically evaluated bound.  ``value is None`` marks a vacuous bound
    (non-positive curvature constant)."""

    name: str
    inputs: dict
    value: float | None

    @property
    def vacuous(self) -> bool:
        return self.value is None


def _prop1(K, c, tau, kappa, n, p, s, rho):
    if kappa <= 0:
        return None
    return 12.0 * K / (math.sqrt(c) * kappa) * delta_from_log((1 - rho * rho) * n,
                                                               s * tau * math.log(p))


def _thm1(lambda_t, kappa_t, s_size, tail_l1, sigma_max, n, p):
    if kappa_t <= 0:
        return None
    d2 = math.log(p) / n
    return (27.0 * s_size * lambda_t**2 / (8.0 * kappa_t**2)
            + lambda_t * tail_l1 / kappa_t
            + 144.0 / kappa_t * sigma_max**2 * d2 * tail_l1**2)


def _prop3(C, tau, n, p, s):
    return C * delta_from_log(n, s * tau * math.log(p))


def _cor3(c, C, tau, eta_min, n, p, s, rho):
    shrink = rho * rho / (1 - rho * rho) * C * math.sqrt(s * tau * math.log(p) / n)
    return (2.0**7 / (math.sqrt(c) * eta_min**2) * math.sqrt(2.0 / 3.0) * (1 + shrink)
            * delta_from_log(n, s * tau * math.log(p)))


_FORMULAS = {"Prop1Lasso": _prop1, "Thm1Oracle": _thm1, "Prop3ArRelError": _prop3,
             "Cor3Fgls": _cor3}


def recompute(report: BoundReport) -> float | None:
    return _FORMULAS[report.name](**report.inputs)


def _check_rho(rho):
    if not abs(rho) < 1:
        raise ValueError(f"rho must lie in (-1,1), got {rho}")


def bound_prop1(consts: TheoryConstants, kappa: float, n: float, p: float, s: int,
                rho: float) -> BoundReport:
    """LASSO l2 error bound under AR(1) errors: ``12K/(sqrt(c) kappa) * delta(n/a^2, p^(s tau))``."""
    _check_rho(rho)
    if s < 1:
        raise ValueError("s must be >= 1")
    inputs = dict(K=consts.K, c=consts.c, tau=consts.tau, kappa=kappa, n=n, p=p, s=s, rho=rho)
    return BoundReport("Prop1Lasso", inputs, _prop1(**inputs))


def bound_thm1(lambda_t: float, kappa_t: float, s_size: int, tail_l1: float,
               sigma_max: float, n: float, p: float) -> BoundReport:
    """Squared-l2 oracle inequality for GLS-LASSO (three-term right-hand side)."""
    if not (lambda_t > 0 and sigma_max > 0 and n > 0 and p > 1):
        raise ValueError("lambda_t, sigma_max, n must be positive and p > 1")
    if s_size < 0 or tail_l1 < 0:
        raise ValueError("s_size and tail_l1 must be non-negative")
    inputs = dict(lambda_t=lambda_t, kappa_t=kappa_t, s_size=s_size, tail_l1=tail_l1,
                  sigma_max=sigma_max, n=n, p=p)
    return BoundReport("Thm1Oracle", inputs, _thm1(**inputs))


def bound_prop3(consts: TheoryConstants, n: float, p: float, s: int) -> BoundReport:
    """Relative error bound for the AR coefficient: ``C * delta(n, p^(s tau))``."""
    if s < 1:
        raise ValueError("s must be >= 1")
    inputs = dict(C=consts.C_prop3, tau=consts.tau, n=n, p=p, s=s)
    return BoundReport("Prop3ArRelError", inputs, _prop3(**inputs))


def bound_cor3(consts: TheoryConstants, eta_min: float, n: float, p: float, s: int,
               rho: float) -> BoundReport:
    """FGLS l2 error bound with its vanishing inflation term."""
    _check_rho(rho)
    if not eta_min > 0 or s < 1:
        raise ValueError("eta_min must be positive and s >= 1")
    inputs = dict(c=consts.c, C=consts.C_prop3, tau=consts.tau, eta_min=eta_min, n=n, p=p,
                  s=s, rho=rho)
    return BoundReport("Cor3Fgls", inputs, _cor3(**inputs))
