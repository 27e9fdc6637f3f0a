"""Synthetic sparse regressions with Gaussian design and AR(1) errors.

The data-generating process is

    y = X @ beta0 + eps,    eps_t = rho * eps_{t-1} + u_t,    u_t ~ N(0, sigma_u^2)

with rows of X drawn iid from N(0, Sigma).  All randomness flows through an
explicit ``numpy.random.Generator``; :func:`make_rng` builds one from a seed
or a :class:`numpy.random.SeedSequence`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """Counter-based Philox stream for ``seed``."""
    return np.random.Generator(np.random.Philox(seed))


def stationary_scale(rho: float) -> float:
    """``a = (1 - rho^2)^{-1/2}``, the stationary AR(1) standard deviation for unit innovations."""
    _check_rho(rho)
    return 1.0 / np.sqrt(1.0 - rho * rho)


def _check_rho(rho: float) -> None:
    if not np.isfinite(rho) or abs(rho) >= 1.0:
        raise ValueError(f"rho must lie in (-1,1), got {rho}")


@dataclass(frozen=True)
class DgpConfig:
    """Parameters of one simulated regression.

    ``init_var`` is the variance of the first error; ``None`` means the
    stationary value ``sigma_u^2 / (1 - rho^2)``.  ``design_diag`` gives a
    diagonal design covariance; ``None`` means the identity.
    """

    n: int
    p: int
    s: int
    rho: float = 0.0
    sigma_u: float = 1.0
    init_var: float | None = None
    design_diag: tuple[float, ...] | None = None
    beta_magnitude: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not 0 <= self.s <= self.p:
            raise ValueError(f"need 0 <= s <= p, got s={self.s}, p={self.p}")
        _check_rho(self.rho)
        if not self.sigma_u > 0:
            raise ValueError(f"sigma_u must be positive, got {self.sigma_u}")
        if self.init_var is not None and not self.init_var > 0:
            raise ValueError(f"init_var must be positive, got {self.init_var}")
        if self.design_diag is not None:
            if len(self.design_diag) != self.p:
                raise ValueError("design_diag must have length p")
            if min(self.design_diag) <= 0:
                raise ValueError("design_diag entries must be positive")
        if not self.beta_magnitude > 0:
            raise ValueError("beta_magnitude must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass
class SimulatedDataset:
    X: np.ndarray
    y: np.ndarray
    beta0: np.ndarray
    support: np.ndarray
    epsilon: np.ndarray
    u: np.ndarray
    config: DgpConfig | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def make_beta0(p: int, s: int, magnitude: float, rng: np.random.Generator):
    """Sparse coefficient vector with ``s`` entries equal to ``+-magnitude``.

    Positions are uniform without replacement, signs are independent fair
    coin flips.  Returns ``(beta0, support)`` with ``support`` sorted.
    """
    if not 0 <= s <= p:
        raise ValueError(f"need 0 <= s <= p, got s={s}, p={p}")
    beta0 = np.zeros(p)
    support = np.sort(rng.choice(p, size=s, replace=False)) if s else np.array([], dtype=np.int64)
    signs = 2.0 * rng.integers(0, 2, size=s) - 1.0
    beta0[support] = magnitude * signs
    return beta0, support.astype(np.int64)


def simulate_ar1_noise(n: int, rho: float, sigma_u: float, init_var: float | None,
                       rng: np.random.Generator):
    """AR(1) error series and its innovations.

    The first error is ``eps_1 = sd_1 * u_1 / sigma_u`` where ``sd_1^2`` is
    either the stationary variance or ``init_var``; under stationarity this is
    ``a * u_1``, matching the first column of the AR(1) Cholesky factor.
    """
    _check_rho(rho)
    if n < 1:
        raise ValueError("n must be >= 1")
    if not sigma_u > 0:
        raise ValueError("sigma_u must be positive")
    u = sigma_u * rng.standard_normal(n)
    if init_var is None:
        first = stationary_scale(rho) * u[0]
    else:
        first = np.sqrt(init_var) * u[0] / sigma_u
    drive = u.copy()
    drive[0] = first
    eps = lfilter([1.0], [1.0, -rho], drive)
    return eps, u


def simulate_dataset(config: DgpConfig) -> SimulatedDataset:
    """Draw one dataset; bit-identical for identical ``config`` (seed included)."""
    rng = make_rng(config.seed)
    return _simulate(config, rng)


def _simulate(config: DgpConfig, rng: np.random.Generator) -> SimulatedDataset:
    beta0, support = make_beta0(config.p, config.s, config.beta_magnitude, rng)
    X = rng.standard_normal((config.n, config.p))
    if config.design_diag is not None:
        X *= np.sqrt(np.asarray(config.design_diag, dtype=float))
    eps, u = simulate_ar1_noise(config.n, config.rho, config.sigma_u, config.init_var, rng)
    y = X @ beta0 + eps
    return SimulatedDataset(X=X, y=y, beta0=beta0, support=support, epsilon=eps, u=u,
                            config=config)


def sparsity_for(p: int) -> int:
    """Default sparsity rule ``s = floor(p / 10)``."""
    return p // 10
