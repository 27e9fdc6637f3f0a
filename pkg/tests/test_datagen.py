import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whitelasso.datagen import (DgpConfig, make_beta0, make_rng, simulate_ar1_noise,
                                simulate_dataset, sparsity_for)


def test_beta0_zero_sparsity():
    beta, support = make_beta0(4, 0, 1.0, make_rng(0))
    assert np.all(beta == 0)
    assert support.size == 0


def test_beta0_forced_support():
    beta, support = make_beta0(1, 1, 1.0, make_rng(0))
    assert list(support) == [0]
    assert abs(beta[0]) == 1.0


def test_beta0_p100_has_ten_nonzeros():
    beta, support = make_beta0(100, sparsity_for(100), 1.0, make_rng(1))
    assert np.count_nonzero(beta) == 10
    assert set(np.flatnonzero(beta)) == set(support)
    assert set(np.abs(beta[support])) == {1.0}


def test_beta0_rejects_s_above_p():
    with pytest.raises(ValueError):
        make_beta0(3, 4, 1.0, make_rng(0))


def test_beta0_signs_both_appear():
    beta, _ = make_beta0(1000, 500, 2.0, make_rng(2))
    nz = beta[beta != 0]
    assert set(nz) == {-2.0, 2.0}
    assert 200 < (nz > 0).sum() < 300


def test_noise_rho_zero_is_innovations():
    eps, u = simulate_ar1_noise(50, 0.0, 1.3, None, make_rng(3))
    np.testing.assert_array_equal(eps, u)


def test_noise_recursion_holds():
    eps, u = simulate_ar1_noise(200, 0.7, 1.0, None, make_rng(4))
    np.testing.assert_allclose(eps[1:], 0.7 * eps[:-1] + u[1:], atol=1e-12)
    np.testing.assert_allclose(eps[0], u[0] / np.sqrt(1 - 0.49))


@pytest.mark.parametrize("rho", [1.0, -1.0, 1.5])
def test_noise_rejects_unit_root(rho):
    with pytest.raises(ValueError):
        simulate_ar1_noise(10, rho, 1.0, None, make_rng(0))


def _variance_profile(n, rho, init_var, reps, seed):
    rng = make_rng(seed)
    draws = np.array([simulate_ar1_noise(n, rho, 1.0, init_var, rng)[0] for _ in range(reps)])
    return draws.var(axis=0)


def test_stationary_variance_constant_in_t():
    # 20 000 series x 50 steps = 10^6 draws; pooled variance within 1%
    v = _variance_profile(50, 0.5, None, 20_000, 5)
    target = 1 / 0.75
    assert abs(v.mean() / target - 1) < 0.01
    # per-t variance stays flat (each t has 2e4 draws: sd of estimate ~1%)
    assert np.all(np.abs(v / target - 1) < 0.05)


def test_fixed_initial_variance_follows_recursion():
    n = 30
    v = _variance_profile(n, 0.9, 1.0, 40_000, 6)
    t = np.arange(1, n + 1)
    expected = 0.81 ** (t - 1) + (1 - 0.81 ** (t - 1)) / 0.19
    # recursion oracle, independent of the closed form above
    rec = np.empty(n)
    rec[0] = 1.0
    for k in range(1, n):
        rec[k] = 0.81 * rec[k - 1] + 1.0
    np.testing.assert_allclose(rec, expected, rtol=1e-12)
    np.testing.assert_allclose(v, expected, rtol=0.04)
    assert np.all(np.diff(expected) > 0)


def test_lag_one_autocorrelation_long_run():
    for rho in (0.0, 0.5, 0.9):
        eps, _ = simulate_ar1_noise(100_000, rho, 1.0, None, make_rng(7))
        e = eps - eps.mean()
        r1 = (e[1:] @ e[:-1]) / (e @ e)
        assert abs(r1 - rho) < 0.01


def test_zero_signal_dataset():
    d = simulate_dataset(DgpConfig(n=2, p=1, s=0, rho=0.3, seed=1))
    np.testing.assert_array_equal(d.y, d.epsilon)


def test_dataset_is_deterministic():
    cfg = DgpConfig(n=40, p=12, s=3, rho=0.9, seed=2**63 + 5)
    a, b = simulate_dataset(cfg), simulate_dataset(cfg)
    for field in ("X", "y", "beta0", "support", "epsilon", "u"):
        np.testing.assert_array_equal(getattr(a, field), getattr(b, field))


def test_design_covariance_identity():
    d = simulate_dataset(DgpConfig(n=10_000, p=2, s=0, seed=3))
    cov = np.cov(d.X, rowvar=False)
    np.testing.assert_allclose(cov, np.eye(2), atol=0.05)


def test_design_covariance_diagonal():
    d = simulate_dataset(DgpConfig(n=20_000, p=2, s=0, design_diag=(1.0, 4.0), seed=3))
    np.testing.assert_allclose(d.X.var(axis=0), [1.0, 4.0], rtol=0.05)


@pytest.mark.parametrize("kwargs", [
    dict(n=1, p=2, s=0), dict(n=5, p=2, s=3), dict(n=5, p=2, s=1, rho=1.0),
    dict(n=5, p=2, s=1, sigma_u=0.0), dict(n=5, p=2, s=1, seed=-1),
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        DgpConfig(**kwargs)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 60), p=st.integers(1, 20), rho=st.floats(-0.99, 0.99),
       seed=st.integers(0, 2**64 - 1), data=st.data())
def test_dataset_invariants(n, p, rho, seed, data):
    s = data.draw(st.integers(0, p))
    d = simulate_dataset(DgpConfig(n=n, p=p, s=s, rho=rho, seed=seed))
    assert np.max(np.abs(d.y - d.X @ d.beta0 - d.epsilon)) <= 1e-10 * (1 + np.abs(d.y).max())
    assert d.support.size == s
    off = np.setdiff1d(np.arange(p), d.support)
    assert np.all(d.beta0[off] == 0)
    np.testing.assert_allclose(d.epsilon[1:], rho * d.epsilon[:-1] + d.u[1:], atol=1e-10)
