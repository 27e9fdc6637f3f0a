import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from whitelasso.datagen import DgpConfig, make_rng, simulate_dataset
from whitelasso.solver import Fgls, Gls, Lasso, SolverConfig, fit_lasso, lambda_max
from whitelasso.tuning import (TheoryConstants, cv_two_fold, default_grid, delta_scaling,
                               fgls_inflation, lambda_fgls_theoretical, lambda_lasso_theoretical,
                               oracle_holdout_lambda)
from whitelasso.whiten import DegenerateInputError


def test_delta_examples():
    assert delta_scaling(100, math.e) == pytest.approx(0.1, rel=1e-14)
    assert delta_scaling(25, math.e**4) == pytest.approx(0.4, rel=1e-14)
    assert delta_scaling(200, 7.0) == pytest.approx(delta_scaling(100, 7.0) / math.sqrt(2))


@given(st.floats(1e-3, 1e6), st.floats(1.0001, 1e12))
def test_delta_squared_times_n_is_log_r(n, r):
    assert delta_scaling(n, r) ** 2 * n == pytest.approx(math.log(r), rel=1e-12)


@pytest.mark.parametrize("r", [1.0, 0.5])
def test_delta_rejects_small_r(r):
    with pytest.raises(ValueError):
        delta_scaling(10, r)


def test_theory_constants_validation():
    TheoryConstants(tau=1.0)
    with pytest.raises(ValueError):
        TheoryConstants(tau=0.5)
    with pytest.raises(ValueError):
        TheoryConstants(K=0.0)
    c = TheoryConstants.with_kappa(2.0, sigma_u=1.0)
    assert c.C_prop3 == pytest.approx(math.sqrt(30) * 8 / math.sqrt(2.0))


def test_lambda_lasso_examples():
    k = TheoryConstants(K=1, c=1, tau=2)
    assert lambda_lasso_theoretical(k, 100, math.e, 0.0) == pytest.approx(0.5656854, abs=1e-7)
    ratio = lambda_lasso_theoretical(k, 100, 50, 0.99) / lambda_lasso_theoretical(k, 100, 50, 0.0)
    assert ratio == pytest.approx(7.0888, abs=1e-4)
    assert ratio == pytest.approx((1 - 0.99**2) ** -0.5, rel=1e-12)


def test_lambda_lasso_monotone():
    k = TheoryConstants()
    rhos = [0.0, 0.3, 0.6, 0.9, 0.99]
    vals = [lambda_lasso_theoretical(k, 200, 128, r) for r in rhos]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert lambda_lasso_theoretical(k, 200, 128, -0.9) == vals[3]
    ns = [lambda_lasso_theoretical(k, n, 128, 0.5) for n in (50, 100, 500)]
    assert ns[0] > ns[1] > ns[2]


def test_lambda_fgls_examples():
    k = TheoryConstants(c=1, C_prop3=1, tau=1)
    # inner delta = sqrt(1/75); value = 4 * sqrt(1 + 0.25 * inner) * 0.1
    inner = math.sqrt(1 / 75)
    expected = 4 * math.sqrt(1 + 0.25 * inner) * 0.1
    assert lambda_fgls_theoretical(k, 100, math.e, 1, 0.5) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.4057, abs=1e-4)
    assert lambda_fgls_theoretical(k, 100, math.e, 1, 0.0) == pytest.approx(0.4, rel=1e-14)


def test_lambda_fgls_ignores_K():
    a = lambda_fgls_theoretical(TheoryConstants(K=1.0), 100, 50, 2, 0.5)
    b = lambda_fgls_theoretical(TheoryConstants(K=7.0), 100, 50, 2, 0.5)
    assert a == b


def test_inflation_decreases_to_one():
    k = TheoryConstants(C_prop3=5.0)
    vals = [fgls_inflation(k, n, 128, 12, 0.9) for n in np.geomspace(50, 1e9, 30)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] - 1 < 1e-2 and vals[-1] > 1


def test_default_grid():
    rng = make_rng(0)
    X, y = rng.standard_normal((30, 5)), rng.standard_normal(30)
    top = lambda_max(X, y)
    g2 = default_grid(X, y, 2)
    assert g2[0] == top and g2[1] == pytest.approx(1e-3 * top, rel=1e-12)
    g = default_grid(X, y)
    assert g.size == 50 and np.all(np.diff(g) < 0)
    np.testing.assert_allclose(g[1:] / g[:-1], g[1] / g[0], rtol=1e-10)
    assert np.all(fit_lasso(X, y, SolverConfig(lam=g[0])).beta == 0)


def test_default_grid_errors():
    X = np.array([[1.0], [1.0]])
    with pytest.raises(DegenerateInputError):
        default_grid(X, np.array([1.0, -1.0]), 5)
    with pytest.raises(ValueError):
        default_grid(X, np.array([1.0, 2.0]), 1)


def test_cv_single_grid_point():
    d = simulate_dataset(DgpConfig(n=40, p=10, s=1, seed=1))
    res = cv_two_fold(d.X, d.y, Lasso(), [0.3])
    assert res.chosen_index == 0 and res.chosen_lambda == 0.3


def test_cv_rejects_short_series():
    with pytest.raises(ValueError):
        cv_two_fold(np.ones((3, 1)), np.ones(3), Lasso(), [0.1])


def test_cv_pure_noise_prefers_null_model():
    wins = 0
    for seed in range(200):
        d = simulate_dataset(DgpConfig(n=40, p=20, s=0, seed=seed))
        top = lambda_max(d.X, d.y)
        res = cv_two_fold(d.X, d.y, Lasso(), [top, 1e-3 * top])
        wins += res.chosen_lambda == top
    assert wins > 100


def test_cv_noiseless_error_falls_along_top_of_grid():
    d = simulate_dataset(DgpConfig(n=100, p=20, s=2, sigma_u=1e-9, seed=2))
    grid = default_grid(d.X, d.y, 50)
    res = cv_two_fold(d.X, d.y, Lasso(), grid)
    top = res.validation_mse[:20]
    assert np.all(np.diff(top) <= 1e-15)
    assert res.chosen_lambda < grid[20]


def test_cv_tie_goes_to_larger_lambda():
    d = simulate_dataset(DgpConfig(n=40, p=5, s=1, seed=3))
    top = lambda_max(d.X, d.y)
    # both values zero out the fit on each half, so the errors tie
    res = cv_two_fold(d.X, d.y, Lasso(), [50 * top, 100 * top])
    assert res.validation_mse[0] == res.validation_mse[1]
    assert res.chosen_lambda == 100 * top and res.chosen_index == 1


@pytest.mark.parametrize("estimator", [Lasso(), Gls(0.7), Fgls()])
def test_cv_grid_permutation_invariance(estimator):
    d = simulate_dataset(DgpConfig(n=60, p=15, s=2, rho=0.7, seed=4))
    grid = default_grid(d.X, d.y, 12)
    a = cv_two_fold(d.X, d.y, estimator, grid)
    perm = make_rng(5).permutation(grid.size)
    b = cv_two_fold(d.X, d.y, estimator, grid[perm])
    assert a.chosen_lambda == b.chosen_lambda
    assert b.lambda_grid[b.chosen_index] == b.chosen_lambda
    np.testing.assert_allclose(b.validation_mse, a.validation_mse[perm], rtol=1e-6)


def test_cv_deterministic():
    d = simulate_dataset(DgpConfig(n=60, p=15, s=2, rho=0.5, seed=6))
    grid = default_grid(d.X, d.y, 10)
    a, b = cv_two_fold(d.X, d.y, Fgls(), grid), cv_two_fold(d.X, d.y, Fgls(), grid)
    np.testing.assert_array_equal(a.validation_mse, b.validation_mse)


def test_cv_gls_zero_matches_lasso():
    d = simulate_dataset(DgpConfig(n=60, p=15, s=2, seed=7))
    grid = default_grid(d.X, d.y, 10)
    a, b = cv_two_fold(d.X, d.y, Lasso(), grid), cv_two_fold(d.X, d.y, Gls(0.0), grid)
    np.testing.assert_array_equal(a.validation_mse, b.validation_mse)


def test_cv_gls_scores_on_whitened_halves():
    # manual two-fold on whitened data with an independent solver call
    d = simulate_dataset(DgpConfig(n=30, p=4, s=1, rho=0.6, seed=8))
    from whitelasso.whiten import apply_whitener, build_whitener
    op = build_whitener(0.6)
    Xw, yw = apply_whitener(op, d.X), apply_whitener(op, d.y)
    lam = 0.05
    res = cv_two_fold(d.X, d.y, Gls(0.6), [lam])
    h = 15
    errs = []
    for tr, va in ((slice(0, h), slice(h, 30)), (slice(h, 30), slice(0, h))):
        b = fit_lasso(Xw[tr], yw[tr], SolverConfig(lam=lam)).beta
        errs.append(np.mean((yw[va] - Xw[va] @ b) ** 2))
    assert res.validation_mse[0] == pytest.approx(np.mean(errs), rel=1e-6)


def _holdout(d, seed):
    rng = make_rng(seed)
    X = rng.standard_normal(d.X.shape)
    return type(d)(X=X, y=X @ d.beta0 + d.epsilon, beta0=d.beta0, support=d.support,
                   epsilon=d.epsilon, u=d.u, config=d.config)


def test_oracle_single_point_and_noiseless():
    d = simulate_dataset(DgpConfig(n=50, p=10, s=2, sigma_u=1e-12, seed=9))
    h = _holdout(d, 10)
    assert oracle_holdout_lambda(d, h, [0.2]) == 0.2
    grid = default_grid(h.X, h.y, 20)
    assert oracle_holdout_lambda(d, h, grid) == grid[-1]


def test_oracle_rejects_mismatch():
    a = simulate_dataset(DgpConfig(n=20, p=5, s=1, seed=1))
    b = simulate_dataset(DgpConfig(n=20, p=6, s=1, seed=1))
    with pytest.raises(ValueError):
        oracle_holdout_lambda(a, b, [0.1])
    c = simulate_dataset(DgpConfig(n=20, p=5, s=1, seed=2))
    if not np.array_equal(a.beta0, c.beta0):
        with pytest.raises(ValueError):
            oracle_holdout_lambda(a, c, [0.1])
