import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hofd_sense import smoother as sm
from hofd_sense.exceptions import DegenerateError
from hofd_sense.smoother import (
    LocalPolynomialSmoother,
    SmootherConfig,
    bandwidth,
    basis_exponents,
    loo_conditional_mean,
    loo_direct,
)


def test_silverman_bandwidth_standard_normal():
    x = np.random.default_rng(0).normal(size=1000)
    assert bandwidth(x) == pytest.approx(1.06 * 1000**-0.2, abs=0.02)
    assert bandwidth(x) == pytest.approx(0.266, abs=0.02)


def test_constant_column_is_degenerate():
    with pytest.raises(DegenerateError, match="zero sample variance"):
        loo_conditional_mean(np.ones(50), np.arange(50.0))
    with pytest.raises(DegenerateError):
        bandwidth([1.0])


def test_too_few_observations():
    with pytest.raises(ValueError, match="at least"):
        LocalPolynomialSmoother(np.array([0.0, 1.0]))


def test_config_validation():
    with pytest.raises(ValueError):
        SmootherConfig(degree=4)
    with pytest.raises(ValueError):
        SmootherConfig(bandwidth_rule="scott")
    with pytest.raises(ValueError):
        SmootherConfig(bandwidth_rule="fixed")
    with pytest.raises(ValueError):
        SmootherConfig(fixed_h=(0.1,))
    with pytest.raises(ValueError):
        SmootherConfig(bandwidth_rule="fixed", fixed_h=(0.0,))
    with pytest.raises(ValueError):
        SmootherConfig(kernel="epanechnikov")
    with pytest.raises(ValueError):
        SmootherConfig(ridge=-1.0)
    with pytest.raises(ValueError):
        SmootherConfig(max_row_norm=0.5)
    assert SmootherConfig(bandwidth_rule="fixed", fixed_h=0.3).fixed_h == (0.3,)


def test_basis_exponents_order():
    assert basis_exponents(2, 1) == [(0, 0), (1, 0), (0, 1)]
    assert len(basis_exponents(2, 2)) == 6
    assert basis_exponents(1, 3) == [(0,), (1,), (2,), (3,)]


@pytest.mark.parametrize("d", [1, 2])
def test_constants_are_reproduced(d):
    x = np.random.default_rng(1).normal(size=(300, d))
    np.testing.assert_allclose(loo_conditional_mean(x, np.full(300, 3.7)), 3.7, rtol=1e-12)


@pytest.mark.parametrize("d", [1, 2])
def test_linear_functions_reproduced_off_the_guard(d):
    rng = np.random.default_rng(2)
    x = rng.normal(size=(400, d))
    y = 1.5 + x @ np.arange(1.0, d + 1)
    sm_ = LocalPolynomialSmoother(x)
    fit = sm_.apply(y)
    interior = ~sm_.guarded
    assert interior.mean() > 0.95
    np.testing.assert_allclose(fit[interior], y[interior], atol=1e-6)


def test_hat_rows_sum_to_one_and_leave_self_out():
    x = np.random.default_rng(3).normal(size=(200, 2))
    hat = LocalPolynomialSmoother(x).hat_matrix()
    np.testing.assert_allclose(hat.sum(axis=1), 1.0, atol=1e-10)
    np.testing.assert_array_equal(np.diag(hat), 0.0)
    assert np.all(np.abs(hat).sum(axis=1) <= 2.0 + 1e-12)


def test_fit_does_not_see_its_own_response():
    rng = np.random.default_rng(4)
    x = rng.normal(size=150)
    y = rng.normal(size=150)
    base = loo_conditional_mean(x, y)
    y2 = y.copy()
    y2[17] += 100.0
    moved = loo_conditional_mean(x, y2)
    assert moved[17] == pytest.approx(base[17], abs=1e-12)


def test_permutation_equivariance():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(200, 2))
    y = np.sin(x[:, 0]) + x[:, 1]
    perm = rng.permutation(200)
    np.testing.assert_allclose(
        loo_conditional_mean(x[perm], y[perm]), loo_conditional_mean(x, y)[perm], atol=1e-12
    )


@settings(max_examples=15, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    d=st.sampled_from([1, 2]),
    degree=st.sampled_from([0, 1, 2]),
    guard=st.sampled_from([None, 2.0]),
)
def test_downdate_matches_direct_resolve(seed, d, degree, guard):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(80, d))
    y = rng.normal(size=80) + x[:, 0]
    cfg = SmootherConfig(degree=degree, max_row_norm=guard)
    np.testing.assert_allclose(
        loo_conditional_mean(x, y, cfg), loo_direct(x, y, cfg), rtol=1e-7, atol=1e-8
    )


def test_chunked_path_matches_dense(monkeypatch):
    rng = np.random.default_rng(6)
    x = rng.normal(size=(600, 2))
    y = x[:, 0] * x[:, 1] + rng.normal(size=600)
    dense = LocalPolynomialSmoother(x)
    monkeypatch.setattr(sm, "_DENSE_LIMIT", 100)
    lazy = LocalPolynomialSmoother(x)
    assert lazy._hat is None
    np.testing.assert_allclose(lazy.apply(y), dense.apply(y), atol=1e-12)
    np.testing.assert_array_equal(lazy.guarded, dense.guarded)


def test_fixed_bandwidth_is_used():
    x = np.random.default_rng(7).normal(size=(200, 2))
    s = LocalPolynomialSmoother(x, SmootherConfig(bandwidth_rule="fixed", fixed_h=(0.5,)))
    np.testing.assert_array_equal(s.h, [0.5, 0.5])


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        LocalPolynomialSmoother(np.zeros((50, 3)))
    x = np.random.default_rng(8).normal(size=50)
    x[3] = np.nan
    with pytest.raises(ValueError, match="finite"):
        LocalPolynomialSmoother(x)
    with pytest.raises(ValueError, match="responses"):
        LocalPolynomialSmoother(np.random.default_rng(9).normal(size=50)).apply(np.zeros(49))
