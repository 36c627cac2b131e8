import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hofd_sense.distributions import (
    CopulaSpec,
    copula_cdf,
    copula_decompose,
    copula_density,
    copula_lower_bound,
    exponential_generator,
    frank_bound,
    tabulate_generator,
    xlogx_generator,
)
from hofd_sense.exceptions import SpecError

GRID = np.linspace(0, 1, 201)
UU, VV = np.meshgrid(GRID, GRID, indexing="ij")


def test_family_validation():
    with pytest.raises(SpecError):
        CopulaSpec("gumbel", 1.0)
    with pytest.raises(SpecError):
        CopulaSpec("morgenstern", 1.5)
    with pytest.raises(SpecError):
        CopulaSpec("frank", 0.0)
    with pytest.raises(SpecError):
        CopulaSpec("archimedean_tabulated")


def test_generator_validation():
    phi, dphi, d2phi = xlogx_generator(-1.0)
    with pytest.raises(SpecError, match="vanish at 1"):
        CopulaSpec("archimedean_tabulated", generator=(phi + 1.0, dphi, d2phi))
    with pytest.raises(SpecError, match="decreasing"):
        CopulaSpec("archimedean_tabulated", generator=(phi, -dphi, d2phi))
    with pytest.raises(SpecError, match="convex"):
        CopulaSpec("archimedean_tabulated", generator=(phi, dphi, -d2phi))
    with pytest.raises(SpecError):
        exponential_generator(1.0, 1.0, 0.1)
    with pytest.raises(SpecError):
        xlogx_generator(0.5)


def test_independence_morgenstern():
    rep = copula_lower_bound(CopulaSpec("morgenstern", 0.0))
    assert rep.holds and rep.bound_m == 1.0


@pytest.mark.parametrize("theta", [-0.7, -0.2, 0.3, 0.9])
def test_morgenstern_bound_is_grid_minimum(theta):
    spec = CopulaSpec("morgenstern", theta)
    rep = copula_lower_bound(spec)
    assert rep.bound_m == pytest.approx(1 - abs(theta))
    assert np.min(copula_density(spec, UU, VV)) == pytest.approx(1 - abs(theta), abs=1e-12)


def test_morgenstern_boundary_fails():
    assert not copula_lower_bound(CopulaSpec("morgenstern", 1.0)).holds
    assert not copula_lower_bound(CopulaSpec("morgenstern", -1.0)).holds


def test_frank_bound_regression():
    # -theta (e^-theta - 1) e^(-2 theta) at theta = 1
    want = (1 - math.exp(-1)) * math.exp(-2)
    assert frank_bound(1.0) == pytest.approx(want, rel=1e-14)
    assert want == pytest.approx(0.0855482, abs=1e-7)
    rep = copula_lower_bound(CopulaSpec("frank", 1.0))
    assert rep.holds and rep.bound_m == pytest.approx(want, rel=1e-14)


@pytest.mark.parametrize("theta", [-4.0, -1.0, -0.3, 0.3, 1.0, 4.0])
def test_frank_bound_is_valid(theta):
    spec = CopulaSpec("frank", theta)
    dens = copula_density(spec, UU, VV)
    assert np.min(dens) >= copula_lower_bound(spec).bound_m * (1 - 1e-12)


def test_frank_density_is_derivative_of_cdf():
    spec = CopulaSpec("frank", 2.5)
    u, v, e = 0.3, 0.6, 1e-4
    mixed = (
        copula_cdf(spec, u + e, v + e) - copula_cdf(spec, u + e, v - e)
        - copula_cdf(spec, u - e, v + e) + copula_cdf(spec, u - e, v - e)
    ) / (4 * e * e)
    assert float(mixed) == pytest.approx(float(copula_density(spec, u, v)), rel=1e-5)


@pytest.mark.parametrize(
    "generator",
    [exponential_generator(-1.0, 1.0, 0.1), xlogx_generator(-1.0)],
)
def test_archimedean_bound(generator):
    spec = CopulaSpec("archimedean_tabulated", generator=generator)
    rep = copula_lower_bound(spec)
    assert rep.holds and 0 < rep.bound_m <= 1
    # margins of the tabulated copula
    np.testing.assert_allclose(copula_cdf(spec, GRID, 1.0), GRID, atol=1e-6)
    np.testing.assert_allclose(copula_cdf(spec, GRID, 0.0), 0.0, atol=1e-6)


def test_tabulated_generator_round_trip():
    gen = tabulate_generator(lambda x: 1 - x, lambda x: -np.ones_like(x), lambda x: np.ones_like(x), nodes=11)
    spec = CopulaSpec("archimedean_tabulated", generator=gen)
    back = CopulaSpec.from_dict(spec.to_dict())
    np.testing.assert_array_equal(back.generator[0], spec.generator[0])


def test_decompose_independence_copula():
    table = copula_decompose(CopulaSpec("morgenstern", 0.0), 0.5, k=51)
    g = table.grid
    np.testing.assert_allclose(table.values, np.outer(g, g), atol=1e-14)


def test_decompose_morgenstern_at_its_bound():
    # the remainder is the Morgenstern copula with parameter sign(theta)
    table = copula_decompose(CopulaSpec("morgenstern", 0.5), 0.5, k=51)
    u, v = np.meshgrid(table.grid, table.grid, indexing="ij")
    np.testing.assert_allclose(table.values, u * v * (1 + (1 - u) * (1 - v)), atol=1e-12)


def test_decompose_frank_rectangles_nonnegative():
    m = 0.5 * frank_bound(1.0)
    table = copula_decompose(CopulaSpec("frank", 1.0), m, k=101)
    assert np.min(table.rectangle_masses()) >= -1e-10
    np.testing.assert_allclose(table.values[:, -1], table.grid, atol=1e-12)
    np.testing.assert_allclose(table.values[:, 0], 0.0, atol=1e-12)


def test_decompose_rejects_bad_m():
    spec = CopulaSpec("frank", 1.0)
    with pytest.raises(ValueError):
        copula_decompose(spec, 0.0)
    with pytest.raises(ValueError):
        copula_decompose(spec, 0.5)
    with pytest.raises(ValueError):
        copula_decompose(CopulaSpec("morgenstern", 0.0), 1.0)


@settings(max_examples=30, deadline=None)
@given(theta=st.floats(-0.95, 0.95), frac=st.floats(0.05, 0.99))
def test_decompose_morgenstern_is_a_copula(theta, frac):
    spec = CopulaSpec("morgenstern", theta)
    m = frac * copula_lower_bound(spec).bound_m
    table = copula_decompose(spec, m, k=41)
    assert np.min(table.rectangle_masses()) >= -1e-10
