import numpy as np
import pytest

from hofd_sense.distributions import (
    AdmissibilityReport,
    GaussianMixtureSpec,
    centered_mixture,
    check_c2_gaussian,
    mixture_pdf,
    precision_gap_eigenvalues,
    sample_mixture,
)


def test_report_invariants():
    with pytest.raises(ValueError):
        AdmissibilityReport(True, None, "gaussian_pd_test")
    with pytest.raises(ValueError):
        AdmissibilityReport(False, 0.5, "gaussian_pd_test")
    with pytest.raises(ValueError):
        AdmissibilityReport(True, 1.5, "gaussian_pd_test")
    with pytest.raises(ValueError):
        AdmissibilityReport(True, 0.5, "guess")
    assert AdmissibilityReport(True, 0.5, "density_bounds").to_dict()["bound_m"] == 0.5


def test_bilinear_spec_certifies(bilinear_spec):
    eig = precision_gap_eigenvalues(bilinear_spec)
    np.testing.assert_allclose(eig, [1 / 9, 9.0], rtol=1e-9)
    rep = check_c2_gaussian(bilinear_spec)
    assert rep.holds and rep.method == "gaussian_pd_test" and not rep.caveat
    m2 = 0.2 + 0.8 / 0.3
    assert rep.bound_m == pytest.approx(0.2 / m2**2, rel=1e-12)


def test_wide_dependent_component_fails():
    # omega_1^2 > sigma_1^2 violates the two-dimensional criterion
    spec = centered_mixture(0.2, [[1.5, 0.4], [0.4, 0.5]])
    rep = check_c2_gaussian(spec)
    assert not rep.holds and rep.bound_m is None
    assert "not positive definite" in rep.details and "eigenvalues" in rep.details


def test_equal_covariances_fail_at_strict_tolerance():
    spec = centered_mixture(0.5, np.eye(2))
    assert not check_c2_gaussian(spec).holds


def test_non_centered_mixture_uses_numeric_bounds():
    spec = GaussianMixtureSpec(0.3, [0.0, 0.0], [0.5, -0.2], [1.0, 1.0], [[0.5, 0.2], [0.2, 0.5]])
    rep = check_c2_gaussian(spec, n_scan=20_000)
    assert rep.holds and rep.method == "density_bounds" and rep.caveat
    assert 0 < rep.bound_m <= 1


def _min_ratio(spec, pts):
    joint = mixture_pdf(spec, pts)
    prod = mixture_pdf(spec, pts[:, [0]], idx=[0]) * mixture_pdf(spec, pts[:, [1]], idx=[1])
    return float(np.min(joint / prod))


@pytest.mark.parametrize(
    "cov2",
    [
        [[0.5, 0.4], [0.4, 0.5]],
        [[0.7, 0.37], [0.37, 0.3]],
        [[0.15, 0.3], [0.3, 0.85]],
        [[0.5, 0.0], [0.0, 0.5]],
    ],
)
def test_certified_bound_holds_on_a_scan(cov2):
    spec = centered_mixture(0.2, cov2)
    rep = check_c2_gaussian(spec)
    assert rep.holds
    rng = np.random.default_rng(0)
    pts = np.vstack([sample_mixture(spec, 50_000, rng), rng.uniform(-5, 5, size=(50_000, 2))])
    assert _min_ratio(spec, pts) >= rep.bound_m
