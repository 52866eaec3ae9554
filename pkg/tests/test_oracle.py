from math import gamma as mgamma, log, sqrt

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ndtr
from scipy.stats import norm

from maxsens.core import BrParams, Margins, SmithParams, semivariogram
from maxsens.lrm import log_bivariate_density
from maxsens.oracle import (
    QuadConfig,
    _integrand,
    analytic_correlation,
    analytic_sensitivity,
    dh_dparams,
    extremal_coefficient,
    g_derivative,
    g_function,
    pair_h,
)

from conftest import BR, ORIGIN, SMITH, br_margins, smith_margins


def test_quad_config_validation():
    with pytest.raises(ValueError):
        QuadConfig(rel_tol=1e-2)
    with pytest.raises(ValueError):
        QuadConfig(derivative="symbolic")


def test_g_h_zero_branch():
    assert g_function(0.0, 0.0, 0.0) == 1.0
    assert g_function(-0.3, 0.2, 0.0) == pytest.approx(mgamma(1.1), rel=1e-15)


@pytest.mark.parametrize("b1,b2", [(-0.3, -0.2), (0.2, -0.5), (0.0, 0.0), (-1.1, -0.7)])
def test_g_independence_limit(b1, b2):
    assert g_function(b1, b2, 50.0) == pytest.approx(mgamma(1 - b1) * mgamma(1 - b2), abs=1e-4)


@pytest.mark.parametrize("h", [0.2, 1.0, 3.0])
def test_g_small_h_continuity_and_unit_moment(h):
    assert g_function(0.0, 0.0, h) == pytest.approx(1.0, rel=1e-7)
    assert g_function(-0.2, -0.1, 1e-3) == pytest.approx(mgamma(1.3), rel=1e-3)


def _printed_integrand(t, b1, b2, h):
    # C1-C3 exactly as displayed, before simplification
    w = h / 2 + log(t) / h
    v = h / 2 - log(t) / h
    P, p = norm.cdf, norm.pdf
    c1 = P(w) + P(v) / t
    c2 = (P(w) + p(w) / h - p(v) / (h * t)) * (P(v) / t**2 + p(v) / (h * t**2) - p(w) / (h * t))
    c3 = v * p(w) / (h * h * t) + w * p(v) / (h * h * t * t)
    b = b1 + b2
    return t**b2 * (c2 * c1 ** (b - 2) * mgamma(2 - b) + c3 * c1 ** (b - 1) * mgamma(1 - b))


@pytest.mark.parametrize("h", [0.4, 1.3, 2.5])
def test_integrand_equals_printed_form(h):
    b1, b2 = -0.22, -0.33
    for t in np.logspace(-3, 3, 25):
        # the implementation integrates over u = log t, so it carries the Jacobian t
        assert _integrand(log(t), b1, b2, h) / t == pytest.approx(_printed_integrand(t, b1, b2, h), rel=1e-10)


@pytest.mark.parametrize("h", [0.6, 1.5])
def test_g_equals_density_cross_moment(h):
    # independent route: integrate y1^b1 y2^b2 against the bivariate density
    b1, b2 = -0.2, -0.3

    def inner(l1):
        f = lambda l2: np.exp(b1 * l1 + b2 * l2 + l1 + l2 + log_bivariate_density((np.exp(l1), np.exp(l2)), h))
        return quad(f, -8, 12, epsabs=1e-13, limit=200)[0]

    ref = quad(inner, -8, 12, epsabs=1e-12, limit=200)[0]
    assert g_function(b1, b2, h) == pytest.approx(ref, rel=1e-6)


@pytest.mark.parametrize("b1,b2", [(-0.22, -0.22), (-0.11, -0.44), (0.3, -0.5), (-0.8, 0.1)])
@pytest.mark.parametrize("h", [0.3, 1.0, 2.7])
def test_g_derivative_matches_finite_differences(b1, b2, h):
    q = QuadConfig(rel_tol=1e-10)
    e = 1e-5 * h
    fd = (g_function(b1, b2, h + e, q) - g_function(b1, b2, h - e, q)) / (2 * e)
    assert g_derivative(b1, b2, h) == pytest.approx(fd, rel=1e-5)
    assert g_derivative(b1, b2, h, QuadConfig(derivative="fd")) == pytest.approx(fd, rel=1e-5)


def test_pair_h_and_derivatives():
    s = [ORIGIN, (1.0, 1.0)]
    assert pair_h(BR, s) == pytest.approx(sqrt(2 * semivariogram(BR, *s)), rel=1e-15)
    assert pair_h(SMITH, s) == pytest.approx(sqrt(np.array([1, 1]) @ SMITH.inv @ np.array([1, 1])), rel=1e-15)
    d = dh_dparams(BR, s)
    e = 1e-6
    fd_psi = (pair_h(BrParams(3.05, 0.86 + e), s) - pair_h(BrParams(3.05, 0.86 - e), s)) / (2 * e)
    fd_kap = (pair_h(BrParams(3.05 + e, 0.86), s) - pair_h(BrParams(3.05 - e, 0.86), s)) / (2 * e)
    assert d.psi == pytest.approx(fd_psi, rel=1e-8)
    assert d.kappa == pytest.approx(fd_kap, rel=1e-8)


# published reference values, printed to three decimals
def test_correlation_reference_values():
    m = br_margins(2)
    assert analytic_correlation(BR, [ORIGIN, (1, 1)], m, m) == pytest.approx(0.784, abs=1e-3)
    m = smith_margins(2)
    assert analytic_correlation(SMITH, [ORIGIN, (1, 1)], m, m) == pytest.approx(0.717, abs=1e-3)


def test_sensitivity_reference_values():
    m = br_margins(2)
    g = analytic_sensitivity(BR, [ORIGIN, (1, 1)], m, m)
    assert g.kappa == pytest.approx(0.048, abs=1e-3)
    assert g.psi == pytest.approx(0.131, abs=1e-3)
    m = smith_margins(2)
    s = analytic_sensitivity(SMITH, [ORIGIN, (1, 1)], m, m)
    assert s.d_sigma[0, 0] == pytest.approx(0.174, abs=1e-3)


def test_sensitivity_beta8_far_pair_reference():
    # the reference -0.486 is itself an S = 1e6 Monte Carlo estimate
    m = br_margins(8)
    g = analytic_sensitivity(BR, [ORIGIN, (9, 9)], m, m)
    assert g.psi == pytest.approx(-0.486, abs=0.01)


def test_coincident_sites_full_correlation():
    m = br_margins(3)
    assert analytic_correlation(BR, [(2.0, 1.0), (2.0, 1.0)], m, m) == pytest.approx(1.0, rel=1e-7)


@pytest.mark.parametrize("dep,names", [(BR, ("psi", "kappa")), (SMITH, None)])
def test_sensitivity_matches_finite_differences(dep, names):
    s = [ORIGIN, (3.0, 2.0)]
    m1, m2 = br_margins(2), Margins(20.0, 2.0, -0.2, 3)
    g = analytic_sensitivity(dep, s, m1, m2)
    q = QuadConfig(rel_tol=1e-10)
    if names:
        for name in names:
            v = getattr(dep, name)
            e = 1e-4 * abs(v)
            up = BrParams(**{**dep.__dict__, name: v + e})
            dn = BrParams(**{**dep.__dict__, name: v - e})
            fd = (analytic_correlation(up, s, m1, m2, q) - analytic_correlation(dn, s, m1, m2, q)) / (2 * e)
            assert getattr(g, name) == pytest.approx(fd, rel=1e-4)
    else:
        for i, j in [(0, 0), (0, 1), (1, 1)]:
            e = 1e-4 * abs(dep.sigma[i, j])
            E = np.zeros((2, 2))
            E[i, j] = E[j, i] = e
            fd = (analytic_correlation(SmithParams(dep.sigma + E), s, m1, m2, q)
                  - analytic_correlation(SmithParams(dep.sigma - E), s, m1, m2, q)) / (2 * e)
            tied = g.d_sigma[i, j] * (2 if i != j else 1)
            assert tied == pytest.approx(fd, rel=1e-4)


def test_correlation_decreases_with_distance():
    m = br_margins(2)
    vals = [analytic_correlation(BR, [ORIGIN, (d, 0.0)], m, m) for d in (0.1, 0.5, 1, 2, 4, 8, 16)]
    assert np.all(np.diff(vals) < 0)


def test_quadrature_refinement_stable():
    m = br_margins(3)
    s = [ORIGIN, (3, 2)]
    a = analytic_correlation(BR, s, m, m, QuadConfig(rel_tol=1e-7))
    b = analytic_correlation(BR, s, m, m, QuadConfig(rel_tol=5e-8))
    assert abs(a - b) < 1e-7


def test_extremal_coefficient():
    assert extremal_coefficient(BR, [ORIGIN, ORIGIN]) == 1.0
    assert extremal_coefficient(BrParams(1e-3, 1.9), [ORIGIN, (50, 0)]) == 2.0
    gam = semivariogram(BR, ORIGIN, (1, 1))
    assert extremal_coefficient(BR, [ORIGIN, (1, 1)]) == pytest.approx(2 * norm.cdf(sqrt(gam / 2)), rel=1e-15)
