import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fpp.distributions import (
    CustomDistribution,
    Exponential,
    Gaussian,
    ShiftedExponential,
    Uniform,
    mc_psi_check,
    parse_distribution,
    rejection_tilt,
)
from fpp.errors import InvalidParameter


def test_gaussian_sample_mean_and_reproducible():
    d = Gaussian(2.0, 1.0)
    a = d.sample(np.random.default_rng(5), 10**6)
    b = d.sample(np.random.default_rng(5), 10**6)
    assert np.array_equal(a, b)
    assert abs(a.mean() - 2.0) < 0.004


def test_uniform_support():
    x = Uniform(-1.0, 1.0).sample(np.random.default_rng(1), 10**5)
    assert x.min() >= -1.0 and x.max() <= 1.0


def test_exponential_support_and_mean():
    x = Exponential(1.0).sample(np.random.default_rng(2), 10**6)
    assert x.min() >= 0.0
    assert abs(x.mean() - 1.0) < 0.004


def test_exponential_psi_closed_form():
    p = Exponential(1.0).psi(1.0)
    assert p.value == pytest.approx(-math.log(2.0), abs=1e-15)
    assert p.d1 == pytest.approx(-0.5, abs=1e-15)
    assert p.d2 == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("mu,var", [(2.0, 1.0), (-1.5, 0.3), (0.0, 4.0)])
def test_gaussian_psi_at_zero(mu, var):
    assert tuple(Gaussian(mu, var).psi(0.0)) == pytest.approx((0.0, -mu, var), abs=1e-15)


def test_psi_outside_domain_is_infinite():
    p = Exponential(1.0).psi(-1.0)
    assert p.value == math.inf and not p.finite


def test_domains_per_kind():
    assert Exponential(2.5).domain == (-2.5, math.inf)
    assert ShiftedExponential(1.0, 0.5).domain == (-1.0, math.inf)
    assert Gaussian(0, 1).domain == (-math.inf, math.inf)
    assert Uniform(-1, 1).domain == (-math.inf, math.inf)


def test_gaussian_tilt_identity():
    rng = np.random.default_rng(3)
    x = Gaussian(2.0, 1.0).tilted_sample(0.3833, rng, 10**5)
    assert abs(x.mean() - 1.6167) < 3 / math.sqrt(x.size)
    assert abs(x.var() - 1.0) < 0.02


def test_exponential_tilt_identity():
    x = Exponential(1.0).tilted_sample(1.0, np.random.default_rng(4), 10**5)
    sd = 0.5 / math.sqrt(x.size)
    assert abs(x.mean() - 0.5) < 3 * sd


@pytest.mark.parametrize("d", [Gaussian(2, 1), Exponential(1), Uniform(-1, 2), ShiftedExponential(2, -0.5)])
def test_zero_tilt_is_the_plain_law(d):
    a = d.tilted_sample(0.0, np.random.default_rng(9), 1000)
    b = d.sample(np.random.default_rng(9), 1000)
    assert np.array_equal(a, b)


def test_tilt_outside_domain_rejected():
    with pytest.raises(InvalidParameter):
        Exponential(1.0).tilted_sample(-2.0, np.random.default_rng(0), 3)


@pytest.mark.parametrize("d", [Gaussian(2, 1), Uniform(-1, 1), Exponential(1)])
def test_continuous_laws_have_no_span(d):
    assert d.arithmetic_span() is None


@pytest.mark.parametrize(
    "d,t",
    [(Gaussian(2, 1), 0.7), (Exponential(1), 0.5), (Uniform(-1, 1), 1.3), (ShiftedExponential(1.5, -0.2), 0.8)],
)
def test_sampler_matches_psi(d, t):
    # the sampler and psi describe the same law: E e^{-tX} vs e^{psi(t)}
    mean, se = mc_psi_check(d, t, 10**6, np.random.default_rng(11))
    assert abs(mean - math.exp(d.psi(t).value)) < 4 * se


@pytest.mark.parametrize("d,alpha", [(Uniform(-1, 2), 0.9), (ShiftedExponential(2, 0.3), 0.6), (Uniform(0, 1), -1.5)])
def test_tilted_sampler_importance_identity(d, alpha):
    # E_tilt[f(X)] = E[f(X) e^{-alpha X}] / e^{psi(alpha)} with f = identity
    rng = np.random.default_rng(21)
    x = d.tilted_sample(alpha, rng, 4 * 10**5)
    y = np.asarray(d.sample(rng, 4 * 10**5))
    wts = np.exp(-alpha * y - d.psi(alpha).value)
    target = float((y * wts).mean())
    assert abs(x.mean() - target) < 5 * (x.std() / math.sqrt(x.size) + (y * wts).std() / math.sqrt(y.size))
    # the tilted mean is also -psi'(alpha)
    assert x.mean() == pytest.approx(-d.psi(alpha).d1, abs=5 * x.std() / math.sqrt(x.size))


def test_rejection_tilt_matches_exact_tilt():
    d = ShiftedExponential(1.0, 0.25)
    custom = CustomDistribution(d.sample, d._psi, d.domain, d.support)
    x, env = rejection_tilt(custom, 0.5, np.random.default_rng(3), 10**5)
    assert env >= 1.0
    assert abs(x.mean() - (0.25 + 1 / 1.5)) < 4 * (1 / 1.5) / math.sqrt(x.size)


def test_parse_distribution_round_trip():
    for text in ["gaussian(2,1)", "Exponential(1.5)", "uniform(-1, 1)", "shifted_exponential(2,-0.5)"]:
        d = parse_distribution(text)
        assert parse_distribution(d.spec()) == d


@pytest.mark.parametrize("text", ["gaussian(2)", "cauchy(0,1)", "gaussian(1,-1)", "exponential(0)", "nonsense"])
def test_parse_distribution_rejects(text):
    with pytest.raises(InvalidParameter):
        parse_distribution(text)


def _laws():
    return st.one_of(
        st.builds(Gaussian, st.floats(-3, 3), st.floats(0.05, 4)),
        st.builds(Exponential, st.floats(0.1, 5)),
        st.builds(lambda a, w: Uniform(a, a + w), st.floats(-3, 3), st.floats(0.05, 5)),
        st.builds(ShiftedExponential, st.floats(0.1, 5), st.floats(-2, 2)),
    )


@settings(max_examples=200, deadline=None)
@given(_laws(), st.floats(-0.95, 5.0))
def test_psi_derivatives_by_finite_differences(d, frac):
    lo, hi = d.domain
    t = frac if math.isinf(lo) else max(frac, lo + 0.2 * abs(lo) + 0.05)
    h = 1e-5
    p, pm, pp = d.psi(t), d.psi(t - h), d.psi(t + h)
    assert p.d1 == pytest.approx((pp.value - pm.value) / (2 * h), rel=1e-5, abs=1e-6)
    assert p.d2 == pytest.approx((pp.d1 - pm.d1) / (2 * h), rel=1e-5, abs=1e-6)


@settings(max_examples=200, deadline=None)
@given(_laws(), st.floats(-0.9, 4.0), st.floats(-0.9, 4.0), st.floats(0, 1))
def test_psi_is_convex(d, a, b, s):
    lo = d.domain[0]
    if not math.isinf(lo):
        a, b = max(a, lo * 0.9), max(b, lo * 0.9)
    m = s * a + (1 - s) * b
    lhs = d.psi(m).value
    rhs = s * d.psi(a).value + (1 - s) * d.psi(b).value
    assert lhs <= rhs + 1e-9 * (1 + abs(rhs))
    assert d.psi(m).d2 >= 0
