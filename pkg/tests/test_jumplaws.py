"""Jump-law moments, characteristic functions and sampling against oracles."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from mapsim.jumplaws import (Gaussian, PointMass, ShiftedPareto, TwoPoint,
                             make_law)
from conftest import rng

LAWS = [
    PointMass(1.3),
    PointMass(-0.4),
    TwoPoint(1.5, 0.4, -0.5),
    TwoPoint(-2.0, 0.25, 0.3),
    Gaussian(0.1, 0.6),
    Gaussian(-1.2, 2.0),
    ShiftedPareto(2.7, 0.8),
    ShiftedPareto(1.5, 1.0),
]


def test_atom_moments_exact():
    law = TwoPoint(1.5, 0.4, -0.5)
    assert law.mean() == pytest.approx(0.4 * 1.5 - 0.6 * 0.5, abs=0)
    assert law.second_moment() == pytest.approx(0.4 * 2.25 + 0.6 * 0.25, abs=0)
    assert law.mean_within(1.0) == pytest.approx(-0.6 * 0.5, abs=0)
    assert law.abs_beyond(2.0, 1.0) == pytest.approx(0.4 * 1.5 ** 2, abs=0)


def test_gaussian_truncated_moments_match_closed_form():
    # Oracle: closed-form truncated normal mean E[X 1{a<X<b}]
    #   = mu (Phi(beta)-Phi(alpha)) + sd (phi(alpha)-phi(beta)).
    mu, sd = 0.1, 0.6
    law = Gaussian(mu, sd)
    a, b = (-1.0 - mu) / sd, (1.0 - mu) / sd
    closed = mu * (stats.norm.cdf(b) - stats.norm.cdf(a)) \
        + sd * (stats.norm.pdf(a) - stats.norm.pdf(b))
    assert law.mean_within(1.0) == pytest.approx(closed, abs=1e-10)
    assert law.second_moment() == pytest.approx(mu * mu + sd * sd, abs=1e-12)


def test_pareto_moments():
    law = ShiftedPareto(2.5, 1.3)
    assert law.mean() == pytest.approx(1.3 / 1.5, abs=1e-12)
    # Closed gamma-function form against direct quadrature.
    quad = integrate.quad(lambda x: x ** 1.7 * 2.5 / 1.3 * (1 + x / 1.3) ** -3.5,
                          0, np.inf, epsabs=1e-12)[0]
    assert law.abs_moment(1.7) == pytest.approx(quad, rel=1e-8)
    assert math.isinf(law.abs_moment(2.5))
    assert math.isinf(ShiftedPareto(1.5, 1.0).second_moment())
    assert math.isinf(ShiftedPareto(1.5, 1.0).abs_beyond(2.0, 1.0))


def test_pareto_parameter_validation():
    with pytest.raises(ValueError):
        ShiftedPareto(1.0, 1.0)
    with pytest.raises(ValueError):
        ShiftedPareto(2.0, 0.0)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: type(l).__name__ + str(hash(l) % 97))
def test_charfn_basics(law):
    assert law.charfn(0.0) == 1.0
    for lam in (0.5, 1.0, 2.3):
        val = law.charfn(lam)
        assert abs(val) <= 1.0 + 1e-12
        conj = law.charfn(-lam)
        assert conj == pytest.approx(val.conjugate(), abs=1e-9)


@pytest.mark.parametrize("lam", [0.4, 1.3])
def test_pareto_charfn_against_fourier_quadrature(lam):
    law = ShiftedPareto(2.2, 0.9)
    pdf = lambda x: 2.2 / 0.9 * (1 + x / 0.9) ** -3.2
    re = integrate.quad(pdf, 0, np.inf, weight="cos", wvar=lam, limit=400)[0]
    im = integrate.quad(pdf, 0, np.inf, weight="sin", wvar=lam, limit=400)[0]
    assert law.charfn(lam) == pytest.approx(complex(re, im), abs=1e-7)


def test_sampling_matches_distribution():
    g = rng(101)
    ks = stats.kstest(Gaussian(0.1, 0.6).sample(g, 4000), stats.norm(0.1, 0.6).cdf)
    assert ks.pvalue > 0.01
    kappa, scale = 2.1, 0.7
    sample = ShiftedPareto(kappa, scale).sample(g, 4000)
    cdf = lambda x: 1.0 - (1.0 + x / scale) ** -kappa
    assert stats.kstest(sample, cdf).pvalue > 0.01
    tp = TwoPoint(1.0, 0.3, -2.0).sample(g, 4000)
    assert abs((tp == 1.0).mean() - 0.3) < 3 * math.sqrt(0.3 * 0.7 / 4000)
    assert set(np.unique(tp)) == {1.0, -2.0}


@pytest.mark.parametrize("law", LAWS[:6])
def test_scaled_moments(law):
    s = 1.7
    scaled = law.scaled(s)
    assert scaled.mean() == pytest.approx(s * law.mean(), rel=1e-12)
    assert scaled.second_moment() == pytest.approx(s * s * law.second_moment(), rel=1e-12)


def test_mass_at_zero():
    assert PointMass(0.0).mass_at_zero() == 1.0
    assert PointMass(1.0).mass_at_zero() == 0.0
    assert TwoPoint(0.0, 0.3, 1.0).mass_at_zero() == 0.3
    assert Gaussian(0.0, 1.0).mass_at_zero() == 0.0
    assert Gaussian(0.0, 0.0).mass_at_zero() == 1.0
    assert ShiftedPareto(2.0, 1.0).mass_at_zero() == 0.0


def test_sd_zero_gaussian_degenerates_to_atom():
    law = Gaussian(0.4, 0.0)
    assert law.mean_within(1.0) == 0.4
    assert law.abs_beyond(2.0, 1.0) == 0.0
    assert np.all(law.sample(rng(1), 5) == 0.4)


@given(lam=st.floats(-8.0, 8.0))
@settings(max_examples=60, deadline=None)
def test_charfn_conjugate_symmetry_property(lam):
    law = TwoPoint(0.9, 0.4, -0.3)
    assert law.charfn(-lam) == pytest.approx(law.charfn(lam).conjugate(), abs=1e-12)


def test_make_law_and_errors():
    law = make_law("gaussian", ["0.1", "0.6"])
    assert law == Gaussian(0.1, 0.6)
    with pytest.raises(ValueError, match="unknown law family"):
        make_law("cauchy", [0.0])
    with pytest.raises(ValueError, match="takes 2 parameters"):
        make_law("gaussian", [1.0])
