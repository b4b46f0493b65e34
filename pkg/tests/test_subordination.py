"""Stable subordinator, Mittag-Leffler inverse, subordinated Brownian motion."""
import math

import numpy as np
import pytest
from scipy import stats

from mapsim import (SubordinatorSpec, sample_inverse, sample_stable_subordinator,
                    sample_subordinated_bm)
from mapsim.subordination import _kanter
from conftest import rng


def test_spec_validation():
    with pytest.raises(ValueError):
        SubordinatorSpec(0.0)
    with pytest.raises(ValueError):
        SubordinatorSpec(1.2)
    assert SubordinatorSpec(1.0).is_drift


def test_stable_sampler_rejects_drift_case():
    with pytest.raises(ValueError, match="pure drift"):
        sample_stable_subordinator(SubordinatorSpec(1.0), [1.0], rng(0))


def test_laplace_transform_identity():
    g = rng(1)
    s = _kanter(0.5, g, 100_000)
    vals = np.exp(-s)
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - math.exp(-1.0)) < 3 * se


@pytest.mark.parametrize("alpha,q,t", [(0.5, 0.5, 1.0), (0.5, 2.0, 2.0),
                                       (0.7, 1.0, 1.0), (0.3, 0.5, 2.0)])
def test_laplace_transform_grid(alpha, q, t):
    g = rng(2)
    spec = SubordinatorSpec(alpha)
    draws = np.array([sample_stable_subordinator(spec, [t], g)[0]
                      for _ in range(20_000)])
    vals = np.exp(-q * draws)
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - math.exp(-t * q ** alpha)) < 3 * se


def test_half_stable_matches_levy_construction():
    # Independent oracle: for alpha = 1/2 the subordinator marginal is
    # Levy(1/2), i.e. 1/(2 N^2) for standard normal N.
    g = rng(3)
    mine = _kanter(0.5, g, 5000)
    normals = g.standard_normal(5000)
    levy = 1.0 / (2.0 * normals * normals)
    d, p = stats.ks_2samp(mine, levy)
    assert p > 0.01


def test_stable_tail_slope():
    g = rng(4)
    s = _kanter(0.5, g, 100_000)
    xs = np.array([100.0, 300.0, 1000.0, 3000.0, 10_000.0])
    surv = np.array([(s > x).mean() for x in xs])
    slope = np.polyfit(np.log(xs), np.log(surv), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.05)
    # Tauberian constant: P(sigma_1 > x) ~ x^{-1/2} / Gamma(1/2).
    assert surv[0] * math.sqrt(xs[0]) * math.sqrt(math.pi) == pytest.approx(1.0, abs=0.1)


def test_increments_uncorrelated():
    g = rng(5)
    spec = SubordinatorSpec(0.6)
    paths = np.array([sample_stable_subordinator(spec, [1.0, 2.0, 3.0], g)
                      for _ in range(3000)])
    inc1 = paths[:, 1] - paths[:, 0]
    inc2 = paths[:, 2] - paths[:, 1]
    # Heavy tails: correlate ranks instead of raw values.
    corr = stats.spearmanr(inc1, inc2).statistic
    assert abs(corr) < 3.0 / math.sqrt(3000)


def test_inverse_drift_identity():
    grid = np.linspace(0.0, 5.0, 11)
    path = sample_inverse(SubordinatorSpec(1.0), grid, rng(6))
    assert np.array_equal(path.values, grid)


def test_inverse_mean_half():
    g = rng(7)
    spec = SubordinatorSpec(0.5)
    vals = np.array([sample_inverse(spec, [1.0], g).values[0] for _ in range(20_000)])
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - 2.0 / math.sqrt(math.pi)) < 3 * se


def test_inverse_joint_grid_matches_marginals():
    # The fixed-step joint sampler against the exact marginal identity
    # W_t = (t / sigma_1)^alpha, at both grid times.
    g = rng(8)
    spec = SubordinatorSpec(0.5)
    joint = np.array([sample_inverse(spec, [0.5, 1.0], g, tol=1e-3).values
                      for _ in range(3000)])
    assert np.all(np.diff(joint, axis=1) >= 0.0)
    for k, t in enumerate((0.5, 1.0)):
        marg = (t / _kanter(0.5, g, 3000)) ** 0.5
        se = math.hypot(joint[:, k].std(ddof=1), marg.std(ddof=1)) / math.sqrt(3000)
        assert abs(joint[:, k].mean() - marg.mean()) < 3 * se
        d, p = stats.ks_2samp(joint[:, k], marg)
        assert p > 0.01


def test_inverse_nondecreasing_and_zero():
    spec = SubordinatorSpec(0.4)
    path = sample_inverse(spec, [0.0, 0.5, 1.0, 2.0], rng(9), tol=1e-3)
    assert path.values[0] == 0.0
    assert np.all(np.diff(path.values) >= 0.0)


def test_self_similarity_ks():
    g = rng(10)
    spec = SubordinatorSpec(0.5)
    w4 = np.array([sample_inverse(spec, [4.0], g).values[0] for _ in range(1500)])
    w1 = np.array([sample_inverse(spec, [1.0], g).values[0] for _ in range(1500)])
    d, p = stats.ks_2samp(w4, 2.0 * w1)  # c^alpha = 4^(1/2) = 2
    assert p > 0.01


def test_subordinated_bm_zero_scale():
    vals = sample_subordinated_bm(SubordinatorSpec(0.5), 0.0, [1.0, 2.0], rng(11))
    assert np.all(vals == 0.0)


def test_subordinated_bm_drift_case_gaussian():
    g = rng(12)
    s = 1.7
    vals = np.array([sample_subordinated_bm(SubordinatorSpec(1.0), s, [1.0], g)[0]
                     for _ in range(10_000)])
    res = stats.kstest(vals, stats.norm(scale=math.sqrt(s)).cdf)
    assert res.pvalue > 0.01


def test_subordinated_bm_half_second_moment_and_symmetry():
    g = rng(13)
    spec = SubordinatorSpec(0.5)
    vals = np.array([sample_subordinated_bm(spec, 1.0, [1.0], g)[0]
                     for _ in range(20_000)])
    sq = vals ** 2
    se = sq.std(ddof=1) / math.sqrt(sq.size)
    assert abs(sq.mean() - 2.0 / math.sqrt(math.pi)) < 3 * se
    # Symmetry: third central moment within 3 SE of 0 (delta-method SE).
    cubes = (vals - vals.mean()) ** 3
    se_m3 = cubes.std(ddof=1) / math.sqrt(cubes.size)
    assert abs(cubes.mean()) < 3 * se_m3


def test_inverse_grid_validation():
    with pytest.raises(ValueError):
        sample_inverse(SubordinatorSpec(0.5), [1.0, 0.5], rng(0))
    with pytest.raises(ValueError):
        sample_inverse(SubordinatorSpec(0.5), [-1.0], rng(0))
