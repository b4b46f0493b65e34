"""Modulator simulation, stationary measures, occupation and resolvent checks."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from mapsim import (ModulatorSpec, darling_kac_estimate, occupation_functional,
                    simulate_modulator, stationary_measure)
from mapsim.modulator import ModulatorPath
from conftest import rng, two_state_spec


def test_spec_validation():
    with pytest.raises(ValueError, match="exit rate 0"):
        ModulatorSpec.finite_chain(["only"], {})
    with pytest.raises(ValueError, match="reducible"):
        ModulatorSpec.finite_chain(["a", "b", "c"],
                                   {("a", "b"): 1.0, ("b", "a"): 1.0, ("c", "a"): 1.0})
    with pytest.raises(ValueError, match="nonnegative"):
        ModulatorSpec.finite_chain(["a", "b"], {("a", "b"): -1.0, ("b", "a"): 1.0})
    with pytest.raises(ValueError, match="duplicate"):
        ModulatorSpec.finite_chain(["a", "a"], {("a", "a"): 1.0})
    with pytest.raises(ValueError, match="self-rate"):
        ModulatorSpec.finite_chain(["a", "b"], {("a", "a"): 1.0, ("a", "b"): 1.0,
                                                ("b", "a"): 1.0})
    with pytest.raises(ValueError, match="integer"):
        ModulatorSpec.symmetric_walk(initial="x")


def test_simulate_empty_horizon():
    path = simulate_modulator(two_state_spec(), 0.0, rng(0))
    assert path.n_jumps == 0 and path.horizon == 0.0


def test_simulate_rejects_bad_horizon():
    for bad in (float("inf"), float("nan"), -1.0):
        with pytest.raises(ValueError):
            simulate_modulator(two_state_spec(), bad, rng(0))


def test_holding_times_exponential_ks():
    # Completed holding intervals in one state against Exponential(q).
    spec = two_state_spec(1.3, 0.7)
    g = rng(7)
    samples = []
    while len(samples) < 10_000:
        path = simulate_modulator(spec, 4000.0, g)
        starts, ends, codes = path.segments()
        durations = (ends - starts)[:-1]  # final interval is truncated
        codes = codes[:-1]
        samples.extend(durations[codes == 0].tolist())
    samples = np.array(samples[:10_000])
    res = stats.kstest(samples, stats.expon(scale=1.0 / 1.3).cdf)
    assert res.pvalue > 0.01


def test_ergodic_time_fraction():
    # 2-state chain, rates 1 each, horizon 1e4: fraction in state "a" -> 1/2.
    spec = two_state_spec(1.0, 1.0)
    g = rng(11)
    fracs = np.array([
        occupation_functional(simulate_modulator(spec, 10_000.0, g),
                              lambda s: 1.0 if s == "a" else 0.0) / 10_000.0
        for _ in range(100)])
    se = fracs.std(ddof=1) / 10.0
    assert abs(fracs.mean() - 0.5) < 3 * se


def test_stationary_measure_values():
    sym = stationary_measure(two_state_spec(1.0, 1.0))
    assert sym.weights["a"] == pytest.approx(0.5, abs=1e-12)
    asym = stationary_measure(two_state_spec(1.0, 2.0))
    # Hand-solved balance: pi(a) K(a,b) = pi(b) K(b,a) -> pi = (2/3, 1/3).
    assert asym.weights["a"] == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert asym.weights["b"] == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert asym.residual < 1e-10
    walk = stationary_measure(ModulatorSpec.symmetric_walk())
    assert walk.infinite and walk.weight(17) == 1.0


def test_stationary_measure_three_state_against_linear_solve():
    spec = ModulatorSpec.finite_chain(
        ["x", "y", "z"],
        {("x", "y"): 0.7, ("y", "z"): 1.1, ("z", "x"): 0.4, ("y", "x"): 0.2,
         ("z", "y"): 0.9})
    pi = stationary_measure(spec)
    gen = np.zeros((3, 3))
    idx = {"x": 0, "y": 1, "z": 2}
    for (a, b), r in spec.rates.items():
        gen[idx[a], idx[b]] = r
    np.fill_diagonal(gen, -gen.sum(axis=1))
    vec = np.array([pi.weights[s] for s in ("x", "y", "z")])
    assert np.max(np.abs(vec @ gen)) < 1e-12
    assert vec.sum() == pytest.approx(1.0, abs=1e-12)


def test_occupation_identity_and_zero():
    path = simulate_modulator(two_state_spec(), 37.5, rng(3))
    assert occupation_functional(path, lambda s: 1.0) == pytest.approx(37.5, abs=1e-9)
    assert occupation_functional(path, lambda s: 0.0) == 0.0


@given(seed=st.integers(0, 10_000),
       fa=st.sampled_from([0.5, 1.0, 2.0, -4.0]),
       gb=st.sampled_from([0.25, -0.5, 8.0, 0.0]))
@settings(max_examples=25, deadline=None)
def test_occupation_additive_in_function(seed, fa, gb):
    # Power-of-two values on disjoint supports keep every product exact, so
    # the per-state aggregation makes additivity hold without rounding.
    path = simulate_modulator(two_state_spec(), 50.0, rng(seed))
    f = lambda s: fa if s == "a" else 0.0
    g = lambda s: gb if s == "b" else 0.0
    fg = lambda s: f(s) + g(s)
    assert occupation_functional(path, fg) == \
        occupation_functional(path, f) + occupation_functional(path, g)


def test_occupation_near_additive_for_general_values():
    path = simulate_modulator(two_state_spec(), 50.0, rng(12))
    f = lambda s: 0.3 if s == "a" else 1.7
    g = lambda s: -0.45 if s == "a" else 0.2
    lhs = occupation_functional(path, lambda s: f(s) + g(s))
    rhs = occupation_functional(path, f) + occupation_functional(path, g)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_walk_recurrence_smoke():
    # Started at 0 with horizon 1e4, the walk returns to 0 in >= 99% of paths.
    spec = ModulatorSpec.symmetric_walk(0)
    g = rng(2024)
    returns = 0
    for _ in range(1000):
        path = simulate_modulator(spec, 10_000.0, g)
        returns += bool(np.any(path.states == 0))
    assert returns >= 990


def test_resolvent_closed_form_against_bessel_laplace():
    # Independent numeric oracle: int e^{-qs} P_0(walk at 0) ds with
    # P_0(theta_s = 0) = e^{-s} I_0(s), against 1/sqrt(q^2 + 2q).
    for q in (0.01, 0.1, 1.0):
        val = integrate.quad(lambda s: math.exp(-q * s) * special.i0e(s),
                             0, np.inf, limit=400)[0]
        assert val == pytest.approx(1.0 / math.sqrt(q * q + 2 * q), rel=1e-6)


def test_darling_kac_finite_chain_linear():
    spec = two_state_spec(1.0, 2.0)
    g = lambda s: 1.0 if s == "a" else 0.5
    rows = darling_kac_estimate(spec, g, [50.0, 200.0], 200, rng(5))
    for row in rows:
        assert row.value / row.t == pytest.approx(1.0, abs=0.1)


def test_darling_kac_walk_normalization():
    spec = ModulatorSpec.symmetric_walk(0)
    g = lambda s: 1.0 if s == 0 else 0.0
    rows = darling_kac_estimate(spec, g, [100.0, 1000.0], 800, rng(6), support=[0])
    for row in rows:
        target = 1.0 / math.sqrt(1.0 / row.t ** 2 + 2.0 / row.t)
        assert abs(row.value - target) < 3 * row.se + 0.02 * target
        assert row.value / math.sqrt(row.t / 2.0) == pytest.approx(1.0, abs=0.05)


def test_darling_kac_zero_time_and_errors():
    spec = ModulatorSpec.symmetric_walk(0)
    g = lambda s: 1.0 if s == 0 else 0.0
    assert darling_kac_estimate(spec, g, [0.0], 10, rng(0), support=[0])[0].value == 0.0
    with pytest.raises(ValueError, match="support"):
        darling_kac_estimate(spec, g, [1.0], 10, rng(0))
    with pytest.raises(ValueError, match="positive"):
        darling_kac_estimate(spec, lambda s: 0.0, [1.0], 10, rng(0), support=[0])


def test_path_invariants():
    with pytest.raises(ValueError, match="strictly increasing"):
        ModulatorPath(initial=0, times=np.array([2.0, 1.0]),
                      states=np.array([1, 0]), horizon=3.0)
    with pytest.raises(ValueError, match="self-jumps"):
        ModulatorPath(initial=0, times=np.array([1.0]),
                      states=np.array([0]), horizon=3.0)


def test_walk_state_at_and_labels():
    path = simulate_modulator(ModulatorSpec.symmetric_walk(3), 50.0, rng(8))
    assert path.state_at(0.0) == 3
    t = float(path.times[0])
    assert path.state_at(t) == int(path.states[0])
    assert path.label_of(path.state_at(t)) == int(path.states[0])
