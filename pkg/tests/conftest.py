"""Shared model builders for the test suite.

"Single-state" models are represented by a two-state chain whose states
carry identical characteristics: the modulator spec forbids absorbing
states, and the ordinate's law is unchanged by switching between identical
states.
"""
from __future__ import annotations

import numpy as np
import pytest

from mapsim import (Gaussian, LocalJumps, MapCharacteristics, ModulatorSpec,
                    PointMass, TransitionJump, TwoPoint)


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def two_state_spec(r_ab=1.0, r_ba=2.0):
    return ModulatorSpec.finite_chain(["a", "b"], {("a", "b"): r_ab, ("b", "a"): r_ba},
                                      initial="a")


def rich_model():
    """Two states with diffusion, local and transition jumps; all moments finite."""
    spec = two_state_spec(1.0, 2.0)
    chars = MapCharacteristics(
        drift={"a": 0.5, "b": -0.25},
        diffusion={"a": 0.8, "b": 0.2},
        local_jumps={"a": LocalJumps(1.5, Gaussian(0.1, 0.6)),
                     "b": LocalJumps(0.7, TwoPoint(1.5, 0.4, -0.5))},
        transition_jumps={("a", "b"): TransitionJump(0.8, PointMass(0.75)),
                          ("b", "a"): TransitionJump(0.5, Gaussian(-0.2, 0.3))})
    return spec, chars


def drift_model():
    """Positive recurrent model with m1 = 1 in closed form."""
    spec = two_state_spec(1.0, 1.0)
    chars = MapCharacteristics(drift={"a": 2.0, "b": 0.0})
    return spec, chars


def alternating_model(a: float = 0.8):
    """Transition jumps +-a with probability one; m1 = 0, J = a^2."""
    spec = two_state_spec(1.0, 1.0)
    chars = MapCharacteristics(
        transition_jumps={("a", "b"): TransitionJump(1.0, PointMass(a)),
                          ("b", "a"): TransitionJump(1.0, PointMass(-a))})
    return spec, chars


def single_state(drift=0.0, diffusion=0.0, local=None, switch_rate=0.1):
    """Levy-process model: identical characteristics in both chain states."""
    spec = ModulatorSpec.finite_chain(
        ["s1", "s2"], {("s1", "s2"): switch_rate, ("s2", "s1"): switch_rate},
        initial="s1")
    states = ("s1", "s2")
    chars = MapCharacteristics(
        drift={s: drift for s in states} if drift else {},
        diffusion={s: diffusion for s in states} if diffusion else {},
        local_jumps={s: LocalJumps(*local) for s in states} if local else {})
    return spec, chars


def walk_model(law, rate=1.0, diffusion=0.0, initial=0):
    """Symmetric walk with ordinate activity at the origin only."""
    spec = ModulatorSpec.symmetric_walk(initial)
    chars = MapCharacteristics(
        diffusion={0: diffusion} if diffusion else {},
        local_jumps={0: LocalJumps(rate, law)} if law is not None else {})
    return spec, chars


@pytest.fixture
def rich():
    return rich_model()
