"""Deterministic random-stream derivation for reproducible ensembles.

Every ensemble member owns an independent PCG64 stream derived from
(master_seed, member_index) alone, so results do not depend on execution
order or worker count.
"""
from __future__ import annotations

import numpy as np


def master_stream(seed: int) -> np.random.Generator:
    """Top-level stream for sequential (non-ensemble) sampling."""
    return np.random.default_rng(np.random.SeedSequence(seed))


def member_streams(master_seed: int, index: int, n: int = 1) -> list[np.random.Generator]:
    """`n` independent streams for ensemble member `index`.

    The derivation uses SeedSequence([master_seed, index]).spawn(n); it is a
    pure function of its arguments.
    """
    if index < 0:
        raise ValueError("ensemble index must be nonnegative")
    children = np.random.SeedSequence([master_seed, index]).spawn(n)
    return [np.random.default_rng(c) for c in children]
