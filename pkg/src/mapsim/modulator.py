"""Modulating Markov processes: finite-state chains and the symmetric walk.

Two families are supported: irreducible finite-state continuous-time chains
(positive recurrent) and the rate-1 continuous-time simple symmetric random
walk on the integers (null recurrent, counting invariant measure).  Holding
times are sampled by inverse CDF on the generator's uniform stream and next
states by a cumulative-rate scan over destinations sorted by label.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping

import numpy as np

FINITE_CHAIN = "finite_chain"
SYMMETRIC_WALK = "symmetric_walk"

# Exponential-discount tail below this weight is dropped from the resolvent
# estimate; the induced bias is ~1e-8 relative.
_DISCOUNT_FLOOR = 1e-8


@dataclass(frozen=True)
class ModulatorSpec:
    """Definition of the modulating process.

    For FINITE_CHAIN, `states` lists the labels and `rates[(a, b)]` the
    transition rate a -> b (a != b).  SYMMETRIC_WALK fixes integer states
    with rate 1/2 to each neighbour.
    """

    kind: str
    states: tuple = ()
    rates: Mapping = field(default_factory=dict)
    initial: object = None

    def __post_init__(self):
        if self.kind == FINITE_CHAIN:
            self._validate_chain()
        elif self.kind == SYMMETRIC_WALK:
            ini = 0 if self.initial is None else self.initial
            if not isinstance(ini, (int, np.integer)):
                raise ValueError("symmetric walk initial state must be an integer")
            object.__setattr__(self, "initial", int(ini))
            if self.states or self.rates:
                raise ValueError("symmetric walk takes no states/rates (they are fixed)")
        else:
            raise ValueError(f"unknown modulator kind '{self.kind}'")

    def _validate_chain(self):
        states = tuple(self.states)
        if len(set(states)) != len(states):
            raise ValueError("duplicate state labels")
        if not states:
            raise ValueError("finite chain needs at least one state")
        index = {s: i for i, s in enumerate(states)}
        n = len(states)
        mat = np.zeros((n, n))
        for key, rate in dict(self.rates).items():
            a, b = key
            if a not in index or b not in index:
                raise ValueError(f"rate references unknown state in {key!r}")
            if a == b:
                raise ValueError(f"self-rate not allowed for state {a!r}")
            rate = float(rate)
            if not (math.isfinite(rate) and rate >= 0.0):
                raise ValueError(f"rate {key!r} must be finite and nonnegative")
            mat[index[a], index[b]] = rate
        exit_rates = mat.sum(axis=1)
        for i, q in enumerate(exit_rates):
            if q <= 0.0:
                raise ValueError(f"state {states[i]!r} has exit rate 0 (absorbing)")
        if not _strongly_connected(mat > 0.0):
            raise ValueError("finite chain is reducible")
        ini = states[0] if self.initial is None else self.initial
        if ini not in index:
            raise ValueError(f"initial state {ini!r} not among states")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "rates", {tuple(k): float(v) for k, v in dict(self.rates).items()})
        object.__setattr__(self, "initial", ini)

    @classmethod
    def finite_chain(cls, states: Iterable, rates: Mapping, initial=None) -> "ModulatorSpec":
        return cls(kind=FINITE_CHAIN, states=tuple(states), rates=dict(rates), initial=initial)

    @classmethod
    def symmetric_walk(cls, initial: int = 0) -> "ModulatorSpec":
        return cls(kind=SYMMETRIC_WALK, initial=initial)

    # Compiled tables for the chain sampler (index space, label-sorted scan).
    @cached_property
    def _tables(self):
        assert self.kind == FINITE_CHAIN
        states = self.states
        index = {s: i for i, s in enumerate(states)}
        n = len(states)
        mat = np.zeros((n, n))
        for (a, b), rate in self.rates.items():
            mat[index[a], index[b]] = rate
        exit_rates = mat.sum(axis=1)
        order = sorted(range(n), key=lambda i: str(states[i]))
        dest = np.array(order, dtype=np.int64)
        cum = np.cumsum(mat[:, dest], axis=1)
        return index, exit_rates, dest, cum

    def exit_rate(self, state) -> float:
        if self.kind == SYMMETRIC_WALK:
            return 1.0
        index, exit_rates, _dest, _cum = self._tables
        return float(exit_rates[index[state]])

    def rate(self, a, b) -> float:
        """Transition rate K(a, b)."""
        if self.kind == SYMMETRIC_WALK:
            return 0.5 if abs(int(b) - int(a)) == 1 else 0.0
        return float(self.rates.get((a, b), 0.0))

    def neighbours(self, state):
        """States reachable in one jump (positive rate)."""
        if self.kind == SYMMETRIC_WALK:
            s = int(state)
            return (s - 1, s + 1)
        return tuple(b for (a, b), r in self.rates.items() if a == state and r > 0.0)

    @property
    def positive_recurrent(self) -> bool:
        return self.kind == FINITE_CHAIN


def _strongly_connected(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    for mat in (adj, adj.T):
        seen = np.zeros(n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            i = stack.pop()
            for j in np.nonzero(mat[i])[0]:
                if not seen[j]:
                    seen[j] = True
                    stack.append(int(j))
        if not seen.all():
            return False
    return True


@dataclass(frozen=True)
class ModulatorPath:
    """Realized cadlag trajectory: initial state plus (jump time, new state).

    States are stored as integer codes; `labels` decodes them for finite
    chains and is None for the walk (codes are the walk positions).
    """

    initial: int
    times: np.ndarray
    states: np.ndarray
    horizon: float
    labels: tuple | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=np.int64)
        if times.shape != states.shape:
            raise ValueError("jump times and states must align")
        if times.size:
            if not (np.all(np.diff(times) > 0.0) and times[0] > 0.0 and times[-1] <= self.horizon):
                raise ValueError("jump times must be strictly increasing within (0, horizon]")
            prev = np.concatenate(([self.initial], states[:-1]))
            if np.any(prev == states):
                raise ValueError("self-jumps are not allowed")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def n_jumps(self) -> int:
        return int(self.times.size)

    def label_of(self, code: int):
        return code if self.labels is None else self.labels[code]

    def segments(self, upto: float | None = None):
        """(starts, ends, state codes) of the holding intervals on [0, upto]."""
        upto = self.horizon if upto is None else float(upto)
        k = int(np.searchsorted(self.times, upto, side="right"))
        starts = np.concatenate(([0.0], self.times[:k]))
        ends = np.concatenate((self.times[:k], [upto]))
        codes = np.concatenate(([self.initial], self.states[:k]))
        return starts, ends, codes

    def state_at(self, t: float) -> int:
        """State code at time t (cadlag: jumps take effect at their time)."""
        k = int(np.searchsorted(self.times, t, side="right"))
        return int(self.initial if k == 0 else self.states[k - 1])


@dataclass(frozen=True)
class StationaryMeasure:
    """Invariant measure: probability weights for chains, counting for the walk."""

    weights: Mapping | None
    infinite: bool
    residual: float = 0.0

    def weight(self, state) -> float:
        if self.weights is None:
            return 1.0
        return float(self.weights.get(state, 0.0))

    def integrate(self, f: Callable, support: Iterable | None = None) -> float:
        """Integral of f against the measure; `support` is mandatory when infinite."""
        if self.weights is not None:
            return math.fsum(w * f(s) for s, w in self.weights.items())
        if support is None:
            raise ValueError("infinite measure: a finite support for f is required")
        return math.fsum(f(s) for s in support)


def stationary_measure(spec: ModulatorSpec) -> StationaryMeasure:
    """Invariant measure of the modulator.

    Finite chains: the unique probability solution of the balance equations
    sum_theta pi(theta) K(theta, beta) = pi(beta) q(beta).  Symmetric walk:
    the counting measure, flagged infinite.
    """
    if spec.kind == SYMMETRIC_WALK:
        return StationaryMeasure(weights=None, infinite=True)
    index, exit_rates, _dest, _cum = spec._tables
    n = len(spec.states)
    gen = np.zeros((n, n))
    for (a, b), rate in spec.rates.items():
        gen[index[a], index[b]] = rate
    np.fill_diagonal(gen, -exit_rates)
    # Solve pi Q = 0 with normalization sum pi = 1.
    sys = np.vstack([gen.T[:-1], np.ones(n)])
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(sys, rhs, rcond=None)
    flow_in = pi @ gen
    residual = float(np.max(np.abs(flow_in)))
    if residual >= 1e-10:
        raise ArithmeticError(f"balance equations not solved to 1e-10 (residual {residual:.3e})")
    weights = {s: float(pi[index[s]]) for s in spec.states}
    return StationaryMeasure(weights=weights, infinite=False, residual=residual)


def _exp_from_uniform(u: np.ndarray, rate: float) -> np.ndarray:
    # Inverse CDF on the uniform stream; u in [0, 1) so 1-u in (0, 1].
    return -np.log1p(-u) / rate


def _simulate_walk(spec: ModulatorSpec, horizon: float, rng: np.random.Generator) -> ModulatorPath:
    times = []
    total = 0.0
    # Exponential(1) holding times drawn in blocks until the horizon is covered.
    block = max(64, int(horizon + 6.0 * math.sqrt(horizon + 16.0)) + 16)
    while total <= horizon:
        gaps = _exp_from_uniform(rng.random(block), 1.0)
        times.append(gaps)
        total += float(gaps.sum())
    jump_times = np.cumsum(np.concatenate(times))
    jump_times = jump_times[jump_times <= horizon]
    n = jump_times.size
    # Cumulative-rate scan over {x-1, x+1}: u < 1/2 selects the lower label.
    steps = np.where(rng.random(n) < 0.5, -1, 1)
    states = spec.initial + np.cumsum(steps)
    return ModulatorPath(initial=spec.initial, times=jump_times, states=states,
                         horizon=horizon, labels=None)


def _single_destination_cycle(spec: ModulatorSpec):
    """Deterministic embedded cycle when every state has one destination."""
    index, exit_rates, dest, cum = spec._tables
    succ = {}
    for (a, b), rate in spec.rates.items():
        if rate > 0.0:
            if a in succ:
                return None
            succ[a] = b
    order = [spec.initial]
    while True:
        nxt = succ[order[-1]]
        if nxt == order[0]:
            break
        order.append(nxt)
    return [index[s] for s in order], exit_rates


def _simulate_chain(spec: ModulatorSpec, horizon: float, rng: np.random.Generator) -> ModulatorPath:
    index, exit_rates, dest, cum = spec._tables
    start = index[spec.initial]

    cycle = _single_destination_cycle(spec)
    if cycle is not None:
        # Vectorized path: the embedded chain is deterministic, only holding
        # times are random.
        codes_cycle, q = cycle
        scales = np.array([1.0 / q[c] for c in codes_cycle])
        mean_cycle = float(scales.sum())
        times = []
        total = 0.0
        per_block = max(len(codes_cycle),
                        int(math.ceil((horizon / mean_cycle + 6.0 * math.sqrt(horizon / mean_cycle + 16.0) + 8.0))) * len(codes_cycle))
        pos = 0
        while total <= horizon:
            u = rng.random(per_block)
            tiled = np.resize(np.roll(scales, -pos), per_block)
            gaps = -np.log1p(-u) * tiled
            times.append(gaps)
            total += float(gaps.sum())
            pos = (pos + per_block) % len(codes_cycle)
        jump_times = np.cumsum(np.concatenate(times))
        jump_times = jump_times[jump_times <= horizon]
        n = jump_times.size
        codes = np.resize(np.roll(np.array(codes_cycle, dtype=np.int64), -1), max(n, 1))[:n]
        return ModulatorPath(initial=start, times=jump_times, states=codes,
                             horizon=horizon, labels=spec.states)

    times_out = []
    states_out = []
    t = 0.0
    s = start
    buf = rng.random(2048)
    k = 0
    while True:
        if k + 2 > buf.size:
            buf = rng.random(2048)
            k = 0
        q = exit_rates[s]
        if q <= 0.0:
            raise ArithmeticError(f"absorbing state {spec.states[s]!r} encountered")
        t += -math.log1p(-buf[k]) / q
        if t > horizon:
            break
        u = buf[k + 1] * q
        j = int(np.searchsorted(cum[s], u, side="right"))
        j = min(j, cum.shape[1] - 1)
        s = int(dest[j])
        times_out.append(t)
        states_out.append(s)
        k += 2
    return ModulatorPath(initial=start,
                         times=np.array(times_out, dtype=float),
                         states=np.array(states_out, dtype=np.int64),
                         horizon=horizon, labels=spec.states)


def simulate_modulator(spec: ModulatorSpec, horizon: float, rng: np.random.Generator) -> ModulatorPath:
    """Exact event-driven simulation of the modulator up to `horizon`."""
    horizon = float(horizon)
    if not math.isfinite(horizon) or horizon < 0.0:
        raise ValueError("horizon must be finite and nonnegative")
    if spec.kind == SYMMETRIC_WALK:
        if horizon == 0.0:
            return ModulatorPath(initial=spec.initial, times=np.empty(0), states=np.empty(0, dtype=np.int64),
                                 horizon=0.0, labels=None)
        return _simulate_walk(spec, horizon, rng)
    if horizon == 0.0:
        index = spec._tables[0]
        return ModulatorPath(initial=index[spec.initial], times=np.empty(0),
                             states=np.empty(0, dtype=np.int64), horizon=0.0, labels=spec.states)
    return _simulate_chain(spec, horizon, rng)


def occupation_functional(path: ModulatorPath, f: Callable) -> float:
    """Exact integral of f(state) over the path's holding intervals.

    Aggregates total time per distinct visited state first, so the result is
    additive in f by construction.
    """
    starts, ends, codes = path.segments()
    distinct, inverse = np.unique(codes, return_inverse=True)
    durations = np.bincount(inverse, weights=ends - starts, minlength=distinct.size)
    return math.fsum(f(path.label_of(int(c))) * float(d) for c, d in zip(distinct, durations))


@dataclass(frozen=True)
class ResolventEstimate:
    t: float
    value: float
    se: float


def darling_kac_estimate(spec: ModulatorSpec, g: Callable, t_grid, paths: int,
                         rng: np.random.Generator, support: Iterable | None = None) -> list[ResolventEstimate]:
    """Monte Carlo estimate of E[int_0^inf e^{-s/t} g(Theta_s) ds] / pi(g).

    `support` must list the states where g is nonzero when the invariant
    measure is infinite (symmetric walk).
    """
    measure = stationary_measure(spec)
    if support is None and measure.infinite:
        raise ValueError("symmetric walk: pass the finite support of g")
    pi_g = measure.integrate(g, support=support)
    if not (pi_g > 0.0 and math.isfinite(pi_g)):
        raise ValueError(f"pi(g) must be positive and finite, got {pi_g}")

    out = []
    for t in t_grid:
        t = float(t)
        if t <= 0.0:
            out.append(ResolventEstimate(t=t, value=0.0, se=0.0))
            continue
        s_max = t * math.log(1.0 / _DISCOUNT_FLOOR)
        vals = np.empty(paths)
        for i in range(paths):
            path = simulate_modulator(spec, s_max, rng)
            starts, ends, codes = path.segments()
            distinct, inverse = np.unique(codes, return_inverse=True)
            gvals = np.array([g(path.label_of(int(c))) for c in distinct])[inverse]
            mask = gvals != 0.0
            contrib = gvals[mask] * t * (np.exp(-starts[mask] / t) - np.exp(-ends[mask] / t))
            vals[i] = contrib.sum()
        mean = float(vals.mean()) / pi_g
        se = float(vals.std(ddof=1) / math.sqrt(paths)) / pi_g if paths > 1 else 0.0
        out.append(ResolventEstimate(t=t, value=mean, se=se))
    return out
