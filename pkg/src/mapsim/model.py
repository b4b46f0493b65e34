"""Semimartingale characteristics of the ordinate and derived limit constants.

Per modulator state: a genuine linear drift d, a diffusion variance rate c,
an optional finite-activity local jump component (rate, law), and per ordered
state pair an optional transition jump (activation probability, law).  All
limit constants are stationary-measure weightings of the per-state densities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .jumplaws import SMALL_JUMP_CUTOFF, JumpLaw
from .modulator import ModulatorSpec, StationaryMeasure, stationary_measure
from .reports import (RULE_ALL_COMPONENTS, RULE_NONINCREASING, RULE_THREE_SE,
                      TestReport)


class HypothesisViolation(ValueError):
    """A moment or integrability hypothesis required by an operation fails."""

    def __init__(self, hypothesis: str, detail: str):
        self.hypothesis = hypothesis
        super().__init__(f"{hypothesis} violated: {detail}")


@dataclass(frozen=True)
class LocalJumps:
    rate: float
    law: JumpLaw

    def __post_init__(self):
        if not self.rate > 0.0:
            raise ValueError("local jump rate must be positive")


@dataclass(frozen=True)
class TransitionJump:
    prob: float
    law: JumpLaw

    def __post_init__(self):
        if not (0.0 <= self.prob <= 1.0):
            raise ValueError("transition jump activation probability must lie in [0, 1]")


@dataclass(frozen=True)
class MapCharacteristics:
    drift: Mapping = field(default_factory=dict)
    diffusion: Mapping = field(default_factory=dict)
    local_jumps: Mapping = field(default_factory=dict)
    transition_jumps: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "drift", dict(self.drift))
        object.__setattr__(self, "diffusion", dict(self.diffusion))
        object.__setattr__(self, "local_jumps", dict(self.local_jumps))
        object.__setattr__(self, "transition_jumps",
                           {tuple(k): v for k, v in dict(self.transition_jumps).items()})
        for state, c in self.diffusion.items():
            if not (math.isfinite(c) and c >= 0.0):
                raise ValueError(f"diffusion at state {state!r} must be finite and >= 0")
        for state, d in self.drift.items():
            if not math.isfinite(d):
                raise ValueError(f"drift at state {state!r} must be finite")
        for state, lj in self.local_jumps.items():
            if lj.law.mass_at_zero() > 0.0:
                raise ValueError(
                    f"local jump law at state {state!r} puts mass at 0 (forbidden)")

    def validate(self, modulator: ModulatorSpec) -> None:
        """Check every referenced state/pair is consistent with the modulator."""
        def check_state(state, where):
            if modulator.kind == "symmetric_walk":
                if not isinstance(state, int):
                    raise ValueError(f"{where}: walk states are integers, got {state!r}")
            elif state not in modulator.states:
                raise ValueError(f"{where}: unknown state {state!r}")

        for state in self.drift:
            check_state(state, "drift")
        for state in self.diffusion:
            check_state(state, "diffusion")
        for state in self.local_jumps:
            check_state(state, "local_jump")
        for (a, b) in self.transition_jumps:
            check_state(a, "transition_jump")
            check_state(b, "transition_jump")
            if modulator.rate(a, b) <= 0.0:
                raise ValueError(
                    f"transition_jump: pair ({a!r}, {b!r}) has zero transition rate")

    def support(self) -> tuple:
        """States carrying any activity (drift, diffusion or jumps)."""
        states = set(self.drift) | set(self.diffusion) | set(self.local_jumps)
        for (a, _b) in self.transition_jumps:
            states.add(a)
        return tuple(sorted(states, key=str))

    def drift_at(self, state) -> float:
        return float(self.drift.get(state, 0.0))

    def diffusion_at(self, state) -> float:
        return float(self.diffusion.get(state, 0.0))

    def local_at(self, state) -> LocalJumps | None:
        return self.local_jumps.get(state)

    def transition_at(self, a, b) -> TransitionJump | None:
        return self.transition_jumps.get((a, b))

    def transitions_from(self, state):
        return {pair: tj for pair, tj in self.transition_jumps.items() if pair[0] == state}

    def scaled(self, s: float) -> "MapCharacteristics":
        """Characteristics of s*xi: drift and jumps scale by s, diffusion by s^2."""
        if not s > 0.0:
            raise ValueError("scaling factor must be positive")
        return MapCharacteristics(
            drift={k: s * v for k, v in self.drift.items()},
            diffusion={k: s * s * v for k, v in self.diffusion.items()},
            local_jumps={k: LocalJumps(lj.rate, lj.law.scaled(s))
                         for k, lj in self.local_jumps.items()},
            transition_jumps={k: TransitionJump(tj.prob, tj.law.scaled(s))
                              for k, tj in self.transition_jumps.items()},
        )


def truncated_drift(chars: MapCharacteristics, state) -> float:
    """Density b of the continuous compensator of the small-jump part:
    b = d + lambda_loc * E[X 1{|X| <= 1}]."""
    b = chars.drift_at(state)
    lj = chars.local_at(state)
    if lj is not None:
        b += lj.rate * lj.law.mean_within(SMALL_JUMP_CUTOFF)
    return b


def mu_d(chars: MapCharacteristics, modulator: ModulatorSpec, state) -> float:
    """Big-jump plus transition-mean drift density:
    mu_d = lambda_loc * E[X 1{|X| > 1}] + sum_beta K(state,beta) p E[X]."""
    total = 0.0
    lj = chars.local_at(state)
    if lj is not None:
        big = lj.law.mean_beyond(SMALL_JUMP_CUTOFF)
        if not math.isfinite(big):
            raise HypothesisViolation("H5", f"local big-jump mean at state {state!r} diverges")
        total += lj.rate * big
    for (a, b), tj in chars.transitions_from(state).items():
        m = tj.law.mean()
        if not math.isfinite(m):
            raise HypothesisViolation("H7", f"transition jump mean for pair ({a!r},{b!r}) diverges")
        total += modulator.rate(a, b) * tj.prob * m
    return total


def _mu_d_two_integral(chars: MapCharacteristics, modulator: ModulatorSpec, state) -> float:
    """Direct evaluation from the two jump-kernel integrals (identity check)."""
    lj = chars.local_at(state)
    big = lj.rate * lj.law.mean_beyond(SMALL_JUMP_CUTOFF) if lj is not None else 0.0
    trans_big = 0.0
    trans_small = 0.0
    for (a, b), tj in chars.transitions_from(state).items():
        k = modulator.rate(a, b) * tj.prob
        trans_big += k * tj.law.mean_beyond(SMALL_JUMP_CUTOFF)
        trans_small += k * tj.law.mean_within(SMALL_JUMP_CUTOFF)
    return (big + trans_big) + trans_small


def compensator_rate(chars: MapCharacteristics, modulator: ModulatorSpec, state) -> float:
    """Density of the compensator A: b + mu_d (truncation-independent)."""
    return truncated_drift(chars, state) + mu_d(chars, modulator, state)


def bracket_rate(chars: MapCharacteristics, modulator: ModulatorSpec, state) -> float:
    """Density of <xi - A>: c + full second-moment jump rate."""
    total = chars.diffusion_at(state)
    lj = chars.local_at(state)
    if lj is not None:
        m2 = lj.law.second_moment()
        if not math.isfinite(m2):
            raise HypothesisViolation("H8", f"local second moment at state {state!r} diverges (p=1)")
        total += lj.rate * m2
    for (a, b), tj in chars.transitions_from(state).items():
        m2 = tj.law.second_moment()
        if not math.isfinite(m2):
            raise HypothesisViolation("H8", f"transition second moment for ({a!r},{b!r}) diverges (p=1)")
        total += modulator.rate(a, b) * tj.prob * m2
    return total


def transition_mean(chars: MapCharacteristics, a, b) -> float:
    """Mean ordinate jump charged by the transition kernel for a -> b."""
    tj = chars.transition_at(a, b)
    return tj.prob * tj.law.mean() if tj is not None else 0.0


def z_compensator_rate(chars: MapCharacteristics, modulator: ModulatorSpec, state) -> float:
    return math.fsum(modulator.rate(a, b) * transition_mean(chars, a, b)
                     for (a, b) in chars.transitions_from(state))


def z_bracket_rate(chars: MapCharacteristics, modulator: ModulatorSpec, state) -> float:
    return math.fsum(modulator.rate(a, b) * transition_mean(chars, a, b) ** 2
                     for (a, b) in chars.transitions_from(state))


@dataclass(frozen=True)
class LimitConstants:
    mu_d: dict
    b: dict
    m1: float
    m1_total_variation: float
    nu_bc_norm: float
    nu_c_norm: float
    nu_bracket_norm: float
    J: float
    alpha: float
    h_scale: float
    h_exponent: float

    def h(self, t: float) -> float:
        return self.h_scale * t ** self.h_exponent

    @property
    def clt_variance_bracket(self) -> float:
        """Candidate limit variance from the martingale bracket."""
        return self.nu_bracket_norm

    @property
    def clt_variance_stated(self) -> float:
        """Candidate limit variance as stated in the convergence theorem."""
        return self.nu_bracket_norm + 2.0 * self.J


def _weighted_states(chars: MapCharacteristics, modulator: ModulatorSpec,
                     measure: StationaryMeasure):
    """(state, pi-weight) pairs covering every state that can contribute."""
    if measure.infinite:
        return [(s, 1.0) for s in chars.support()]
    return [(s, measure.weight(s)) for s in modulator.states]


def limit_constants(chars: MapCharacteristics, modulator: ModulatorSpec) -> LimitConstants:
    """All stationary constants: m1, Revuz norms, J and the Darling-Kac pair."""
    chars.validate(modulator)
    measure = stationary_measure(modulator)
    pairs = _weighted_states(chars, modulator, measure)

    b_table = {s: truncated_drift(chars, s) for s, _w in pairs}
    mu_table = {s: mu_d(chars, modulator, s) for s, _w in pairs}
    int_mu = math.fsum(w * mu_table[s] for s, w in pairs)
    m1 = math.fsum(w * (b_table[s] + mu_table[s]) for s, w in pairs)
    nu_bc = math.fsum(w * abs(b_table[s]) for s, w in pairs)
    nu_c = math.fsum(w * chars.diffusion_at(s) for s, w in pairs)
    nu_bracket = math.fsum(w * bracket_rate(chars, modulator, s) for s, w in pairs)
    j_const = math.fsum(w * z_bracket_rate(chars, modulator, s) for s, w in pairs)
    if not math.isfinite(nu_bracket):
        raise HypothesisViolation("H6", "second-moment Revuz measure diverges")

    if modulator.kind == "symmetric_walk":
        alpha, h_scale, h_exp = 0.5, 1.0 / math.sqrt(2.0), 0.5
    else:
        alpha, h_scale, h_exp = 1.0, 1.0, 1.0
    return LimitConstants(mu_d=mu_table, b=b_table, m1=m1,
                          m1_total_variation=nu_bc + int_mu,
                          nu_bc_norm=nu_bc, nu_c_norm=nu_c,
                          nu_bracket_norm=nu_bracket, J=j_const,
                          alpha=alpha, h_scale=h_scale, h_exponent=h_exp)


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    holds: bool
    quantities: dict
    note: str = ""


@dataclass(frozen=True)
class HypothesisReport:
    checks: tuple

    def check(self, name: str) -> HypothesisCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def holds(self, *names: str) -> bool:
        return all(self.check(n).holds for n in names)

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks)


def validate_hypotheses(chars: MapCharacteristics, modulator: ModulatorSpec,
                        p: float = 1.0) -> HypothesisReport:
    """Numeric verdicts for the moment hypotheses H5-H8 (never raises)."""
    if not p > 0.0:
        raise ValueError("H8 exponent p must be positive")
    chars.validate(modulator)
    measure = stationary_measure(modulator)
    pairs = _weighted_states(chars, modulator, measure)

    # H5: per-state first moments (pi-free finiteness).
    h5_total = 0.0
    for s, _w in pairs:
        h5_total += abs(truncated_drift(chars, s))
        lj = chars.local_at(s)
        if lj is not None:
            h5_total += lj.rate * lj.law.abs_beyond(1.0, SMALL_JUMP_CUTOFF)
        for (a, b), tj in chars.transitions_from(s).items():
            h5_total += modulator.rate(a, b) * tj.prob * tj.law.abs_moment(1.0)
    h5 = HypothesisCheck("H5", math.isfinite(h5_total),
                         {"per_state_first_moment_sum": h5_total})

    # H6: ||nu_C|| plus the pi-weighted small-jump second moment.
    nu_c = math.fsum(w * chars.diffusion_at(s) for s, w in pairs)
    small2 = 0.0
    for s, w in pairs:
        lj = chars.local_at(s)
        if lj is not None:
            small2 += w * lj.rate * lj.law.second_within(SMALL_JUMP_CUTOFF)
    h6 = HypothesisCheck("H6", math.isfinite(nu_c) and math.isfinite(small2),
                         {"nu_c_norm": nu_c, "small_jump_second_moment": small2})

    # H7: ||nu_Bc|| and the pi-integral of mu_d; reports both m1 versions.
    nu_bc = math.fsum(w * abs(truncated_drift(chars, s)) for s, w in pairs)
    try:
        int_mu = math.fsum(w * mu_d(chars, modulator, s) for s, w in pairs)
        m1_signed = math.fsum(w * (truncated_drift(chars, s) + mu_d(chars, modulator, s))
                              for s, w in pairs)
        mu_ok = math.isfinite(int_mu)
    except HypothesisViolation:
        int_mu, m1_signed, mu_ok = math.inf, math.inf, False
    h7 = HypothesisCheck("H7", math.isfinite(nu_bc) and mu_ok,
                         {"nu_bc_norm": nu_bc, "pi_mu_d": int_mu,
                          "m1_signed": m1_signed, "m1_total_variation": nu_bc + int_mu},
                         note="H7 implies H5")

    # H8: pi-weighted (1+p)-tail moment of the full jump kernel.
    h8_total = 0.0
    for s, w in pairs:
        lj = chars.local_at(s)
        if lj is not None:
            h8_total += w * lj.rate * lj.law.abs_beyond(1.0 + p, SMALL_JUMP_CUTOFF)
        for (a, b), tj in chars.transitions_from(s).items():
            h8_total += w * modulator.rate(a, b) * tj.prob * tj.law.abs_beyond(1.0 + p, SMALL_JUMP_CUTOFF)
    h8 = HypothesisCheck("H8", math.isfinite(h8_total),
                         {"p": p, "tail_moment": h8_total})

    return HypothesisReport(checks=(h5, h6, h7, h8))


def lindeberg_check(chars: MapCharacteristics, modulator: ModulatorSpec,
                    t_grid, eps: float, paths: int, rng) -> TestReport:
    """MC estimate of (1/t) * integral of x^2 1{|x| > eps sqrt(t)} against the
    jump measure along the modulator path; verdict: nonincreasing in t and
    final value within 3 SE of 0."""
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    from .modulator import simulate_modulator  # local import to keep deps one-way

    chars.validate(modulator)
    t_grid = sorted(float(t) for t in t_grid)
    estimates, ses = [], []
    for t in t_grid:
        cutoff = eps * math.sqrt(t)
        local_tail = {}
        trans_tail = {}
        infinite = False
        for s in chars.support():
            lj = chars.local_at(s)
            if lj is not None:
                v = lj.rate * lj.law.second_beyond(cutoff)
                infinite |= math.isinf(v)
                local_tail[s] = v
        for pair, tj in chars.transition_jumps.items():
            v = tj.prob * tj.law.second_beyond(cutoff)
            infinite |= math.isinf(v)
            trans_tail[pair] = v
        if infinite:
            estimates.append(math.inf)
            ses.append(math.inf)
            continue
        vals = []
        for _ in range(paths):
            path = simulate_modulator(modulator, t, rng)
            starts, ends, codes = path.segments()
            occ = 0.0
            if local_tail:
                occ = math.fsum(local_tail.get(path.label_of(int(c)), 0.0) * (e - s0)
                                for s0, e, c in zip(starts, ends, codes))
            jumps = 0.0
            if trans_tail and path.n_jumps:
                prev = [path.label_of(int(c)) for c in
                        ([path.initial] + list(path.states[:-1]))]
                cur = [path.label_of(int(c)) for c in path.states]
                jumps = math.fsum(trans_tail.get((a, b), 0.0) for a, b in zip(prev, cur))
            vals.append((occ + jumps) / t)
        mean = math.fsum(vals) / paths
        var = math.fsum((v - mean) ** 2 for v in vals) / max(paths - 1, 1)
        estimates.append(mean)
        ses.append(math.sqrt(var / paths))

    final, final_se = estimates[-1], ses[-1]
    prov = "DERIVED: MC of the truncated second-moment jump mass along modulator paths"
    final_check = TestReport.build(
        name="lindeberg/final", statistic=final, target=0.0, provenance=prov,
        uncertainty=final_se, rule=RULE_THREE_SE, sample_size=paths,
        extra={"eps": eps, "t": t_grid[-1]})
    seq_check = TestReport.build(
        name="lindeberg/nonincreasing", statistic=final, target=0.0, provenance=prov,
        uncertainty=final_se, rule=RULE_NONINCREASING, sample_size=paths,
        extra={"sequence": estimates, "t_grid": t_grid, "ses": ses})
    return TestReport.build(
        name="lindeberg", statistic=final, target=0.0, provenance=prov,
        uncertainty=final_se, rule=RULE_ALL_COMPONENTS, sample_size=paths,
        extra={"eps": eps}, components=(final_check, seq_check))
