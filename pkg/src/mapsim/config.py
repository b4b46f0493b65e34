"""Experiment configuration: a flat sectioned key-value text format.

Sections [modulator], [characteristics] and [experiment]; structured keys
(rates, drift, diffusion, local_jump, transition_jump) repeat, scalar keys
may not.  Every malformed input yields a diagnostic locating the section,
key and line.  `serialize_config` emits the canonical normalized form;
parse-then-serialize is byte-identical on it.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping

from .jumplaws import family_name, law_params, make_law
from .model import LocalJumps, MapCharacteristics, TransitionJump
from .modulator import FINITE_CHAIN, SYMMETRIC_WALK, ModulatorSpec

_LABEL_RE = re.compile(r"^[A-Za-z0-9_.+-]+$")
_SECTIONS = ("modulator", "characteristics", "experiment")
_REPEATED = {
    "modulator": {"rates"},
    "characteristics": {"drift", "diffusion", "local_jump", "transition_jump"},
    "experiment": set(),
}
_MODULATOR_KEYS = {"kind", "states", "initial", "rates"}
_CHARACTERISTIC_KEYS = {"drift", "diffusion", "local_jump", "transition_jump"}

# Experiment keys: name -> (type tag, default); None default means required
# only when a command needs it.
_EXPERIMENT_KEYS = {
    "seed": ("int", None),
    "out_dir": ("str", "out"),
    "threads": ("int", 1),
    "horizon": ("float", 10.0),
    "grid_points": ("int", 20),
    "n_paths": ("int", 100),
    "n_samples": ("int", 1000),
    "scaling_n": ("float", 1000.0),
    "clt_time": ("float", 1.0),
    "horizons": ("float_list", (100.0, 1000.0, 10000.0)),
    "epsilon": ("float", 0.1),
    "lindeberg_paths": ("int", 200),
    "alpha": ("float", 0.5),
    "scale": ("float", 1.0),
    "h8_p": ("float", 1.0),
    "slln_tol": ("float", 0.02),
    "slln_ratio_tol": ("float", 0.1),
    "slln_a_bound": ("float", 0.05),
    "oracle_samples": ("int", 0),
    "charfn_frozen": ("int", 10),
    "charfn_replicas": ("int", 10000),
}


class ConfigError(ValueError):
    def __init__(self, message: str, section: str | None = None,
                 key: str | None = None, line: int | None = None):
        self.section, self.key, self.line = section, key, line
        where = []
        if section:
            where.append(f"section '{section}'")
        if key:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"config error ({', '.join(where)}): " if where else "config error: "
        super().__init__(prefix + message)


@dataclass(frozen=True)
class ExperimentConfig:
    modulator: ModulatorSpec
    characteristics: MapCharacteristics
    experiment: Mapping = field(default_factory=dict)

    def setting(self, key: str):
        if key not in _EXPERIMENT_KEYS:
            raise KeyError(f"unknown experiment key '{key}'")
        if key in self.experiment:
            return self.experiment[key]
        _tag, default = _EXPERIMENT_KEYS[key]
        if default is None:
            raise ConfigError("value is required and has no default",
                              section="experiment", key=key)
        return default


def _parse_float(tok: str, section, key, line) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ConfigError(f"expected a number, got {tok!r}", section, key, line) from None
    if math.isnan(v):
        raise ConfigError("nan is not allowed", section, key, line)
    return v


def _parse_int(tok: str, section, key, line) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ConfigError(f"expected an integer, got {tok!r}", section, key, line) from None


def _check_label(tok: str, section, key, line) -> str:
    if not _LABEL_RE.match(tok):
        raise ConfigError(f"invalid state label {tok!r}", section, key, line)
    return tok


def parse_config(text: str) -> ExperimentConfig:
    """Total parser: returns a validated config or raises a located ConfigError."""
    section = None
    entries: dict[str, list] = {s: [] for s in _SECTIONS}
    seen_scalar: dict[tuple[str, str], int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError("unterminated section header", line=lineno)
            name = stripped[1:-1].strip()
            if name not in _SECTIONS:
                raise ConfigError(f"unknown section '{name}'", line=lineno)
            if entries[name]:
                raise ConfigError(f"duplicate section '{name}'", section=name, line=lineno)
            section = name
            entries[name].append(("__header__", [], lineno))
            continue
        if section is None:
            raise ConfigError("key outside of any section", line=lineno)
        if "=" not in stripped:
            raise ConfigError("expected 'key = value'", section=section, line=lineno)
        key, _, value = stripped.partition("=")
        key = key.strip()
        toks = value.split()
        if key not in _REPEATED[section]:
            if (section, key) in seen_scalar:
                raise ConfigError(
                    f"duplicate key (first at line {seen_scalar[(section, key)]})",
                    section=section, key=key, line=lineno)
            seen_scalar[(section, key)] = lineno
        entries[section].append((key, toks, lineno))

    if not entries["modulator"]:
        raise ConfigError("missing section: modulator")
    if not entries["experiment"]:
        raise ConfigError("missing section: experiment")

    modulator = _build_modulator(entries["modulator"])
    characteristics = _build_characteristics(entries["characteristics"], modulator)
    experiment = _build_experiment(entries["experiment"])

    try:
        characteristics.validate(modulator)
    except ValueError as exc:
        raise ConfigError(str(exc), section="characteristics") from exc
    return ExperimentConfig(modulator=modulator, characteristics=characteristics,
                            experiment=experiment)


def _build_modulator(items) -> ModulatorSpec:
    sec = "modulator"
    kind = None
    states: list[str] = []
    initial_tok = None
    rates = {}
    for key, toks, line in items:
        if key == "__header__":
            continue
        if key == "kind":
            if len(toks) != 1 or toks[0] not in (FINITE_CHAIN, SYMMETRIC_WALK):
                raise ConfigError(f"kind must be {FINITE_CHAIN} or {SYMMETRIC_WALK}",
                                  sec, key, line)
            kind = toks[0]
        elif key == "states":
            states = [_check_label(t, sec, key, line) for t in toks]
        elif key == "initial":
            if len(toks) != 1:
                raise ConfigError("initial takes one state", sec, key, line)
            initial_tok = (toks[0], line)
        elif key == "rates":
            if len(toks) != 3:
                raise ConfigError("rates takes: from to rate", sec, key, line)
            a = _check_label(toks[0], sec, key, line)
            b = _check_label(toks[1], sec, key, line)
            r = _parse_float(toks[2], sec, key, line)
            if r < 0.0:
                raise ConfigError("rates must be nonnegative", sec, key, line)
            if (a, b) in rates:
                raise ConfigError(f"duplicate rate entry for ({a}, {b})", sec, key, line)
            rates[(a, b)] = r
        else:
            raise ConfigError(f"unknown key (expected one of {sorted(_MODULATOR_KEYS)})",
                              sec, key, line)
    if kind is None:
        raise ConfigError("missing key: kind", sec)
    try:
        if kind == SYMMETRIC_WALK:
            if states or rates:
                raise ConfigError("symmetric_walk takes no states/rates", sec, "states")
            initial = 0
            if initial_tok is not None:
                initial = _parse_int(initial_tok[0], sec, "initial", initial_tok[1])
            return ModulatorSpec.symmetric_walk(initial=initial)
        if not states:
            raise ConfigError("missing key: states", sec, "states")
        initial = initial_tok[0] if initial_tok is not None else None
        return ModulatorSpec.finite_chain(states, rates, initial=initial)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), sec) from exc


def _state_token(tok: str, modulator: ModulatorSpec, sec, key, line):
    if modulator.kind == SYMMETRIC_WALK:
        return _parse_int(tok, sec, key, line)
    if tok not in modulator.states:
        raise ConfigError(f"unknown state reference {tok!r}", sec, key, line)
    return tok


def _build_characteristics(items, modulator: ModulatorSpec) -> MapCharacteristics:
    sec = "characteristics"
    drift, diffusion, local, trans = {}, {}, {}, {}
    for key, toks, line in items:
        if key == "__header__":
            continue
        if key == "drift" or key == "diffusion":
            if len(toks) != 2:
                raise ConfigError(f"{key} takes: state value", sec, key, line)
            s = _state_token(toks[0], modulator, sec, key, line)
            table = drift if key == "drift" else diffusion
            if s in table:
                raise ConfigError(f"duplicate {key} entry for state {s!r}", sec, key, line)
            table[s] = _parse_float(toks[1], sec, key, line)
        elif key == "local_jump":
            if len(toks) < 3:
                raise ConfigError("local_jump takes: state rate law params...", sec, key, line)
            s = _state_token(toks[0], modulator, sec, key, line)
            if s in local:
                raise ConfigError(f"duplicate local_jump entry for state {s!r}", sec, key, line)
            rate = _parse_float(toks[1], sec, key, line)
            law = _parse_law(toks[2], toks[3:], sec, key, line)
            try:
                local[s] = LocalJumps(rate, law)
            except ValueError as exc:
                raise ConfigError(str(exc), sec, key, line) from exc
        elif key == "transition_jump":
            if len(toks) < 4:
                raise ConfigError("transition_jump takes: from to prob law params...",
                                  sec, key, line)
            a = _state_token(toks[0], modulator, sec, key, line)
            b = _state_token(toks[1], modulator, sec, key, line)
            if (a, b) in trans:
                raise ConfigError(f"duplicate transition_jump entry for ({a}, {b})",
                                  sec, key, line)
            prob = _parse_float(toks[2], sec, key, line)
            law = _parse_law(toks[3], toks[4:], sec, key, line)
            try:
                trans[(a, b)] = TransitionJump(prob, law)
            except ValueError as exc:
                raise ConfigError(str(exc), sec, key, line) from exc
        else:
            raise ConfigError(f"unknown key (expected one of {sorted(_CHARACTERISTIC_KEYS)})",
                              sec, key, line)
    try:
        return MapCharacteristics(drift=drift, diffusion=diffusion,
                                  local_jumps=local, transition_jumps=trans)
    except ValueError as exc:
        raise ConfigError(str(exc), sec) from exc


def _parse_law(family: str, params, sec, key, line):
    try:
        return make_law(family, [_parse_float(p, sec, key, line) for p in params])
    except ValueError as exc:
        raise ConfigError(str(exc), sec, key, line) from exc


def _build_experiment(items) -> dict:
    sec = "experiment"
    out = {}
    for key, toks, line in items:
        if key == "__header__":
            continue
        if key not in _EXPERIMENT_KEYS:
            raise ConfigError(f"unknown key (expected one of {sorted(_EXPERIMENT_KEYS)})",
                              sec, key, line)
        tag, _default = _EXPERIMENT_KEYS[key]
        if tag == "int":
            if len(toks) != 1:
                raise ConfigError("expected one integer", sec, key, line)
            out[key] = _parse_int(toks[0], sec, key, line)
        elif tag == "float":
            if len(toks) != 1:
                raise ConfigError("expected one number", sec, key, line)
            out[key] = _parse_float(toks[0], sec, key, line)
        elif tag == "float_list":
            if not toks:
                raise ConfigError("expected at least one number", sec, key, line)
            out[key] = tuple(_parse_float(t, sec, key, line) for t in toks)
        else:
            if len(toks) != 1:
                raise ConfigError("expected one token", sec, key, line)
            out[key] = toks[0]
    if "seed" not in out:
        raise ConfigError("seed is mandatory (no wall-clock default)",
                          section=sec, key="seed")
    return out


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        raise TypeError("no boolean config values")
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical normalized text: fixed section and key order, repr floats."""
    lines = ["[modulator]"]
    mod = cfg.modulator
    lines.append(f"kind = {mod.kind}")
    if mod.kind == FINITE_CHAIN:
        lines.append("states = " + " ".join(str(s) for s in mod.states))
        lines.append(f"initial = {mod.initial}")
        for (a, b) in sorted(mod.rates, key=lambda p: (str(p[0]), str(p[1]))):
            lines.append(f"rates = {a} {b} {_fmt_value(mod.rates[(a, b)])}")
    else:
        lines.append(f"initial = {mod.initial}")

    lines.append("")
    lines.append("[characteristics]")
    ch = cfg.characteristics
    for s in sorted(ch.drift, key=str):
        lines.append(f"drift = {s} {_fmt_value(ch.drift[s])}")
    for s in sorted(ch.diffusion, key=str):
        lines.append(f"diffusion = {s} {_fmt_value(ch.diffusion[s])}")
    for s in sorted(ch.local_jumps, key=str):
        lj = ch.local_jumps[s]
        params = " ".join(_fmt_value(p) for p in law_params(lj.law))
        lines.append(f"local_jump = {s} {_fmt_value(lj.rate)} {family_name(lj.law)} {params}")
    for (a, b) in sorted(ch.transition_jumps, key=lambda p: (str(p[0]), str(p[1]))):
        tj = ch.transition_jumps[(a, b)]
        params = " ".join(_fmt_value(p) for p in law_params(tj.law))
        lines.append(f"transition_jump = {a} {b} {_fmt_value(tj.prob)} "
                     f"{family_name(tj.law)} {params}")

    lines.append("")
    lines.append("[experiment]")
    for key in sorted(cfg.experiment):
        v = cfg.experiment[key]
        if isinstance(v, tuple):
            lines.append(f"{key} = " + " ".join(_fmt_value(x) for x in v))
        else:
            lines.append(f"{key} = {_fmt_value(v)}")
    return "\n".join(lines) + "\n"


EXAMPLE_CONFIG = """\
[modulator]
kind = finite_chain
states = up down
initial = up
rates = down up 2.0
rates = up down 1.0

[characteristics]
drift = down -0.25
drift = up 0.5
diffusion = down 0.2
diffusion = up 0.8
local_jump = down 0.7 two_point 1.5 0.4 -0.5
local_jump = up 1.5 gaussian 0.1 0.6
transition_jump = down up 0.5 gaussian -0.2 0.3
transition_jump = up down 0.8 point_mass 0.75

[experiment]
grid_points = 10
horizon = 10.0
n_paths = 2000
out_dir = out
seed = 42
threads = 1
"""
