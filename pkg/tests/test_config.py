"""Config parsing: located diagnostics and canonical round-trips."""
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mapsim import (Gaussian, LocalJumps, MapCharacteristics, ModulatorSpec,
                    PointMass, TransitionJump, TwoPoint)
from mapsim.config import (EXAMPLE_CONFIG, ConfigError, ExperimentConfig,
                           parse_config, serialize_config)

MINIMAL = """\
[modulator]
kind = finite_chain
states = a b
initial = a
rates = a b 1.0
rates = b a 2.0

[characteristics]

[experiment]
seed = 1
"""


def test_empty_file_missing_modulator():
    with pytest.raises(ConfigError, match="missing section: modulator"):
        parse_config("")


def test_duplicate_seed_located():
    text = MINIMAL + "seed = 2\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert "duplicate key" in str(err.value)
    assert "seed" in str(err.value) and "line 12" in str(err.value)


def test_example_roundtrip_byte_identical():
    cfg = parse_config(EXAMPLE_CONFIG)
    assert serialize_config(cfg) == EXAMPLE_CONFIG
    again = parse_config(serialize_config(cfg))
    assert again == cfg


def test_minimal_parses():
    cfg = parse_config(MINIMAL)
    assert cfg.modulator.states == ("a", "b")
    assert cfg.setting("seed") == 1
    assert cfg.setting("out_dir") == "out"  # default


@pytest.mark.parametrize("mutation,section,fragment", [
    ("rates = a b 1.0", "modulator", "duplicate rate entry"),
    ("rates = a c 1.0", "modulator", "unknown state"),
    ("drift = zz 1.0", "characteristics", "unknown state reference"),
    ("local_jump = a 1.0 cauchy 0.0", "characteristics", "unknown law family"),
    ("local_jump = a 1.0 point_mass 0.0", "characteristics", "mass at 0"),
    ("transition_jump = a b 1.5 point_mass 1.0", "characteristics",
     "activation probability"),
    ("nonsense = 1", "experiment", "unknown key"),
    ("rates = a b -2.0", "modulator", "nonnegative"),
    ("horizon = 1 2", "experiment", "expected one number"),
])
def test_located_errors(mutation, section, fragment):
    lines = MINIMAL.splitlines()
    idx = lines.index(f"[{section}]") + 1
    lines.insert(idx + (1 if section == "modulator" else 0), mutation)
    with pytest.raises(ConfigError) as err:
        parse_config("\n".join(lines) + "\n")
    assert fragment in str(err.value)


def test_bad_seed_value_located():
    with pytest.raises(ConfigError, match="expected an integer"):
        parse_config(MINIMAL.replace("seed = 1", "seed = abc"))


def test_transition_pair_without_rate_rejected():
    text = MINIMAL.replace("[characteristics]",
                           "[characteristics]\ntransition_jump = a a 0.5 point_mass 1.0")
    with pytest.raises(ConfigError):
        parse_config(text)


def test_walk_config():
    text = """\
[modulator]
kind = symmetric_walk
initial = -2

[characteristics]
local_jump = 0 1.0 point_mass 1.0

[experiment]
seed = 9
"""
    cfg = parse_config(text)
    assert cfg.modulator.kind == "symmetric_walk"
    assert cfg.modulator.initial == -2
    assert 0 in cfg.characteristics.local_jumps
    with pytest.raises(ConfigError, match="no states"):
        parse_config(text.replace("initial = -2", "initial = -2\nstates = a b"))


def test_missing_seed():
    with pytest.raises(ConfigError, match="seed is mandatory"):
        parse_config(MINIMAL.replace("seed = 1", "threads = 1"))


def test_unknown_section_and_stray_key():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[bogus]\n")
    with pytest.raises(ConfigError, match="outside of any section"):
        parse_config("seed = 1\n")


_LABELS = st.sampled_from(["a", "b", "c"])
_FLOATS = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False).map(
    lambda x: x if abs(x) > 1e-6 else 0.5)
_POS = st.floats(min_value=0.01, max_value=5.0, allow_nan=False)


@st.composite
def _configs(draw):
    states = ("a", "b")
    rates = {("a", "b"): draw(_POS), ("b", "a"): draw(_POS)}
    mod = ModulatorSpec.finite_chain(states, rates, initial="a")
    law = draw(st.sampled_from([
        PointMass(1.5), TwoPoint(0.9, 0.4, -0.3), Gaussian(0.1, 0.7)]))
    chars = MapCharacteristics(
        drift={"a": draw(_FLOATS)},
        diffusion={"b": draw(_POS)} if draw(st.booleans()) else {},
        local_jumps={"a": LocalJumps(draw(_POS), law)},
        transition_jumps={("a", "b"): TransitionJump(draw(st.floats(0, 1)), law)})
    experiment = {"seed": draw(st.integers(0, 2 ** 31)),
                  "horizon": draw(_POS),
                  "n_paths": draw(st.integers(1, 10_000))}
    if draw(st.booleans()):
        experiment["horizons"] = (100.0, draw(_POS) + 1000.0)
    return ExperimentConfig(modulator=mod, characteristics=chars,
                            experiment=experiment)


@given(cfg=_configs())
@settings(max_examples=50, deadline=None)
def test_serialize_parse_roundtrip_property(cfg):
    assert parse_config(serialize_config(cfg)) == cfg
    assert serialize_config(parse_config(serialize_config(cfg))) == serialize_config(cfg)


def test_comments_and_blank_lines_ignored():
    text = MINIMAL.replace("[experiment]", "# a comment\n\n[experiment]")
    assert parse_config(text).setting("seed") == 1
