"""Config grammar: parsing, serialization fixed point, env and merge rules."""

import pytest

from carnotcap.config import (
    ConfigError,
    ExperimentConfig,
    env_overrides,
    load_config,
    merge_config,
    parse_config,
    serialize_config,
)

SAMPLE = """
# capacity run
task = capacity
seed = 7

capacity.group = R2
capacity.p = 2.0
resolution = 96
"""


def test_parse_basic():
    cfg = parse_config(SAMPLE)
    assert cfg == {
        "task": "capacity",
        "seed": "7",
        "capacity.group": "R2",
        "capacity.p": "2.0",
        "resolution": "96",
    }


def test_serialize_is_a_fixed_point():
    text1 = serialize_config(parse_config(SAMPLE))
    text2 = serialize_config(parse_config(text1))
    assert text1 == text2
    assert text1.splitlines() == sorted(text1.splitlines())
    assert serialize_config({}) == ""


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("task = zoo\nnonsense line\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("seed = 1\nseed = 2\n")
    with pytest.raises(ConfigError, match="bad key"):
        parse_config("Seed = 1\n")
    with pytest.raises(ConfigError, match="bad key"):
        parse_config("a.b.c = 1\n")


def test_load_config_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/prio.cfg")


def test_env_overrides():
    env = {
        "CARNOTCAP_TASK": "zoo",
        "CARNOTCAP_ZOO_FILTER": "winding",
        "CARNOTCAP_LIOUVILLE_CORE_R": "0.4",
        "PATH": "/usr/bin",
        "CARNOTCAP_SEED": "3",
    }
    assert env_overrides(env) == {
        "task": "zoo",
        "zoo.filter": "winding",
        "liouville.core_r": "0.4",
        "seed": "3",
    }


def test_merge_later_layers_win():
    merged = merge_config({"seed": "1", "task": "zoo"}, {"seed": "2"}, {"seed": "3"})
    assert merged == {"seed": "3", "task": "zoo"}


def test_experiment_config_validation():
    cfg = ExperimentConfig.from_mapping(parse_config(SAMPLE))
    assert cfg.task == "capacity"
    assert cfg.seed == 7
    assert cfg.resolution == 96
    assert cfg.slack == 0.1  # default
    assert cfg.params == {"group": "R2", "p": "2.0"}
    assert cfg.param_float("p", 3.0) == 2.0
    assert cfg.param_float("q", 3.0) == 3.0
    assert cfg.param_str("group", "H1") == "R2"

    with pytest.raises(ConfigError, match="task"):
        ExperimentConfig.from_mapping({"task": "warp"})
    with pytest.raises(ConfigError, match="unknown top-level"):
        ExperimentConfig.from_mapping({"task": "zoo", "speed": "9"})
    with pytest.raises(ConfigError, match="resolution"):
        ExperimentConfig.from_mapping({"task": "zoo", "resolution": "1"})
    with pytest.raises(ConfigError, match="slack"):
        ExperimentConfig.from_mapping({"task": "zoo", "slack": "-0.1"})
    with pytest.raises(ConfigError, match="integer"):
        ExperimentConfig.from_mapping({"task": "zoo", "seed": "x"})
    with pytest.raises(ConfigError, match="boolean"):
        ExperimentConfig.from_mapping({"task": "zoo", "plots": "maybe"})


def test_foreign_sections_are_ignored():
    cfg = ExperimentConfig.from_mapping(
        {"task": "zoo", "capacity.p": "4", "zoo.filter": "winding"}
    )
    assert cfg.params == {"filter": "winding"}


def test_param_floats_list():
    cfg = ExperimentConfig.from_mapping(
        {"task": "liouville", "liouville.radii": "1:2:4"}
    )
    assert cfg.param_floats("radii", (9.0,)) == (1.0, 2.0, 4.0)
    assert cfg.param_floats("other", (9.0,)) == (9.0,)
    bad = ExperimentConfig.from_mapping(
        {"task": "liouville", "liouville.radii": "1:x"}
    )
    with pytest.raises(ConfigError, match="float list"):
        bad.param_floats("radii", (9.0,))
