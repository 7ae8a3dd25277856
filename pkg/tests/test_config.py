"""Scenario config parsing: defaults, validation, fault schedules."""

import json
from fractions import Fraction

import pytest

from consensus_lens import config as cfg_mod
from consensus_lens.config import (
    ConfigError,
    FaultCommand,
    config_from_mapping,
    parse_config,
    parse_quorum,
)

MINIMAL = {"n": 30, "slots": 10, "beacon_seed": "ab" * 32}


def test_minimal_fills_defaults():
    cfg = config_from_mapping(dict(MINIMAL))
    assert cfg.n == 30
    assert cfg.committee_size == 10  # ceil(30/3)
    assert cfg.k == 6  # ceil(sqrt(30))
    assert cfg.quorum == Fraction(2, 3)
    assert cfg.slot_duration_ms == 1000
    assert cfg.base_latency_ms == 20.0
    assert cfg.jitter_max_ms == 10.0
    assert cfg.bandwidth_bytes_per_ms == 1000.0
    assert (cfg.proposal_payload_bytes, cfg.vote_payload_bytes,
            cfg.aggregate_payload_bytes) == (4096, 96, 256)
    assert cfg.beacon_seed == bytes.fromhex("ab" * 32)
    assert cfg.faults == ()


def test_default_committee_and_cluster_counts():
    assert cfg_mod.default_committee_size(30) == 10
    assert cfg_mod.default_committee_size(3) == 1
    assert cfg_mod.default_committee_size(2) == 1
    # never the whole set: n=1 leaves no room for a committee
    assert cfg_mod.default_committee_size(1) == 0
    assert cfg_mod.default_cluster_count(30) == 6
    assert cfg_mod.default_cluster_count(1) == 1


def test_unknown_key_rejected():
    doc = dict(MINIMAL, comittee_size=9)  # typo must not pass silently
    with pytest.raises(ConfigError, match="unknown"):
        config_from_mapping(doc)


def test_missing_required_keys():
    for key in ("n", "slots", "beacon_seed"):
        doc = dict(MINIMAL)
        del doc[key]
        with pytest.raises(ConfigError):
            config_from_mapping(doc)


def test_committee_size_bounds():
    with pytest.raises(ConfigError):
        config_from_mapping(dict(MINIMAL, committee_size=30))
    with pytest.raises(ConfigError):
        config_from_mapping(dict(MINIMAL, committee_size=-2))
    cfg = config_from_mapping(dict(MINIMAL, committee_size=0))
    assert cfg.committee_size == 0


def test_cluster_count_bounds():
    with pytest.raises(ConfigError):
        config_from_mapping(dict(MINIMAL, k=0))
    with pytest.raises(ConfigError):
        config_from_mapping(dict(MINIMAL, k=31))
    assert config_from_mapping(dict(MINIMAL, k=30)).k == 30


def test_quorum_parsing():
    assert parse_quorum("2/3") == Fraction(2, 3)
    assert parse_quorum(0.5) == Fraction(1, 2)
    # float decimals parse exactly as written, not as binary approximations
    assert parse_quorum(0.667) == Fraction(667, 1000)
    assert parse_quorum(1) == Fraction(1)
    for bad in (0, -1, "3/2", 1.5, "zero"):
        with pytest.raises(ConfigError):
            parse_quorum(bad)


def test_bool_is_not_an_int():
    with pytest.raises(ConfigError):
        config_from_mapping(dict(MINIMAL, n=True))


def test_beacon_seed_validation():
    with pytest.raises(ConfigError):
        config_from_mapping(dict(MINIMAL, beacon_seed="abcd"))
    with pytest.raises(ConfigError):
        config_from_mapping(dict(MINIMAL, beacon_seed=123))


def test_fault_schedule_parsing():
    doc = dict(MINIMAL, faults=[
        {"at_ms": 0, "action": "kill_node", "target": 3},
        {"at_ms": 500, "action": "revive_node", "target": 3},
        {"at_ms": 900, "action": "set_latency_scale", "scale": 2.5},
    ])
    cfg = config_from_mapping(doc)
    assert len(cfg.faults) == 3
    assert cfg.faults[0] == FaultCommand(at_ms=0, action="kill_node", target=3)
    assert cfg.faults[2].scale == 2.5


@pytest.mark.parametrize("entry", [
    {"at_ms": 0, "action": "explode", "target": 1},
    {"at_ms": 0, "action": "kill_node"},                       # missing target
    {"at_ms": 0, "action": "kill_node", "target": 99},        # out of range
    {"at_ms": -5, "action": "kill_node", "target": 1},
    {"at_ms": 0, "action": "set_latency_scale"},               # missing scale
    {"at_ms": 0, "action": "set_latency_scale", "scale": 0},
    {"at_ms": 0, "action": "kill_node", "target": 1, "bogus": 2},
])
def test_bad_fault_entries(entry):
    with pytest.raises(ConfigError):
        config_from_mapping(dict(MINIMAL, faults=[entry]))


def test_echo_is_json_ready():
    doc = dict(MINIMAL, quorum="2/3", faults=[
        {"at_ms": 10, "action": "kill_node", "target": 1},
    ])
    cfg = config_from_mapping(doc)
    echo = cfg.echo()
    text = json.dumps(echo)  # must not raise
    assert echo["quorum"] == "2/3"
    assert echo["beacon_seed"] == "ab" * 32
    assert echo["faults"][0] == {"at_ms": 10, "action": "kill_node", "target": 1}
    assert "scale" not in echo["faults"][0]
    assert json.loads(text)["n"] == 30


def test_parse_config_yaml_and_json(tmp_path):
    yml = tmp_path / "a.yaml"
    yml.write_text("n: 12\nslots: 3\nbeacon_seed: \"%s\"\nquorum: 2/3\n" % ("cd" * 32))
    cfg = parse_config(yml)
    assert (cfg.n, cfg.slots) == (12, 3)
    assert cfg.quorum == Fraction(2, 3)

    js = tmp_path / "a.json"
    js.write_text(json.dumps(dict(MINIMAL, k=5)))
    assert parse_config(js).k == 5


def test_parse_config_rejects_non_mapping(tmp_path):
    f = tmp_path / "bad.yaml"
    f.write_text("- just\n- a list\n")
    with pytest.raises(ConfigError):
        parse_config(f)


def test_validate_slot_duration_and_latencies():
    with pytest.raises(ConfigError):
        config_from_mapping(dict(MINIMAL, slot_duration_ms=0))
    with pytest.raises(ConfigError):
        config_from_mapping(dict(MINIMAL, bandwidth_bytes_per_ms=0))
    with pytest.raises(ConfigError):
        config_from_mapping(dict(MINIMAL, jitter_max_ms=-1))
    with pytest.raises(ConfigError):
        config_from_mapping(dict(MINIMAL, slots=0))
    with pytest.raises(ConfigError):
        config_from_mapping(dict(MINIMAL, n=0))
