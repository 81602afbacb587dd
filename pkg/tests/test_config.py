"""
Tests for run configuration parsing (:mod:`codedpush.cli.config`).
"""

from __future__ import annotations

import json

import pytest

from codedpush.cli.config import ConfigError, RunConfig, load_config, parse_config

MINIMAL = '{"K": 2, "N": 2, "F": 1000, "M": 1}'


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.num_users == 2 and cfg.content_size == 1000
    assert cfg.power == 1.0 and cfg.bandwidth == 1.0
    assert cfg.base_psd == 2.0
    assert cfg.cell_radius == 5000.0
    applied = cfg.defaults_applied
    assert applied["power"] == 1.0
    assert applied["requests"] == "uniform"
    assert "num_users" not in applied


def test_radio_config_derives_subcarrier_width():
    cfg = parse_config('{"K": 2, "N": 2, "F": 1000, "M": 1, "P": 10, "B": 1e6, "H": 64}')
    assert cfg.to_system().subcarrier_bw == 15625.0
    assert cfg.rice_factor == 2.0 and cfg.pathloss_exponent == 2.0
    assert "power" not in cfg.defaults_applied
    assert "subcarrier_bw" in cfg.defaults_applied


def test_long_names_accepted():
    cfg = RunConfig(num_users=2, num_contents=3, content_size=10, cache_contents=1.5, power=4.0)
    assert cfg.power == 4.0
    assert "power" not in cfg.defaults_applied


def test_cache_not_below_library_names_field():
    with pytest.raises(ConfigError, match="M=2"):
        parse_config('{"K": 2, "N": 2, "F": 1000, "M": 2}')


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="colour"):
        parse_config('{"K": 2, "N": 2, "F": 1000, "M": 1, "colour": "red"}')


def test_missing_required_field():
    with pytest.raises(ConfigError, match="F"):
        parse_config('{"K": 2, "N": 2, "M": 1}')


def test_json_syntax_error_has_position():
    with pytest.raises(ConfigError, match=r"line 2, column \d+"):
        parse_config('{"K": 2,\n "N": }')


def test_yaml_config():
    cfg = parse_config("K: 3\nN: 4\nF: 500\nM: 1.5\nmode: fd\nrequests: [0, 1, 3]\n", "yaml")
    assert cfg.mode == "fd"
    assert cfg.requests == (0, 1, 3)


def test_yaml_syntax_error_has_position():
    with pytest.raises(ConfigError, match="line 2, column 1"):
        parse_config("K: 3\n\tN: 4\n", "yaml")


def test_non_mapping_rejected():
    with pytest.raises(ConfigError, match="mapping"):
        parse_config("[1, 2, 3]")


def test_subcarrier_bandwidth_must_match():
    with pytest.raises(ConfigError, match="B_u"):
        parse_config('{"K": 2, "N": 2, "F": 10, "M": 1, "B": 100, "H": 4, "B_u": 20}')
    cfg = parse_config('{"K": 2, "N": 2, "F": 10, "M": 1, "B": 100, "H": 4}')
    assert cfg.to_system().subcarrier_bw == 25.0


def test_user_caps_checked_at_parse_time():
    with pytest.raises(ConfigError, match="limit"):
        parse_config('{"K": 13, "N": 20, "F": 100, "M": 2, "sizes_source": "bitlevel"}')


def test_explicit_requests_checked():
    with pytest.raises(ConfigError, match="entries"):
        parse_config('{"K": 3, "N": 2, "F": 100, "M": 1, "requests": [0, 1]}')


def test_empty_grid_rejected():
    with pytest.raises(ConfigError, match="grid"):
        parse_config('{"K": 2, "N": 2, "F": 10, "M": 1, "grid": []}')


def test_json_round_trip():
    cfg = parse_config('{"K": 4, "N": 10, "F": 5000, "M": 3, "P": 10, "mode": "fd", "seed": 9}')
    again = parse_config(cfg.to_json())
    assert again == cfg
    dumped = json.loads(cfg.to_json())
    assert dumped == {"K": 4, "N": 10, "F": 5000, "M": 3.0, "P": 10.0, "mode": "fd", "seed": 9}


def test_trial_spec_conversion():
    cfg = parse_config(MINIMAL).with_overrides(mode="fd", trials=3, seed=None)
    spec = cfg.to_trial_spec()
    assert spec.mode == "fd" and spec.trials == 3 and spec.seed == 0
    assert spec.system.cache_fraction == 0.5
    assert spec.fading.pathloss_exponent == cfg.pathloss_exponent


def test_overrides_revalidate():
    with pytest.raises(ConfigError, match="M="):
        parse_config(MINIMAL).with_overrides(N=1)


def test_load_config_by_suffix(tmp_path):
    yml = tmp_path / "run.yml"
    yml.write_text("K: 2\nN: 2\nF: 100\nM: 1\n")
    js = tmp_path / "run.json"
    js.write_text(MINIMAL)
    assert load_config(yml).content_size == 100
    assert load_config(js).content_size == 1000


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.json")


def test_load_config_error_names_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{")
    with pytest.raises(ConfigError, match="bad.json"):
        load_config(path)
