import pytest
from hypothesis import given
from hypothesis import strategies as st

from fluxqnd.config import (
    EXPERIMENTS,
    config_hash,
    default_config,
    dump_config,
    grid_values,
    parse_config,
    validate_config,
)
from fluxqnd.errors import ConfigError


@pytest.mark.parametrize("name", sorted(EXPERIMENTS))
def test_defaults_round_trip(name):
    cfg = default_config(name)
    back = parse_config(dump_config(cfg))
    assert back == cfg
    assert config_hash(back) == config_hash(cfg)


def test_unknown_key_named():
    cfg = default_config("fig2")
    cfg["resonator"]["kapa"] = 1.0
    with pytest.raises(ConfigError, match="kapa"):
        validate_config(cfg)


def test_unknown_top_level_and_missing_block():
    cfg = default_config("fig4a")
    cfg["qubit"] = {}
    with pytest.raises(ConfigError, match="qubit"):
        validate_config(cfg)
    cfg = default_config("fig4a")
    del cfg["readout"]
    with pytest.raises(ConfigError, match="readout"):
        validate_config(cfg)


def test_type_errors():
    cfg = default_config("fig2")
    cfg["resonator"]["squid_count"] = 1.5
    with pytest.raises(ConfigError, match="squid_count"):
        validate_config(cfg)
    cfg = default_config("fig2")
    cfg["workers"] = 0
    with pytest.raises(ConfigError):
        validate_config(cfg)
    with pytest.raises(ConfigError):
        parse_config("experiment: [unclosed")
    with pytest.raises(ConfigError):
        parse_config("experiment: nope")


def test_partial_blocks_fill_defaults():
    cfg = validate_config({"experiment": "fig2", "resonator": {"static_flux_phi0": 0.4}})
    assert cfg["resonator"]["omega0_over_2pi_ghz"] == 6.0
    assert cfg["resonator"]["static_flux_phi0"] == 0.4
    assert cfg["workers"] == 1


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 40))
def test_grid_values(start, stop, num):
    vals = grid_values({"start": start, "stop": stop, "num": num})
    assert len(vals) == num
    if num >= 2:
        assert vals[0] == pytest.approx(start) and vals[-1] == pytest.approx(stop)
