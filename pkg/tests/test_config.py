import json
import math
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from lora_esl import config
from lora_esl.config import ConfigError, Scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def test_defaults_match_parameter_tables():
    s = Scenario()
    assert s.deployment.allocation.first_term == 200
    assert s.deployment.allocation.common_diff == 100
    assert s.deployment.ring_radii_km == (0.7, 0.9, 1.1, 1.5, 1.6, 2.1)
    assert s.radio.cf_mhz == 868.0 and s.radio.bw_khz == 125
    assert s.radio.sf_range == (7, 12) and s.radio.tp_dbm == 14.0 and s.radio.payload_bytes == 16
    assert s.radio.g_tx_dbi == 2.15
    assert s.pathloss.exponent == 4.31
    assert s.channel.sensitivity_dbm == -123.0
    assert s.rp_threshold_dbw == pytest.approx(-150.85)


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.json")), ids=lambda p: p.name)
def test_bundled_scenarios_keep_table_values(path):
    s = config.load(path)
    d = Scenario()
    assert s.deployment.allocation.first_term == d.deployment.allocation.first_term
    assert s.deployment.allocation.common_diff == d.deployment.allocation.common_diff
    assert s.deployment.ring_radii_km == d.deployment.ring_radii_km
    assert s.radio == d.radio
    assert s.pathloss == d.pathloss
    assert s.channel == d.channel
    assert s.traffic == d.traffic


def test_ten_gateway_bundle():
    s = config.load(SCENARIOS / "ten_gw_rssi.json")
    assert s.gw_count == 10 and s.policy.kind == "rssi"


def test_unknown_key_rejected_with_path():
    data = config.to_dict(Scenario())
    data["radio"]["colour"] = "red"
    with pytest.raises(ConfigError) as exc:
        config.from_dict(data)
    assert "radio" in str(exc.value)


def test_invalid_value_names_field():
    with pytest.raises(ConfigError) as exc:
        Scenario().with_updates(radio={"bw_khz": 200})
    assert exc.value.path == "radio.bw_khz"


def test_bad_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "seed": 1,\n  oops\n}\n')
    with pytest.raises(ConfigError) as exc:
        config.load(p)
    assert exc.value.line == 3


def test_field_error_reports_line(tmp_path):
    data = config.to_dict(Scenario())
    data["deployment"]["gw_count"] = 0
    p = tmp_path / "s.json"
    p.write_text(json.dumps(data, indent=2))
    with pytest.raises(ConfigError) as exc:
        config.load(p)
    assert exc.value.path == "deployment.gw_count"
    assert exc.value.line == 3


def test_capture_infinity_round_trips():
    s = Scenario().with_updates(channel={"capture_db": math.inf})
    assert config.loads(config.dumps(s)) == s


scenarios = st.builds(
    lambda gws, kind, alloc, sigma, seed, tp, cap, ia, bw, obstacles: Scenario().with_updates(
        deployment={"gw_count": gws, "allocation": {"kind": alloc}},
        policy={"kind": kind},
        pathloss={"sigma_db": sigma, "obstacles": obstacles},
        radio={"tp_dbm": tp, "bw_khz": bw},
        channel={"capture_db": cap},
        traffic={"mean_interarrival_s": ia},
        seed=seed,
    ),
    st.integers(1, 30),
    st.sampled_from(["rssi", "snr"]),
    st.sampled_from(["arithmetic", "fibonacci"]),
    st.floats(0, 12),
    st.integers(0, 2**31),
    st.sampled_from([14.0, 17.0, 29.0]),
    st.one_of(st.floats(0, 20), st.just(math.inf)),
    st.floats(1, 1e4),
    st.sampled_from([125, 250, 500]),
    st.lists(st.one_of(st.sampled_from(["glass", "wooden_door"]), st.floats(0, 10)), max_size=3),
)


@settings(max_examples=60, deadline=None)
@given(scenarios)
def test_round_trip(s):
    assert config.loads(config.dumps(s)) == s
