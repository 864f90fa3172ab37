import math

import pytest
from hypothesis import given, strategies as st

from lora_esl.link_budget import (
    LinkBudgetError,
    PathLossParams,
    RadioConfig,
    SnrFloorTable,
    airtime,
    header_time,
    margin,
    noise_floor,
    path_loss,
    payload_symbols,
    preamble_time,
    received_power_diag_dbw,
    received_power_dbw,
    rssi,
)

# Hand-evaluated time-on-air values, 125 kHz, CR 4/5, 16 B, 8-symbol preamble,
# explicit header, CRC on. SF12 uses low-data-rate optimisation.
AIRTIME_SF7_S = 0.051456
AIRTIME_SF12_S = 1.318912

finite = st.floats(-200, 200, allow_nan=False)


def test_rssi_and_received_power_oracle():
    r = rssi(14, 2.15, 127.84)
    assert r == pytest.approx(-111.69, abs=1e-9)
    assert received_power_dbw(r, 2.15) == pytest.approx(-139.54, abs=1e-9)


def test_rssi_zero_link():
    assert rssi(0, 0, 0) == 0.0


def test_rssi_rejects_nan():
    with pytest.raises(LinkBudgetError):
        rssi(float("nan"), 0, 0)


def test_doubling_distance_adds_fixed_increment():
    p = PathLossParams(exponent=4.31)
    assert path_loss(2.0, p) - path_loss(1.0, p) == pytest.approx(12.97, abs=0.01)


def test_path_loss_at_reference_distance():
    p = PathLossParams(ref_loss_db=40.0, ref_distance_km=0.001, exponent=3.0)
    assert path_loss(0.001, p) == pytest.approx(40.0)


@pytest.mark.parametrize("d", [0.0, -1.0, 0.005])
def test_path_loss_rejects_short_distances(d):
    with pytest.raises(LinkBudgetError):
        path_loss(d, PathLossParams())


def test_obstacles_add_linearly():
    plain = path_loss(1.0, PathLossParams())
    walled = path_loss(1.0, PathLossParams(obstacle_losses_db=(2.2, 2.04)))
    assert walled - plain == pytest.approx(4.24)


@given(st.floats(0.01, 50), st.floats(0.01, 50))
def test_path_loss_monotone_in_distance(d1, d2):
    p = PathLossParams()
    if d1 <= d2:
        assert path_loss(d1, p) <= path_loss(d2, p)


@given(finite, finite, finite, finite)
def test_rssi_linear(tp, gtx, lpl, delta):
    base = rssi(tp, gtx, lpl)
    assert rssi(tp + delta, gtx, lpl) == pytest.approx(base + delta, abs=1e-9)
    assert rssi(tp, gtx, lpl + delta) == pytest.approx(base - delta, abs=1e-9)


def test_diag_received_power_evaluated_literally():
    # rssi + snr - (1 + 10^(snr/10)) - 30
    assert received_power_diag_dbw(-111.69, 0) == pytest.approx(-143.69, abs=1e-9)
    assert received_power_diag_dbw(-111.69, 10) == pytest.approx(-142.69, abs=1e-9)


def test_diag_received_power_low_snr_limit():
    # the correction tends to 1 dB, so result - snr -> rssi - 31
    r = received_power_diag_dbw(-100.0, -80.0)
    assert r - (-80.0) == pytest.approx(-131.0, abs=1e-6)


def test_noise_floor_oracle():
    assert noise_floor(125e3, 6) == pytest.approx(-117.03, abs=0.01)
    assert noise_floor(500e3, 6) == pytest.approx(-111.01, abs=0.01)
    assert noise_floor(500e3) - noise_floor(125e3) == pytest.approx(10 * math.log10(4))


def test_margin_sign():
    assert margin(-7.5, 7) == pytest.approx(0.0)
    assert margin(-5.0, 7) > 0
    assert margin(-21.0, 12) < 0
    with pytest.raises(LinkBudgetError):
        margin(0.0, 13)


def test_floor_table_validation():
    assert SnrFloorTable()[12] == -20.0
    with pytest.raises(LinkBudgetError):
        SnrFloorTable({7: -7.5})
    with pytest.raises(LinkBudgetError):
        SnrFloorTable({sf: -7.5 for sf in range(7, 13)})


def test_airtime_sf7_oracle():
    cfg = RadioConfig(sf=7)
    assert payload_symbols(cfg) == 38
    assert airtime(cfg) == pytest.approx(AIRTIME_SF7_S, abs=1e-6)


def test_airtime_sf12_oracle():
    cfg = RadioConfig(sf=12)
    assert cfg.low_data_rate_optimize
    assert cfg.symbol_time == pytest.approx(0.032768)
    assert preamble_time(cfg) == pytest.approx(0.401408, abs=1e-9)
    assert payload_symbols(cfg) == 28
    assert airtime(cfg) == pytest.approx(AIRTIME_SF12_S, abs=1e-6)


def test_header_time():
    assert header_time(RadioConfig(sf=7)) == pytest.approx(8 * 2**7 / 125e3)
    assert header_time(RadioConfig(sf=7, explicit_header=False)) == 0.0


@given(st.integers(7, 11), st.sampled_from([125, 250, 500]), st.integers(0, 64))
def test_airtime_grows_with_sf(sf, bw, payload):
    a = airtime(RadioConfig(sf=sf, bandwidth=bw, payload=payload))
    b = airtime(RadioConfig(sf=sf + 1, bandwidth=bw, payload=payload))
    assert b > a


@given(st.integers(7, 12), st.integers(0, 200))
def test_airtime_non_decreasing_in_payload(sf, payload):
    assert airtime(RadioConfig(sf=sf, payload=payload + 1)) >= airtime(RadioConfig(sf=sf, payload=payload))


@pytest.mark.parametrize(
    "kwargs", [{"sf": 6}, {"sf": 13}, {"bandwidth": 200}, {"cr_denominator_n": 5}, {"payload": -1}]
)
def test_radio_config_rejects_bad_values(kwargs):
    with pytest.raises(LinkBudgetError):
        RadioConfig(**kwargs)
