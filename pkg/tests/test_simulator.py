import math

import numpy as np
import pytest

from lora_esl import Scenario, compare_policies, compute_plr, rp_threshold_fraction, run_scenario, sweep_gateways
from lora_esl.simulator import MetricsReport, RingMetrics

SHORT = {"horizon_s": 3600.0}


def short(**updates):
    return Scenario().with_updates(traffic=SHORT, **updates)


@pytest.fixture(scope="module")
def rssi_report():
    return run_scenario(short(deployment={"gw_count": 4}))


@pytest.fixture(scope="module")
def snr_report():
    return run_scenario(short(deployment={"gw_count": 4}, policy={"kind": "snr"}))


def fake_report(scheduled, delivered):
    ring = RingMetrics(0, 0.7, 1, scheduled, delivered, {"collision": scheduled - delivered}, None,
                       None, None, None, None, None, None)
    return MetricsReport(1, "rssi", "arithmetic", 0, scheduled, delivered, None, -150.85, None, [ring], {}, {})


@pytest.mark.parametrize("scheduled,delivered,expected", [(10, 10, 0.0), (10, 0, 1.0), (10, 7, 0.3), (0, 0, None)])
def test_compute_plr(scheduled, delivered, expected):
    assert compute_plr(fake_report(scheduled, delivered), 0) == expected


def test_compute_plr_unknown_ring(rssi_report):
    with pytest.raises(KeyError):
        compute_plr(rssi_report, 6)


def test_rp_fraction_extremes(rssi_report):
    assert rp_threshold_fraction(rssi_report, -math.inf) == 1.0
    assert rp_threshold_fraction(rssi_report, math.inf) == 0.0
    assert rp_threshold_fraction(rssi_report) == pytest.approx(rssi_report.above_threshold_fraction)


def test_rp_fraction_undefined_without_frames():
    rep = run_scenario(Scenario().with_updates(traffic={"horizon_s": 0.0}))
    assert rep.scheduled == 0
    assert rp_threshold_fraction(rep) is None
    assert rep.plr is None
    assert all(compute_plr(rep, r.ring) is None for r in rep.rings)


@pytest.mark.parametrize("fixture", ["rssi_report", "snr_report"])
def test_conservation(fixture, request):
    rep = request.getfixturevalue(fixture)
    for r in rep.rings:
        assert r.scheduled == r.delivered + sum(r.lost.values())
        assert 0.0 <= r.plr <= 1.0
    assert rep.scheduled == rep.delivered + sum(rep.loss_causes.values())
    assert sum(r.scheduled for r in rep.rings) == rep.scheduled
    assert sum(v["scheduled"] for v in rep.per_sf.values()) == rep.scheduled
    assert sum(v["delivered"] for v in rep.per_sf.values()) == rep.delivered


def test_rssi_traces_stay_on_power_range(rssi_report):
    assert rssi_report.traces
    assert all(14.0 <= t.tp_dbm <= 29.0 for t in rssi_report.traces)
    assert set(rssi_report.per_sf) == {"7"}


def test_snr_traces_hold_fixed_power(snr_report):
    assert snr_report.traces
    assert all(t.tp_dbm == 14.0 for t in snr_report.traces)
    assert all(7 <= t.sf <= 12 for t in snr_report.traces)


def test_device_granularity_runs():
    rep = run_scenario(short(deployment={"gw_count": 2}, policy={"granularity": "device", "epochs": 2}))
    assert rep.scheduled == rep.delivered + sum(rep.loss_causes.values())


def test_same_seed_same_json():
    s = short(policy={"kind": "snr"}, seed=7)
    assert run_scenario(s).to_json() == run_scenario(s).to_json()


def test_different_seed_differs():
    assert run_scenario(short(seed=1)).to_json() != run_scenario(short(seed=2)).to_json()


def test_home_reception_never_beats_any_gateway():
    base = short(deployment={"gw_count": 4})
    home = run_scenario(base.with_updates(channel={"reception": "home"}))
    anyg = run_scenario(base)
    assert home.scheduled == anyg.scheduled
    assert home.delivered <= anyg.delivered


def test_cross_sf_penalty_only_hurts():
    base = short(deployment={"gw_count": 2}, policy={"kind": "snr"})
    plain = run_scenario(base)
    penalised = run_scenario(base.with_updates(channel={"cosf_penalty_db": 6.0}))
    assert penalised.delivered <= plain.delivered


def test_per_packet_fading_runs():
    rep = run_scenario(short(pathloss={"per_packet_fading": True}))
    assert rep.scheduled == rep.delivered + sum(rep.loss_causes.values())


def test_compare_identical_policies_zero_deltas():
    cmp = compare_policies(short(deployment={"gw_count": 2}), policies=("rssi", "rssi"))
    assert all(row["delta"] in (0.0, None) for row in cmp.rows)
    assert cmp.winner == "tie"


def test_compare_policies_shape():
    cmp = compare_policies(short(deployment={"gw_count": 2}))
    assert len(cmp.rows) == 6 * 5
    assert all(row["snr"] is not None and row["rssi"] is not None for row in cmp.rows)
    assert cmp.winner in ("snr", "rssi", "tie")


def test_sweep_single_and_ordering():
    assert len(sweep_gateways(short(), [1])) == 1
    reps = sweep_gateways(short(), [4, 1, 2])
    assert [r.gw_count for r in reps] == [1, 2, 4]
    with pytest.raises(ValueError):
        sweep_gateways(short(), [])


def test_fibonacci_loads_outer_ring_harder():
    for seed in (0, 1):
        base = Scenario(seed=seed).with_updates(deployment={"gw_count": 10}, traffic={"horizon_s": 21600.0})
        arith = run_scenario(base)
        fib = run_scenario(base.with_updates(deployment={"allocation": {"kind": "fibonacci"}}))
        assert arith.scheduled == pytest.approx(fib.scheduled, rel=0.02)
        assert fib.rings[-1].plr >= arith.rings[-1].plr


def test_more_gateways_improve_coverage():
    reps = sweep_gateways(short(), [1, 4, 10])
    fr = [r.above_threshold_fraction for r in reps]
    assert fr[0] < fr[1] < fr[2]
    assert np.all(np.diff([r.plr for r in reps]) < 0)
