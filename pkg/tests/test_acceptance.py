"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
Criterion 7 uses the bundled default scenario over ten seeds and takes a few
minutes on one core.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from lora_esl import config
from lora_esl.channel import EventTable, Verdict, resolve_reception, resolve_table
from lora_esl.deployment import arithmetic_allocation, kmeans_cluster
from lora_esl.link_budget import PathLossParams, RadioConfig, airtime, path_loss, received_power_dbw, rssi
from lora_esl.simulator import compare_policies, run_scenario

from test_channel import frame
from test_deployment import DEVICES_PER_GW, brute_force_two_means
from test_link_budget import AIRTIME_SF7_S, AIRTIME_SF12_S

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
SEEDS = range(10)
GW_COUNTS = (1, 2, 4, 10, 20)


def record(key, ok, detail):
    ACCEPTANCE_LINES[key] = f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}"
    print(ACCEPTANCE_LINES[key])
    assert ok, detail


def default_scenario():
    return config.load(SCENARIOS / "default.json")


def test_1_allocation_table():
    cells = {g: arithmetic_allocation(200, 100, 6, g) for g in DEVICES_PER_GW}
    ok = all(cells[g] == DEVICES_PER_GW[g] and sum(cells[g]) * g == 2200 for g in cells)
    record("1", ok, f"per-GW ring counts {cells}")


def test_2_link_budget():
    r = rssi(14, 2.15, 127.84)
    rp = received_power_dbw(r, 2.15)
    inc = path_loss(2.0, PathLossParams()) - path_loss(1.0, PathLossParams())
    ok = abs(r + 111.69) <= 0.01 and abs(rp + 139.54) <= 0.01 and abs(inc - 12.97) <= 0.01
    record("2", ok, f"RSSI {r:.4f} dBm, RP {rp:.4f} dBW, doubling increment {inc:.4f} dB")


def test_3_airtime():
    a7, a12 = airtime(RadioConfig(sf=7)), airtime(RadioConfig(sf=12))
    ok = abs(a7 - AIRTIME_SF7_S) <= 1e-6 and abs(a12 - AIRTIME_SF12_S) <= 1e-6
    record("3", ok, f"SF7 {a7 * 1e3:.3f} ms, SF12 {a12 * 1e3:.3f} ms")


def test_4_aloha_law():
    frame_time = airtime(RadioConfig(sf=7))
    n_dev, g = 2200, 0.5
    s = default_scenario().with_updates(
        deployment={"gw_count": 1},
        pathloss={"ref_loss_db": 0.0, "sigma_db": 0.0, "obstacles": []},
        channel={"capture_db": math.inf},
        traffic={"mean_interarrival_s": n_dev * frame_time / g, "horizon_s": 12000.0},
    )
    rep = run_scenario(s)
    delivered = rep.delivered / rep.scheduled
    ok = rep.scheduled >= 100_000 and set(rep.per_sf) == {"7"} and abs(delivered - math.exp(-2 * g)) <= 0.02
    record("4", ok, f"{rep.scheduled} frames, delivered fraction {delivered:.4f} vs e^-1 = {math.exp(-1):.4f}")


def test_5_kmeans():
    hits, monotone = 0, True
    for seed in range(100):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-1, 1, (int(rng.integers(3, 13)), 2))
        cl = kmeans_cluster(pts, 2, seed=seed)
        hits += cl.objective <= brute_force_two_means(pts) + 1e-12
        h = cl.history
        monotone &= all(b <= a + 1e-12 for a, b in zip(h, h[1:]))
    record("5", hits >= 95 and monotone, f"brute-force optimum in {hits}/100 trials, monotone objective {monotone}")


def test_6_capture_truth_table():
    cases = {
        "a: similar power": ([frame(0, 0.0, -100), frame(1, 0.5, -103)], (False, False)),
        "b: stronger during preamble": ([frame(0, 0.0, -100), frame(1, 0.1, -90)], (False, True)),
        "c: stronger during header, locks": ([frame(0, 0.0, -100), frame(1, 0.25, -90)], (False, True)),
        "c: stronger during header, early lock": ([frame(0, 0.0, -100), frame(1, 0.21, -90, pre=0.07)], (False, False)),
        "d: stronger during payload": ([frame(0, 0.0, -100), frame(1, 0.5, -90)], (False, False)),
    }
    table_ok = all(tuple(o.decoded for o in resolve_reception(evs)) == want for evs, want in cases.values())

    rng = np.random.default_rng(6)
    trials, size = 10_000, 6
    n = trials * size
    start = rng.uniform(0, 3, n)
    air = rng.uniform(0.3, 1.5, n)
    pre = air * rng.uniform(0.1, 0.3, n)
    t = EventTable(
        key=np.repeat(np.arange(trials), size), start=start, end=start + air, preamble_end=start + pre,
        header_end=start + pre + 0.1 * air, lock=start + pre - rng.uniform(0, 0.05, n),
        power=rng.uniform(-125, -80, n), tiebreak=np.arange(n),
    )
    res = resolve_table(t, 6.0)
    decoded_per_group = np.bincount(res.component, weights=res.verdict == Verdict.DECODED)
    worst = int(decoded_per_group.max())
    record("6", table_ok and worst <= 1, f"truth table ok {table_ok}, max decoded per group {worst} over {trials} trials")


@pytest.fixture(scope="module")
def trend_runs():
    runs, slowest = {}, 0.0
    base = default_scenario()
    for seed in SEEDS:
        for g in GW_COUNTS:
            t0 = time.perf_counter()
            runs[(seed, g)] = run_scenario(base.with_updates(deployment={"gw_count": g}, seed=seed))
            slowest = max(slowest, time.perf_counter() - t0)
    return runs, slowest


def test_7a_plr_falls_with_gateways(trend_runs):
    runs, slowest = trend_runs
    bad = [s for s in SEEDS if not all(runs[(s, a)].plr > runs[(s, b)].plr for a, b in zip((1, 2, 4), (2, 4, 10)))]
    mean = [np.mean([runs[(s, g)].plr for s in SEEDS]) for g in (1, 2, 4, 10)]
    ok = not bad and slowest < 120
    record("7(a)", ok, f"mean PLR 1/2/4/10 GW {np.round(mean, 4).tolist()}, non-decreasing seeds {bad}, "
                       f"slowest run {slowest:.1f} s")


def test_7b_ten_gateways_above_threshold(trend_runs):
    runs, _ = trend_runs
    fr = [runs[(s, 10)].above_threshold_fraction for s in SEEDS]
    record("7(b)", min(fr) >= 0.99, f"10-GW above-threshold fraction min {min(fr):.4f}")


def test_7c_two_gateways_above_threshold(trend_runs):
    runs, _ = trend_runs
    fr = [runs[(s, 2)].above_threshold_fraction for s in SEEDS]
    record("7(c)", min(fr) > 0.60 - 0.10, f"2-GW above-threshold fraction range [{min(fr):.4f}, {max(fr):.4f}]")


def test_7d_four_gateways_under_threshold(trend_runs):
    runs, _ = trend_runs
    under = [1 - runs[(s, 4)].above_threshold_fraction for s in SEEDS]
    ok = all(abs(u - 0.20) <= 0.10 for u in under)
    record("7(d)", ok, f"4-GW under-threshold fraction range [{min(under):.4f}, {max(under):.4f}]")


def test_7e_innermost_ring_congestion(trend_runs):
    runs, _ = trend_runs
    p10 = [runs[(s, 10)].rings[0].plr for s in SEEDS]
    p20 = [runs[(s, 20)].rings[0].plr for s in SEEDS]
    wins = sum(b > a for a, b in zip(p10, p20))
    record("7(e)", wins == len(p10), f"innermost-ring PLR 20 GW > 10 GW in {wins}/10 seeds "
                                     f"(mean 10 GW {np.mean(p10):.4f}, 20 GW {np.mean(p20):.4f})")


def test_8_rssi_policy_dominates():
    base = config.load(SCENARIOS / "ten_gw_rssi.json")
    wins, gaps = 0, []
    for seed in SEEDS:
        cmp = compare_policies(base.with_updates(seed=seed))
        wins += cmp.rssi_plr <= cmp.snr_plr
        gaps.append(cmp.snr_plr - cmp.rssi_plr)
    record("8", wins >= 8, f"RSSI PLR <= SNR PLR in {wins}/10 seeds, mean gap {np.mean(gaps):.4f}")


def test_9_determinism():
    s = config.load(SCENARIOS / "single_gw_snr.json").with_updates(seed=7)
    a, b = run_scenario(s).to_json(), run_scenario(s).to_json()
    record("9", a.encode() == b.encode(), f"two runs of seed 7, {len(a)} bytes each, identical {a == b}")
