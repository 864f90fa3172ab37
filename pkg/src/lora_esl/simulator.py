"""Scenario engine: deployment -> links -> ADR epochs -> traffic -> metrics."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import adr
from .channel import EventTable, TrafficModel, Verdict, cross_sf_overlap, resolve_table, schedule_frames
from .config import Scenario
from .deployment import (
    GatewayLayout,
    RingPlan,
    fibonacci_allocation,
    generate_deployment,
    ring_totals_arithmetic,
    split_across_gateways,
)
from .link_budget import (
    RadioConfig,
    SnrFloorTable,
    airtime,
    header_time,
    noise_floor,
    preamble_time,
)

LOSS_CAUSES = ("collision", "capture", "below_sensitivity", "corrupt")
_CAUSE_OF = {
    Verdict.LOST_COLLISION: "collision",
    Verdict.LOST_CAPTURE: "capture",
    Verdict.LOST_BELOW_SENSITIVITY: "below_sensitivity",
    Verdict.LOST_CORRUPT: "corrupt",
}


@dataclass
class RingMetrics:
    ring: int
    radius_km: float
    devices: int
    scheduled: int
    delivered: int
    lost: dict[str, int]
    plr: float | None
    mean_rssi_dbm: float | None
    mean_snr_db: float | None
    mean_rp_dbw: float | None
    above_threshold_fraction: float | None
    mean_tp_dbm: float | None
    mean_sf: float | None


@dataclass
class TraceEntry:
    epoch: int
    gw: int
    ring: int
    policy: str
    measured: float
    action: str
    tp_dbm: float
    sf: int
    margin_db: float | None = None


@dataclass
class MetricsReport:
    gw_count: int
    policy: str
    allocation: str
    seed: int
    scheduled: int
    delivered: int
    plr: float | None
    rp_threshold_dbw: float
    above_threshold_fraction: float | None
    rings: list[RingMetrics]
    loss_causes: dict[str, int]
    per_sf: dict[str, dict[str, int]]
    traces: list[TraceEntry] = field(default_factory=list)
    # per-frame record, kept out of the serialised report
    frame_rp_dbw: np.ndarray | None = field(default=None, repr=False)
    frame_decoded: np.ndarray | None = field(default=None, repr=False)
    frame_ring: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {}
        for name in (
            "gw_count", "policy", "allocation", "seed", "scheduled", "delivered", "plr",
            "rp_threshold_dbw", "above_threshold_fraction", "loss_causes", "per_sf",
        ):
            out[name] = getattr(self, name)
        out["rings"] = [asdict(r) for r in self.rings]
        out["traces"] = [asdict(t) for t in self.traces]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def ring(self, index: int) -> RingMetrics:
        for r in self.rings:
            if r.ring == index:
                return r
        raise KeyError(f"no ring {index}")


# --------------------------------------------------------------------------
# building blocks


def ring_totals(scenario: Scenario) -> list[int]:
    d = scenario.deployment
    a = d.allocation
    n_rings = len(d.ring_radii_km)
    totals = ring_totals_arithmetic(a.first_term, a.common_diff, n_rings)
    if a.kind == "fibonacci":
        totals = fibonacci_allocation(sum(totals), n_rings, a.fibonacci_orientation)
    return totals


def build_deployment(scenario: Scenario):
    d = scenario.deployment
    table = split_across_gateways(ring_totals(scenario), d.gw_count)
    lay = d.gw_layout
    layout = GatewayLayout(
        count=d.gw_count,
        kind=lay.kind,
        positions=lay.positions,
        venue_radius_km=lay.venue_radius_km,
        clip_to_venue=lay.clip_to_venue,
    )
    plan = RingPlan(d.ring_radii_km, tuple(int(c) for c in table[0]))
    return generate_deployment(plan, layout, scenario.seed, counts_table=table)


def link_losses(scenario: Scenario, deployment) -> np.ndarray:
    """Frozen path loss per (device, gateway), dB, shadowing included."""
    p = scenario.pathloss
    dist = np.maximum(deployment.distance_matrix(), p.ref_distance_km)
    rng = np.random.default_rng([scenario.seed, 0x5AD])
    shadow = rng.normal(0.0, p.sigma_db, dist.shape) if p.sigma_db > 0 else np.zeros(dist.shape)
    return (
        p.ref_loss_db
        + 10.0 * p.exponent * np.log10(dist / p.ref_distance_km)
        + sum(scenario.obstacle_losses_db)
        + shadow
    )


def radio_for(scenario: Scenario, sf: int, tp: float = 14.0) -> RadioConfig:
    r = scenario.radio
    return RadioConfig(
        carrier_freq=r.cf_mhz,
        bandwidth=r.bw_khz,
        sf=sf,
        cr_denominator_n=r.cr,
        tp=tp,
        payload=r.payload_bytes,
        preamble_symbols=r.preamble_symbols,
        explicit_header=r.explicit_header,
        crc_on=r.crc,
    )


def floor_table(scenario: Scenario) -> SnrFloorTable:
    if scenario.radio.snr_floors_db is None:
        return SnrFloorTable()
    return SnrFloorTable(scenario.radio.snr_floors_db)


@dataclass
class RadioPlan:
    tp: np.ndarray  # per device, dBm
    sf: np.ndarray  # per device
    traces: list[TraceEntry]


def run_adr(scenario: Scenario, deployment, losses: np.ndarray) -> RadioPlan:
    """Measure-then-step epochs per cluster (home gateway, ring) or per device."""
    pol = scenario.policy
    r = scenario.radio
    n = deployment.n_devices
    ring = deployment.device_ring
    home = deployment.device_home
    sf_lo, sf_hi = r.sf_range
    home_loss = losses[np.arange(n), home]
    nf = noise_floor(r.bw_khz * 1000.0, r.noise_figure_db)
    floors = floor_table(scenario)
    threshold = scenario.policy_threshold
    fade_rng = np.random.default_rng([scenario.seed, 0xADA])
    fading = scenario.pathloss.per_packet_fading and scenario.pathloss.fading_sigma_db > 0

    if pol.kind == "rssi":
        if r.tp_schedule is not None:
            tp = np.asarray(r.tp_schedule, dtype=float)[ring]
        else:
            tp = np.full(n, float(r.tp_dbm))
        sf = np.full(n, sf_lo, dtype=np.int64)
    else:
        tp = np.full(n, adr.SNR_POLICY_TP_DBM)
        if pol.sf_init == "schedule":
            sf = np.minimum(sf_lo + ring, sf_hi).astype(np.int64)
        else:
            sf = np.full(n, sf_lo, dtype=np.int64)

    if pol.granularity == "cluster":
        units = [np.flatnonzero((home == g) & (ring == k)) for g in range(deployment.n_gateways)
                 for k in range(deployment.ring_plan.ring_count)]
        units = [u for u in units if len(u)]
    else:
        units = [np.array([i]) for i in range(n)]

    states: list = []
    for u in units:
        if pol.kind == "rssi":
            states.append(adr.RssiAdrState(tp=float(tp[u[0]]), receiver_threshold_dbm=threshold))
        else:
            states.append(adr.SnrAdrState(sf=int(sf[u[0]]), threshold_db=threshold,
                                          sf_step_direction=pol.sf_step_direction))

    traces: list[TraceEntry] = []
    for epoch in range(pol.epochs):
        noise = fade_rng.normal(0.0, scenario.pathloss.fading_sigma_db, n) if fading else np.zeros(n)
        rssi = tp + r.g_tx_dbi - home_loss - noise
        for ui, u in enumerate(units):
            measured = float(np.mean(rssi[u]))
            state = states[ui]
            if pol.kind == "rssi":
                dec = adr.rssi_adr_step(state, measured)
                new_state = dec.state
                tp[u] = new_state.tp
                margin = None
            else:
                measured = measured - nf
                dec = adr.snr_adr_step(state, measured, floors)
                new_state = dec.state
                new_sf = min(max(new_state.sf, sf_lo), sf_hi)
                sf[u] = new_sf
                margin = dec.margin_db
            states[ui] = new_state
            if pol.granularity == "cluster" or len(units) <= 5000:
                traces.append(TraceEntry(
                    epoch=epoch,
                    gw=int(deployment.gateway_ids[home[u[0]]]),
                    ring=int(ring[u[0]]),
                    policy=pol.kind,
                    measured=round(measured, 6),
                    action=dec.action.value,
                    tp_dbm=float(tp[u[0]]),
                    sf=int(sf[u[0]]),
                    margin_db=None if margin is None else round(margin, 6),
                ))
    return RadioPlan(tp=tp, sf=sf, traces=traces)


# --------------------------------------------------------------------------
# the run


def run_scenario(scenario: Scenario) -> MetricsReport:
    """One full, deterministic run of a scenario."""
    dep = build_deployment(scenario)
    losses = link_losses(scenario, dep)
    plan = run_adr(scenario, dep, losses)
    r = scenario.radio
    ch = scenario.channel
    n_dev, n_gw = dep.n_devices, dep.n_gateways

    traffic = TrafficModel(scenario.traffic.mean_interarrival_s, scenario.traffic.horizon_s, scenario.seed)
    f_dev, f_start = schedule_frames(n_dev, traffic)
    n_frames = len(f_dev)

    sfs = list(range(r.sf_range[0], r.sf_range[1] + 1))
    cfg = {sf: radio_for(scenario, sf) for sf in sfs}
    at = {sf: airtime(c) for sf, c in cfg.items()}
    pre = {sf: preamble_time(c) for sf, c in cfg.items()}
    hdr = {sf: header_time(c) for sf, c in cfg.items()}
    tsym = {sf: c.symbol_time for sf, c in cfg.items()}
    lut = lambda d: np.array([d.get(s, np.nan) for s in range(13)])  # noqa: E731
    f_sf = plan.sf[f_dev]
    f_air = lut(at)[f_sf]
    f_pre_end = f_start + lut(pre)[f_sf]
    f_hdr_end = f_pre_end + lut(hdr)[f_sf]
    f_lock = f_pre_end - 5 * lut(tsym)[f_sf]
    f_end = f_start + f_air

    nf = noise_floor(r.bw_khz * 1000.0, r.noise_figure_db)
    floors = floor_table(scenario)
    floor_lut = np.array([floors.floors.get(s, np.nan) for s in range(13)])
    f_required = nf + floor_lut[f_sf]

    eirp = plan.tp + r.g_tx_dbi  # per device
    dev_power = eirp[:, None] - losses  # (N, G) mean received power
    home_only = ch.reception == "home"
    best_gw = dep.device_home if home_only else np.argmax(dev_power, axis=1)
    fading = scenario.pathloss.per_packet_fading and scenario.pathloss.fading_sigma_db > 0
    fade_rng = np.random.default_rng([scenario.seed, 0xFAD])

    c = ch.capture_db
    include_floor = ch.sensitivity_dbm - c if math.isfinite(c) else -np.inf
    decoded = np.zeros(n_frames, dtype=bool)
    best_power = np.full(n_frames, -np.inf)
    best_verdict = np.full(n_frames, int(Verdict.LOST_BELOW_SENSITIVITY), dtype=np.int8)

    for g in range(n_gw):
        power = dev_power[f_dev, g]
        if fading:
            power = power + fade_rng.normal(0.0, scenario.pathloss.fading_sigma_db, n_frames)
        if home_only:
            better = dep.device_home[f_dev] == g
        else:
            better = power > best_power
        best_power = np.where(better, power, best_power)
        rows = np.flatnonzero(power >= include_floor)
        if len(rows) == 0:
            continue
        required = f_required[rows]
        if ch.cosf_penalty_db > 0:
            hit = cross_sf_overlap(np.zeros(len(rows), dtype=np.int64), f_sf[rows], f_start[rows], f_end[rows])
            required = required + ch.cosf_penalty_db * hit
        table = EventTable(
            key=f_sf[rows],
            start=f_start[rows],
            end=f_end[rows],
            preamble_end=f_pre_end[rows],
            header_end=f_hdr_end[rows],
            lock=f_lock[rows],
            power=power[rows],
            tiebreak=rows,
            required_dbm=required,
        )
        res = resolve_table(table, c, ch.sensitivity_dbm)
        ok = res.verdict == Verdict.DECODED
        if home_only:
            ok &= better[rows]
        decoded[rows] |= ok
        if fading or home_only:
            sel = better[rows]
        else:
            sel = best_gw[f_dev[rows]] == g
        best_verdict[rows[sel]] = res.verdict[sel]

    best_rssi = best_power
    f_ring = dep.device_ring[f_dev]
    rp = best_rssi + r.g_rx_dbi - 30.0
    snr = best_rssi - nf
    verdict = np.where(decoded, int(Verdict.DECODED), best_verdict)
    # a frame decoded elsewhere but not at its best gateway still counts as delivered
    threshold_rp = scenario.rp_threshold_dbw

    rings = []
    for k, radius in enumerate(dep.ring_plan.radii_km):
        m = f_ring == k
        sched = int(m.sum())
        dev_m = dep.device_ring == k
        lost = {cause: int(np.sum(m & (verdict == v))) for v, cause in _CAUSE_OF.items()}
        deliv = int(np.sum(m & decoded))
        rings.append(RingMetrics(
            ring=k,
            radius_km=float(radius),
            devices=int(dev_m.sum()),
            scheduled=sched,
            delivered=deliv,
            lost=lost,
            plr=(sched - deliv) / sched if sched else None,
            mean_rssi_dbm=_mean(best_rssi[m]),
            mean_snr_db=_mean(snr[m]),
            mean_rp_dbw=_mean(rp[m]),
            above_threshold_fraction=float(np.mean(rp[m] > threshold_rp)) if sched else None,
            mean_tp_dbm=_mean(plan.tp[dev_m]),
            mean_sf=_mean(plan.sf[dev_m].astype(float)),
        ))

    per_sf = {}
    for s in sfs:
        m = f_sf == s
        if m.any() or np.any(plan.sf == s):
            per_sf[str(s)] = {"scheduled": int(m.sum()), "delivered": int(np.sum(m & decoded))}
    causes = {cause: int(np.sum(verdict == v)) for v, cause in _CAUSE_OF.items()}
    delivered = int(decoded.sum())
    return MetricsReport(
        gw_count=n_gw,
        policy=scenario.policy.kind,
        allocation=scenario.deployment.allocation.kind,
        seed=scenario.seed,
        scheduled=n_frames,
        delivered=delivered,
        plr=(n_frames - delivered) / n_frames if n_frames else None,
        rp_threshold_dbw=threshold_rp,
        above_threshold_fraction=float(np.mean(rp > threshold_rp)) if n_frames else None,
        rings=rings,
        loss_causes=causes,
        per_sf=per_sf,
        traces=plan.traces,
        frame_rp_dbw=rp,
        frame_decoded=decoded,
        frame_ring=f_ring,
    )


def _mean(x: np.ndarray) -> float | None:
    return float(np.mean(x)) if len(x) else None


# --------------------------------------------------------------------------
# metrics and experiment drivers


def compute_plr(report: MetricsReport, ring_index: int) -> float | None:
    """Lost over scheduled frames for one ring; ``None`` when nothing was scheduled."""
    r = report.ring(ring_index)
    if r.scheduled == 0:
        return None
    return (r.scheduled - r.delivered) / r.scheduled


def rp_threshold_fraction(report: MetricsReport, threshold_rp_dbw: float | None = None) -> float | None:
    """Share of uplink frames whose received power (best gateway) is above the threshold."""
    thr = report.rp_threshold_dbw if threshold_rp_dbw is None else threshold_rp_dbw
    if report.frame_rp_dbw is None or len(report.frame_rp_dbw) == 0:
        return None
    return float(np.mean(report.frame_rp_dbw > thr))


@dataclass
class PolicyComparison:
    rows: list[dict]
    snr_plr: float | None
    rssi_plr: float | None
    winner: str
    reports: dict[str, MetricsReport] = field(repr=False, default_factory=dict)


def compare_policies(base: Scenario, policies: tuple[str, str] = ("snr", "rssi")) -> PolicyComparison:
    """Run two policies on the same seed and geometry and tabulate per-ring metrics."""
    reports = {}
    labels = []
    for i, kind in enumerate(policies):
        label = kind if kind not in labels else f"{kind}_{i}"
        labels.append(label)
        reports[label] = run_scenario(base.with_updates(policy={"kind": kind}, radio={"tp_dbm": 14.0}))
    a, b = labels
    metrics = ("plr", "mean_rssi_dbm", "mean_snr_db", "mean_rp_dbw", "above_threshold_fraction")
    rows = []
    for ra, rb in zip(reports[a].rings, reports[b].rings):
        for m in metrics:
            va, vb = getattr(ra, m), getattr(rb, m)
            rows.append({
                "ring": ra.ring,
                "metric": m,
                a: va,
                b: vb,
                "delta": None if va is None or vb is None else vb - va,
            })
    pa, pb = reports[a].plr, reports[b].plr
    if pa is None or pb is None or pa == pb:
        winner = "tie"
    else:
        winner = b if pb < pa else a
    return PolicyComparison(rows=rows, snr_plr=reports[a].plr, rssi_plr=reports[b].plr, winner=winner, reports=reports)


def sweep_gateways(template: Scenario, gw_counts) -> list[MetricsReport]:
    """One run per gateway count, all sharing the template's seed, ordered by count."""
    counts = sorted(gw_counts)
    if not counts:
        raise ValueError("gw_counts must be non-empty")
    return [run_scenario(template.with_updates(deployment={"gw_count": g})) for g in counts]
