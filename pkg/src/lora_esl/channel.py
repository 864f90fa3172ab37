"""Pure-ALOHA uplink traffic and frame-level reception at the gateways.

Reception model
---------------
Frames interact only with frames on the same gateway, channel and spreading
factor; other spreading factors are quasi-orthogonal and at most add an SNR
penalty (:func:`co_sf_interference_filter`). Within an overlap group every
time-overlapping pair is judged by who arrived first (E, the earlier frame),
who arrived later (L) and the power gap ``L - E`` against the capture
threshold ``c``:

* E at least ``c`` stronger: E keeps the receiver, L is ``LOST_CAPTURE``.
* gap within ``c`` either way: neither can be separated, both are
  ``LOST_COLLISION`` (case a, "too close to call").
* L at least ``c`` stronger, by where L lands in E's frame:

  - (b) before E's preamble has ended, so L also covers E's header: the
    receiver re-synchronises on L. E lost, L survives.
  - (c) inside E's explicit header: E's header fails, the receiver is released
    at E's header end and L survives only if at least 5 of its preamble
    symbols are left by then (``L.lock >= E.header_end``).
  - (d) inside E's payload: the receiver is locked on E. E is corrupted
    (``LOST_CAPTURE``) and L arrived too late to lock (``LOST_COLLISION``).

A frame below sensitivity, or whose SNR is below the floor for its SF, never
locks the receiver; it only acts as noise that hurts frames less than ``c``
above it. After the pairwise pass, at most one frame per overlap group is
decoded: if several survive (possible only along chains), the earliest keeps
the receiver.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .link_budget import RadioConfig, airtime, header_time, preamble_time

LOCK_SYMBOLS = 5


class ChannelError(ValueError):
    pass


class Verdict(enum.IntEnum):
    DECODED = 0
    LOST_COLLISION = 1
    LOST_CAPTURE = 2
    LOST_BELOW_SENSITIVITY = 3
    LOST_CORRUPT = 4


@dataclass(frozen=True)
class TransmissionEvent:
    device_id: int
    gw_id: int
    start: float
    airtime: float
    sf: int
    channel_freq: float
    rx_power_dbm: float
    header_end: float
    preamble_end: float
    symbol_time: float
    frame_id: int = -1

    def __post_init__(self):
        if not self.airtime > 0:
            raise ChannelError("airtime must be positive")
        if not self.header_end < self.start + self.airtime:
            raise ChannelError("header must end before the frame does")

    @property
    def end(self) -> float:
        return self.start + self.airtime

    @property
    def lock_time(self) -> float:
        return self.preamble_end - LOCK_SYMBOLS * self.symbol_time

    @classmethod
    def from_radio(
        cls,
        device_id: int,
        gw_id: int,
        start: float,
        cfg: RadioConfig,
        rx_power_dbm: float,
        frame_id: int = -1,
    ) -> TransmissionEvent:
        pre_end = start + preamble_time(cfg)
        return cls(
            device_id=device_id,
            gw_id=gw_id,
            start=start,
            airtime=airtime(cfg),
            sf=cfg.sf,
            channel_freq=cfg.carrier_freq,
            rx_power_dbm=rx_power_dbm,
            header_end=pre_end + header_time(cfg),
            preamble_end=pre_end,
            symbol_time=cfg.symbol_time,
            frame_id=frame_id,
        )


@dataclass(frozen=True)
class ReceptionOutcome:
    event: TransmissionEvent
    verdict: Verdict
    interferers: tuple[TransmissionEvent, ...] = ()

    @property
    def decoded(self) -> bool:
        return self.verdict is Verdict.DECODED


@dataclass(frozen=True)
class TrafficModel:
    mean_interarrival: float = 600.0  # s per device
    horizon: float = 86400.0  # s
    seed: int = 0

    def __post_init__(self):
        if not self.mean_interarrival > 0:
            raise ChannelError("mean_interarrival must be positive")
        if self.horizon < 0:
            raise ChannelError("horizon must be non-negative")


# --------------------------------------------------------------------------
# traffic


def schedule_frames(n_devices: int, traffic: TrafficModel) -> tuple[np.ndarray, np.ndarray]:
    """Poisson arrivals per device over the horizon.

    Returns ``(device, start)`` sorted by start, ties by device. Each device
    draws its count and then uniform arrival instants, which is a Poisson
    process conditioned on the count.
    """
    if traffic.horizon == 0 or n_devices == 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    rng = np.random.default_rng([traffic.seed, 0x7AF])
    counts = rng.poisson(traffic.horizon / traffic.mean_interarrival, n_devices)
    device = np.repeat(np.arange(n_devices, dtype=np.int64), counts)
    start = rng.uniform(0.0, traffic.horizon, counts.sum())
    order = np.lexsort((device, start))
    return device[order], start[order]


def schedule_uplinks(
    deployment,
    traffic: TrafficModel,
    radio: Sequence[RadioConfig],
    rx_power_dbm: Sequence[float],
) -> list[TransmissionEvent]:
    """Uplink events at each device's home gateway, sorted by start.

    ``radio[i]`` and ``rx_power_dbm[i]`` give device ``i``'s configuration and
    the power its frames arrive with at the home gateway.
    """
    device, start = schedule_frames(deployment.n_devices, traffic)
    events = []
    for f, (d, t) in enumerate(zip(device.tolist(), start.tolist())):
        gw = int(deployment.gateway_ids[deployment.device_home[d]])
        events.append(TransmissionEvent.from_radio(d, gw, t, radio[d], float(rx_power_dbm[d]), frame_id=f))
    return events


# --------------------------------------------------------------------------
# overlap detection


def _sort_key(e: TransmissionEvent):
    return (e.start, e.device_id, e.frame_id, e.gw_id)


def find_overlaps(events: Sequence[TransmissionEvent]) -> list[list[TransmissionEvent]]:
    """Maximal groups of time-overlapping frames per (gateway, channel, SF).

    Groups are connected components of the overlap relation. A singleton
    group is an interference-free frame.
    """
    starts = [e.start for e in events]
    if any(b < a for a, b in zip(starts, starts[1:])):
        raise ChannelError("events must be sorted by start time")
    by_key: dict[tuple, list[TransmissionEvent]] = {}
    for e in events:
        by_key.setdefault((e.gw_id, e.channel_freq, e.sf), []).append(e)
    groups: list[list[TransmissionEvent]] = []
    for key in sorted(by_key):
        current: list[TransmissionEvent] = []
        busy_until = -np.inf
        for e in by_key[key]:
            if current and e.start >= busy_until:
                groups.append(current)
                current = []
            current.append(e)
            busy_until = max(busy_until, e.end) if len(current) > 1 else e.end
        if current:
            groups.append(current)
    groups.sort(key=lambda g: _sort_key(g[0]))
    return groups


# --------------------------------------------------------------------------
# vectorised reception core


@dataclass
class EventTable:
    """Column arrays for many reception events (one row per frame per gateway)."""

    key: np.ndarray  # int: (gateway, channel, sf) class
    start: np.ndarray
    end: np.ndarray
    preamble_end: np.ndarray
    header_end: np.ndarray
    lock: np.ndarray
    power: np.ndarray  # dBm at this gateway
    tiebreak: np.ndarray  # int, canonical order for equal start times
    required_dbm: np.ndarray | None = None  # power needed for SNR margin >= 0

    def __len__(self) -> int:
        return len(self.start)


@dataclass
class Resolution:
    verdict: np.ndarray  # Verdict codes, aligned with the input rows
    component: np.ndarray  # overlap group id per row
    pairs: tuple[np.ndarray, np.ndarray] = field(default_factory=lambda: (np.empty(0, int), np.empty(0, int)))
    # for each row index in ``killers[0]``, ``killers[1]`` is an interferer that cost it the frame
    killers: tuple[np.ndarray, np.ndarray] = field(default_factory=lambda: (np.empty(0, int), np.empty(0, int)))


def resolve_table(
    table: EventTable,
    capture_threshold_db: float = 6.0,
    sensitivity_dbm: float = -123.0,
    keep_killers: bool = False,
) -> Resolution:
    n = len(table)
    verdict = np.full(n, int(Verdict.DECODED), dtype=np.int8)
    if n == 0:
        return Resolution(verdict, np.empty(0, dtype=np.int64))
    c = float(capture_threshold_db)
    order = np.lexsort((table.tiebreak, table.start, table.key))
    key = table.key[order]
    start = table.start[order]
    end = table.end[order]
    power = table.power[order]

    below = power < sensitivity_dbm
    corrupt = np.zeros(n, dtype=bool)
    if table.required_dbm is not None:
        corrupt = ~below & (power < table.required_dbm[order])
    able = ~below & ~corrupt  # may lock the receiver

    # overlap components: a new group starts when a frame begins after every
    # earlier frame of the same class has ended
    _, key_rank = np.unique(key, return_inverse=True)
    span = float(end.max() - start.min()) + 1.0
    shift = key_rank * span
    s_adj, e_adj = start + shift, end + shift
    prev_max = np.maximum.accumulate(e_adj)
    new_group = np.ones(n, dtype=bool)
    new_group[1:] = s_adj[1:] >= prev_max[:-1]
    component = np.cumsum(new_group) - 1

    # all overlapping (earlier, later) pairs within a class
    e_idx, l_idx = [], []
    k = 1
    while k < n:
        i = np.arange(n - k)
        j = i + k
        hit = (key[i] == key[j]) & (start[j] < end[i])
        if not hit.any():
            break
        e_idx.append(i[hit])
        l_idx.append(j[hit])
        k += 1
    kill_col = np.zeros(n, dtype=bool)
    kill_cap = np.zeros(n, dtype=bool)
    kill_rows: list[np.ndarray] = []
    kill_by: list[np.ndarray] = []
    if e_idx:
        E = np.concatenate(e_idx)
        L = np.concatenate(l_idx)
        pe, pl = power[E], power[L]
        ae, al = able[E], able[L]
        gap = pl - pe
        both = ae & al
        e_wins = both & (gap <= -c)
        tie = both & (np.abs(gap) < c)
        l_strong = both & (gap >= c)
        tl = start[L]
        in_pre = l_strong & (tl < table.preamble_end[order][E])
        in_hdr = l_strong & ~in_pre & (tl < table.header_end[order][E])
        in_pay = l_strong & ~in_pre & ~in_hdr
        l_lockable = table.lock[order][L] >= table.header_end[order][E]

        # (E lost?, cause) and (L lost?, cause)
        e_col = tie | in_pre | in_hdr
        e_cap = in_pay
        l_col = tie | (in_hdr & ~l_lockable) | in_pay
        l_cap = e_wins
        # noise-only partners: a non-locking frame hurts the other one within c
        e_col |= ae & ~al & (pe < pl + c)
        l_col |= al & ~ae & (pl < pe + c)

        np.logical_or.at(kill_col, E[e_col], True)
        np.logical_or.at(kill_col, L[l_col], True)
        np.logical_or.at(kill_cap, E[e_cap], True)
        np.logical_or.at(kill_cap, L[l_cap], True)
        if keep_killers:
            kill_rows += [E[e_col | e_cap], L[l_col | l_cap]]
            kill_by += [L[e_col | e_cap], E[l_col | l_cap]]

    sorted_v = np.full(n, int(Verdict.DECODED), dtype=np.int8)
    sorted_v[kill_cap] = Verdict.LOST_CAPTURE
    sorted_v[kill_col] = Verdict.LOST_COLLISION
    sorted_v[corrupt & ~kill_col & ~kill_cap] = Verdict.LOST_CORRUPT
    sorted_v[below] = Verdict.LOST_BELOW_SENSITIVITY

    # one decoded frame per overlap group: the earliest survivor
    surv = np.flatnonzero(sorted_v == Verdict.DECODED)
    if len(surv):
        first_of_comp = np.ones(len(surv), dtype=bool)
        first_of_comp[1:] = component[surv[1:]] != component[surv[:-1]]
        extra = surv[~first_of_comp]
        if len(extra):
            sorted_v[extra] = Verdict.LOST_COLLISION
            if keep_killers:
                winner = surv[first_of_comp][np.searchsorted(component[surv[first_of_comp]], component[extra])]
                kill_rows.append(extra)
                kill_by.append(winner)

    verdict[order] = sorted_v
    comp_out = np.empty(n, dtype=np.int64)
    comp_out[order] = component
    res = Resolution(verdict, comp_out)
    if keep_killers and kill_rows:
        rows = np.concatenate(kill_rows)
        by = np.concatenate(kill_by)
        keep = np.isin(sorted_v[rows], (Verdict.LOST_COLLISION, Verdict.LOST_CAPTURE))
        res.killers = (order[rows[keep]], order[by[keep]])
    return res


def _table_from_events(events: Sequence[TransmissionEvent], required=None) -> EventTable:
    keys = {k: i for i, k in enumerate(sorted({(e.gw_id, e.channel_freq, e.sf) for e in events}))}
    arr = lambda f: np.array([f(e) for e in events], dtype=float)  # noqa: E731
    return EventTable(
        key=np.array([keys[(e.gw_id, e.channel_freq, e.sf)] for e in events], dtype=np.int64),
        start=arr(lambda e: e.start),
        end=arr(lambda e: e.end),
        preamble_end=arr(lambda e: e.preamble_end),
        header_end=arr(lambda e: e.header_end),
        lock=arr(lambda e: e.lock_time),
        power=arr(lambda e: e.rx_power_dbm),
        tiebreak=np.zeros(len(events), dtype=np.int64),
        required_dbm=None if required is None else np.asarray(required, dtype=float),
    )


def resolve_reception(
    group: Sequence[TransmissionEvent],
    capture_threshold_db: float = 6.0,
    sensitivity_dbm: float = -123.0,
    required_dbm: Sequence[float] | None = None,
) -> list[ReceptionOutcome]:
    """Verdict for every frame of one overlap group, in input order.

    ``required_dbm`` optionally gives, per frame, the power needed for a
    non-negative SNR margin; frames under it are ``LOST_CORRUPT``.
    """
    if not group:
        return []
    keys = {(e.gw_id, e.channel_freq, e.sf) for e in group}
    if len(keys) > 1:
        raise ChannelError(f"group mixes gateway/channel/SF classes: {sorted(keys)}")
    table = _table_from_events(group, required_dbm)
    # canonical tie order: device id, frame id, gateway id
    ranks = sorted(range(len(group)), key=lambda i: _sort_key(group[i]))
    tb = np.empty(len(group), dtype=np.int64)
    tb[ranks] = np.arange(len(group))
    table.tiebreak = tb
    res = resolve_table(table, capture_threshold_db, sensitivity_dbm, keep_killers=True)
    interferers: dict[int, list[int]] = {}
    for row, by in zip(*res.killers):
        interferers.setdefault(int(row), [])
        if int(by) not in interferers[int(row)]:
            interferers[int(row)].append(int(by))
    out = []
    for i, e in enumerate(group):
        v = Verdict(int(res.verdict[i]))
        inter = tuple(group[j] for j in sorted(interferers.get(i, []), key=lambda j: _sort_key(group[j])))
        out.append(ReceptionOutcome(e, v, inter if v in (Verdict.LOST_COLLISION, Verdict.LOST_CAPTURE) else ()))
    return out


# --------------------------------------------------------------------------
# cross-SF interference


def cross_sf_overlap(key_gw: np.ndarray, sf: np.ndarray, start: np.ndarray, end: np.ndarray) -> np.ndarray:
    """True where a frame overlaps at least one frame of another SF on the same gateway/channel."""
    n = len(start)
    hit = np.zeros(n, dtype=bool)
    for g in np.unique(key_gw):
        rows = np.flatnonzero(key_gw == g)
        for s in np.unique(sf[rows]):
            mine = rows[sf[rows] == s]
            other = rows[sf[rows] != s]
            if len(other) == 0:
                continue
            o_start = np.sort(start[other])
            o_end = np.sort(end[other])
            # intervals overlapping [a, b): started before b minus ended by a
            n_overlap = np.searchsorted(o_start, end[mine], side="left") - np.searchsorted(
                o_end, start[mine], side="right"
            )
            hit[mine] = n_overlap > 0
    return hit


def co_sf_interference_filter(
    events: Sequence[TransmissionEvent], penalty_db: float = 0.0
) -> list[tuple[TransmissionEvent, float]]:
    """Annotate each frame with the SNR penalty from overlapping other-SF frames.

    Frames on different SFs never destroy each other; a frame overlapped by
    any other-SF frame on the same gateway and channel loses ``penalty_db``
    of SNR. Frames without such overlap carry no annotation (0 dB).
    """
    if not events:
        return []
    keys = {k: i for i, k in enumerate(sorted({(e.gw_id, e.channel_freq) for e in events}))}
    key_gw = np.array([keys[(e.gw_id, e.channel_freq)] for e in events])
    sf = np.array([e.sf for e in events])
    start = np.array([e.start for e in events])
    end = np.array([e.end for e in events])
    hit = cross_sf_overlap(key_gw, sf, start, end)
    return [(e, penalty_db if h else 0.0) for e, h in zip(events, hit)]
