"""Scenario configuration: nested dataclasses and their JSON form.

Parsing is strict: unknown keys are rejected and every error names the
offending field path (``radio.bw_khz``). Defaults reproduce the bundled
ten-gateway / single-gateway experiment parameters.
"""

from __future__ import annotations

import dataclasses
import json
import math
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .deployment import DEFAULT_RING_RADII_KM
from .link_budget import BANDWIDTHS_KHZ, DEFAULT_SNR_FLOORS_DB, OBSTACLE_LOSS_DB, SF_MAX, SF_MIN


class ConfigError(ValueError):
    def __init__(self, path: str, message: str, line: int | None = None):
        self.path = path
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{path}: {message}" if path else f"{where}{message}")


@dataclass(frozen=True)
class LayoutConfig:
    kind: str = "kmeans"
    positions: tuple[tuple[int, float, float], ...] = ()
    venue_radius_km: float | None = 3.2  # None: outermost ring radius
    clip_to_venue: bool = True


@dataclass(frozen=True)
class AllocationConfig:
    kind: str = "arithmetic"
    first_term: int = 200
    common_diff: int = 100
    fibonacci_orientation: str = "outward"


@dataclass(frozen=True)
class DeploymentConfig:
    gw_count: int = 1
    gw_layout: LayoutConfig = field(default_factory=LayoutConfig)
    ring_radii_km: tuple[float, ...] = DEFAULT_RING_RADII_KM
    allocation: AllocationConfig = field(default_factory=AllocationConfig)


@dataclass(frozen=True)
class RadioSection:
    cf_mhz: float = 868.0
    bw_khz: int = 125
    sf_range: tuple[int, int] = (SF_MIN, SF_MAX)
    tp_dbm: float = 14.0
    tp_schedule: tuple[float, ...] | None = None
    payload_bytes: int = 16
    cr: int = 1
    preamble_symbols: int = 8
    explicit_header: bool = True
    crc: bool = True
    noise_figure_db: float = 6.0
    g_tx_dbi: float = 2.15
    g_rx_dbi: float = 2.15
    snr_floors_db: dict[int, float] | None = None


@dataclass(frozen=True)
class PathLossSection:
    ref_loss_db: float = 42.84
    ref_distance_km: float = 0.01
    exponent: float = 4.31
    sigma_db: float = 3.0
    obstacles: tuple[str | float, ...] = ("concrete_wall", "concrete_wall")
    per_packet_fading: bool = False
    fading_sigma_db: float = 2.0


@dataclass(frozen=True)
class PolicySection:
    kind: str = "rssi"
    threshold: float | None = None  # dBm for rssi, margin dB for snr
    sf_step_direction: str = "robust"
    epochs: int = 10
    granularity: str = "cluster"
    sf_init: str = "schedule"


@dataclass(frozen=True)
class ChannelSection:
    capture_db: float = 6.0
    sensitivity_dbm: float = -123.0
    cosf_penalty_db: float = 0.0
    rp_threshold_dbw: float | None = None
    reception: str = "any"  # "any": decoded at any gateway counts; "home": only the serving gateway


@dataclass(frozen=True)
class TrafficSection:
    mean_interarrival_s: float = 600.0
    horizon_s: float = 86400.0


@dataclass(frozen=True)
class Scenario:
    deployment: DeploymentConfig = field(default_factory=DeploymentConfig)
    radio: RadioSection = field(default_factory=RadioSection)
    pathloss: PathLossSection = field(default_factory=PathLossSection)
    policy: PolicySection = field(default_factory=PolicySection)
    channel: ChannelSection = field(default_factory=ChannelSection)
    traffic: TrafficSection = field(default_factory=TrafficSection)
    seed: int = 0

    def __post_init__(self):
        validate(self)

    @property
    def gw_count(self) -> int:
        return self.deployment.gw_count

    @property
    def policy_threshold(self) -> float:
        if self.policy.threshold is not None:
            return self.policy.threshold
        return self.channel.sensitivity_dbm if self.policy.kind == "rssi" else 0.0

    @property
    def rp_threshold_dbw(self) -> float:
        if self.channel.rp_threshold_dbw is not None:
            return self.channel.rp_threshold_dbw
        return self.channel.sensitivity_dbm + self.radio.g_rx_dbi - 30.0

    @property
    def obstacle_losses_db(self) -> tuple[float, ...]:
        return tuple(OBSTACLE_LOSS_DB[o] if isinstance(o, str) else float(o) for o in self.pathloss.obstacles)

    def with_updates(self, **changes: dict[str, Any]) -> Scenario:
        """Copy with per-section overrides, e.g. ``with_updates(policy={"kind": "snr"}, seed=3)``."""
        data = to_dict(self)
        for section, value in changes.items():
            if isinstance(value, dict):
                _deep_update(data[section], value)
            else:
                data[section] = value
        return from_dict(data)


def _deep_update(target: dict, updates: dict) -> None:
    for k, v in updates.items():
        if isinstance(v, dict) and isinstance(target.get(k), dict):
            _deep_update(target[k], v)
        else:
            target[k] = v


def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ConfigError(path, msg)


def validate(s: Scenario) -> None:
    d = s.deployment
    _require(d.gw_count >= 1, "deployment.gw_count", "must be >= 1")
    _require(d.gw_layout.kind in ("kmeans", "grid", "explicit"), "deployment.gw_layout.kind", "must be kmeans, grid or explicit")
    if d.gw_layout.kind == "explicit":
        ids = [p[0] for p in d.gw_layout.positions]
        _require(len(ids) == d.gw_count, "deployment.gw_layout.positions", "need exactly gw_count positions")
        _require(len(set(ids)) == len(ids), "deployment.gw_layout.positions", "gateway ids overlap")
    v = d.gw_layout.venue_radius_km
    _require(v is None or v > 0, "deployment.gw_layout.venue_radius_km", "must be positive")
    radii = d.ring_radii_km
    _require(len(radii) >= 1 and radii[0] > 0 and all(b > a for a, b in zip(radii, radii[1:])),
             "deployment.ring_radii_km", "must be positive and strictly increasing")
    a = d.allocation
    _require(a.kind in ("arithmetic", "fibonacci"), "deployment.allocation.kind", "must be arithmetic or fibonacci")
    _require(a.first_term > 0, "deployment.allocation.first_term", "must be positive")
    _require(a.common_diff >= 0, "deployment.allocation.common_diff", "must be non-negative")
    _require(a.fibonacci_orientation in ("outward", "inward"), "deployment.allocation.fibonacci_orientation",
             "must be outward or inward")

    r = s.radio
    _require(r.bw_khz in BANDWIDTHS_KHZ, "radio.bw_khz", f"must be one of {BANDWIDTHS_KHZ}")
    lo, hi = r.sf_range
    _require(SF_MIN <= lo <= hi <= SF_MAX, "radio.sf_range", f"must satisfy {SF_MIN} <= lo <= hi <= {SF_MAX}")
    _require(1 <= r.cr <= 4, "radio.cr", "must be in [1, 4]")
    _require(r.payload_bytes >= 0, "radio.payload_bytes", "must be non-negative")
    _require(r.preamble_symbols >= 6, "radio.preamble_symbols", "must be >= 6")
    _require(14.0 <= r.tp_dbm <= 29.0, "radio.tp_dbm", "must be in [14, 29]")
    if r.tp_schedule is not None:
        _require(len(r.tp_schedule) == len(radii), "radio.tp_schedule", "needs one entry per ring")
        _require(all(t in (14, 17, 20, 23, 26, 29) for t in r.tp_schedule), "radio.tp_schedule",
                 "entries must lie on the 14..29 dBm ladder in 3 dB steps")
    if s.policy.kind == "rssi":
        _require(r.tp_dbm in (14, 17, 20, 23, 26, 29), "radio.tp_dbm", "must lie on the 14..29 dBm ladder for the rssi policy")
    if r.snr_floors_db is not None:
        _require(sorted(int(k) for k in r.snr_floors_db) == list(range(SF_MIN, SF_MAX + 1)), "radio.snr_floors_db",
                 "needs one entry per SF 7..12")

    p = s.pathloss
    _require(p.exponent > 0, "pathloss.exponent", "must be positive")
    _require(p.ref_distance_km > 0, "pathloss.ref_distance_km", "must be positive")
    _require(p.sigma_db >= 0, "pathloss.sigma_db", "must be non-negative")
    _require(p.fading_sigma_db >= 0, "pathloss.fading_sigma_db", "must be non-negative")
    for i, o in enumerate(p.obstacles):
        _require(not isinstance(o, str) or o in OBSTACLE_LOSS_DB, f"pathloss.obstacles[{i}]",
                 f"unknown obstacle {o!r}; known: {sorted(OBSTACLE_LOSS_DB)}")

    pol = s.policy
    _require(pol.kind in ("rssi", "snr"), "policy.kind", "must be rssi or snr")
    _require(pol.sf_step_direction in ("robust", "literal"), "policy.sf_step_direction", "must be robust or literal")
    _require(pol.epochs >= 0, "policy.epochs", "must be non-negative")
    _require(pol.granularity in ("cluster", "device"), "policy.granularity", "must be cluster or device")
    _require(pol.sf_init in ("schedule", "min"), "policy.sf_init", "must be schedule or min")

    c = s.channel
    _require(c.capture_db >= 0, "channel.capture_db", "must be non-negative")
    _require(c.cosf_penalty_db >= 0, "channel.cosf_penalty_db", "must be non-negative")
    _require(c.reception in ("any", "home"), "channel.reception", "must be any or home")

    t = s.traffic
    _require(t.mean_interarrival_s > 0, "traffic.mean_interarrival_s", "must be positive")
    _require(t.horizon_s >= 0, "traffic.horizon_s", "must be non-negative")


# --------------------------------------------------------------------------
# dict / JSON conversion


def _encode(value):
    if dataclasses.is_dataclass(value):
        return {f.name: _encode(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, tuple):
        return [_encode(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _encode(v) for k, v in value.items()}
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def to_dict(scenario: Scenario) -> dict:
    return _encode(scenario)


def _decode(tp, value, path: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        errors = []
        for arg in args:
            if arg is type(None):
                continue
            try:
                return _decode(arg, value, path)
            except ConfigError as exc:
                errors.append(exc)
        raise errors[0] if errors else ConfigError(path, "must not be null")
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(path, "must be an object")
        hints = typing.get_type_hints(tp)
        names = {f.name for f in dataclasses.fields(tp)}
        unknown = sorted(set(value) - names)
        if unknown:
            raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")
        kwargs = {k: _decode(hints[k], v, f"{path}.{k}" if path else k) for k, v in value.items()}
        return tp(**kwargs)
    if origin is tuple:
        if not isinstance(value, list):
            raise ConfigError(path, "must be a list")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_decode(args[0], v, f"{path}[{i}]") for i, v in enumerate(value))
        if len(value) != len(args):
            raise ConfigError(path, f"must have {len(args)} entries")
        return tuple(_decode(a, v, f"{path}[{i}]") for i, (a, v) in enumerate(zip(args, value)))
    if origin is dict:
        if not isinstance(value, dict):
            raise ConfigError(path, "must be an object")
        kt, vt = args
        try:
            return {kt(k): _decode(vt, v, f"{path}.{k}") for k, v in value.items()}
        except (TypeError, ValueError) as exc:
            raise ConfigError(path, str(exc)) from None
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, "must be true or false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, "must be an integer")
        return value
    if tp is float:
        if isinstance(value, str) and value in ("inf", "-inf"):
            return float(value)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, "must be a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(path, "must be a string")
        return value
    raise ConfigError(path, f"unsupported field type {tp}")


def from_dict(data: dict) -> Scenario:
    try:
        return _decode(Scenario, data, "")
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("", str(exc)) from None


def loads(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
    return from_dict(data)


def load(path: str | Path) -> Scenario:
    text = Path(path).read_text()
    try:
        return loads(text)
    except ConfigError as exc:
        if exc.line is None and exc.path:
            exc.line = _line_of(text, exc.path)
            if exc.line is not None:
                exc.args = (f"line {exc.line}: {exc.args[0]}",)
        raise


def _line_of(text: str, path: str) -> int | None:
    leaf = path.split(".")[-1].split("[")[0]
    for n, line in enumerate(text.splitlines(), start=1):
        if f'"{leaf}"' in line:
            return n
    return None


def dumps(scenario: Scenario) -> str:
    return json.dumps(to_dict(scenario), indent=2)


def save(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(dumps(scenario) + "\n")
