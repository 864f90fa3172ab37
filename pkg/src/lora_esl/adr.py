"""Adaptive data rate state machines.

Two policies are provided: an SNR-driven one that walks the spreading factor
at a constant 14 dBm, and an RSSI-driven one that climbs a 3 dB transmit-power
ladder from 14 to 29 dBm. Both are pure: a step returns a new state and never
mutates its input.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .link_budget import SF_MAX, SF_MIN, SnrFloorTable

SNR_POLICY_TP_DBM = 14.0
TP_LADDER_DBM = (14.0, 17.0, 20.0, 23.0, 26.0, 29.0)
TP_STEP_DB = 3.0
NSTEP_GRANULARITY_DB = 3.0


class DeviceClass(enum.Enum):
    CLASS_A = "A"
    CLASS_B = "B"


class Downlink(enum.Enum):
    CONFIGURATION_FRAME = "configuration_frame"
    BEACON = "beacon"


class Action(enum.Enum):
    SEND_NEW_PACKET = "send_new_packet"
    ADJUST_SF = "adjust_sf"
    ADJUST_TP = "adjust_tp"
    UNSUCCESSFUL = "unsuccessful_transmission"


class AdrError(ValueError):
    pass


def bootstrap_session(device_class: DeviceClass) -> Downlink:
    """First downlink a device waits for before any adaptation."""
    if device_class is DeviceClass.CLASS_A:
        return Downlink.CONFIGURATION_FRAME
    if device_class is DeviceClass.CLASS_B:
        return Downlink.BEACON
    raise AdrError(f"unsupported device class {device_class!r}")


@dataclass(frozen=True)
class SnrAdrState:
    sf: int = SF_MIN
    n_step: int | None = None  # None until the first measurement
    dr_idx: int = 0
    threshold_db: float = 0.0
    tp: float = SNR_POLICY_TP_DBM
    # "robust": a weak margin moves to a higher SF; "literal": to a lower one
    sf_step_direction: str = "robust"

    def __post_init__(self):
        if not SF_MIN <= self.sf <= SF_MAX:
            raise AdrError(f"sf {self.sf} outside [{SF_MIN}, {SF_MAX}]")
        if self.tp != SNR_POLICY_TP_DBM:
            raise AdrError(f"SNR policy runs at a fixed {SNR_POLICY_TP_DBM} dBm, got {self.tp}")
        if self.n_step is not None and self.n_step < 0:
            raise AdrError("n_step must be non-negative")
        if self.dr_idx < 0:
            raise AdrError("dr_idx must be non-negative")
        if self.sf_step_direction not in ("robust", "literal"):
            raise AdrError(f"unknown sf_step_direction {self.sf_step_direction!r}")


@dataclass(frozen=True)
class RssiAdrState:
    tp: float = TP_LADDER_DBM[0]
    receiver_threshold_dbm: float = -123.0

    def __post_init__(self):
        if self.tp not in TP_LADDER_DBM:
            raise AdrError(f"tp {self.tp} dBm is not on the ladder {TP_LADDER_DBM}")


@dataclass(frozen=True)
class AdrDecision:
    action: Action
    state: SnrAdrState | RssiAdrState
    new_sf: int | None = None
    new_tp: float | None = None
    margin_db: float | None = None
    clamped: bool = False


def snr_adr_step(state: SnrAdrState, measured_snr_db: float, floors: SnrFloorTable | None = None) -> AdrDecision:
    floors = floors or SnrFloorTable()
    m = measured_snr_db - floors[state.sf]
    if state.n_step is None:
        state = replace(state, n_step=max(0, int(m // NSTEP_GRANULARITY_DB)))
    if state.n_step > 0 and m >= state.threshold_db:
        # equality is treated as passing
        return AdrDecision(Action.SEND_NEW_PACKET, state, margin_db=m)
    if state.n_step > 0:
        step = 1 if state.sf_step_direction == "robust" else -1
        target = state.sf + step
        new_sf = min(max(target, SF_MIN), SF_MAX)
        new_state = replace(state, sf=new_sf, dr_idx=state.dr_idx + 1, n_step=state.n_step - 1)
        return AdrDecision(Action.ADJUST_SF, new_state, new_sf=new_sf, margin_db=m, clamped=new_sf != target)
    return AdrDecision(Action.UNSUCCESSFUL, state, margin_db=m)


def rssi_adr_step(state: RssiAdrState, received_rssi_dbm: float) -> AdrDecision:
    if received_rssi_dbm >= state.receiver_threshold_dbm:
        return AdrDecision(Action.SEND_NEW_PACKET, state)
    if state.tp < TP_LADDER_DBM[-1]:
        new_tp = state.tp + TP_STEP_DB
        return AdrDecision(Action.ADJUST_TP, replace(state, tp=new_tp), new_tp=new_tp)
    return AdrDecision(Action.UNSUCCESSFUL, state)
