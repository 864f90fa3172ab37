"""Propagation and link formulas for a LoRa uplink.

Everything here is a pure function of its arguments. Power quantities are in
dB-scaled units: dBm for transmit power and RSSI, dBi for antenna gains, dB for
losses and SNR, dBW for received power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

BANDWIDTHS_KHZ = (125, 250, 500)
SF_MIN, SF_MAX = 7, 12

# Attenuation of common indoor obstacles, dB.
OBSTACLE_LOSS_DB = {
    "concrete_wall": 2.2,
    "glass": 2.04,
    "wooden_door": 2.11,
    "soft_partition": 2.5,
}

DEFAULT_SNR_FLOORS_DB = {7: -7.5, 8: -10.0, 9: -12.5, 10: -15.0, 11: -17.5, 12: -20.0}

THERMAL_NOISE_DBM_HZ = -174.0


class LinkBudgetError(ValueError):
    """Input outside the domain of a link formula."""


@dataclass(frozen=True)
class RadioConfig:
    carrier_freq: float = 868.0  # MHz
    bandwidth: int = 125  # kHz
    sf: int = 7
    cr_denominator_n: int = 1  # code rate 4/(4+n)
    tp: float = 14.0  # dBm
    payload: int = 16  # bytes
    preamble_symbols: int = 8
    explicit_header: bool = True
    crc_on: bool = True

    def __post_init__(self):
        if self.bandwidth not in BANDWIDTHS_KHZ:
            raise LinkBudgetError(f"bandwidth must be one of {BANDWIDTHS_KHZ} kHz, got {self.bandwidth}")
        if not SF_MIN <= self.sf <= SF_MAX:
            raise LinkBudgetError(f"sf must be in [{SF_MIN}, {SF_MAX}], got {self.sf}")
        if not 1 <= self.cr_denominator_n <= 4:
            raise LinkBudgetError(f"cr_denominator_n must be in [1, 4], got {self.cr_denominator_n}")
        if self.payload < 0 or self.preamble_symbols < 0:
            raise LinkBudgetError("payload and preamble_symbols must be non-negative")
        if not math.isfinite(self.tp):
            raise LinkBudgetError("tp must be finite")

    @property
    def bandwidth_hz(self) -> float:
        return self.bandwidth * 1000.0

    @property
    def chips_per_symbol(self) -> int:
        return 2**self.sf

    @property
    def symbol_time(self) -> float:
        return self.chips_per_symbol / self.bandwidth_hz

    @property
    def low_data_rate_optimize(self) -> bool:
        return self.sf >= 11 and self.bandwidth == 125


@dataclass(frozen=True)
class PathLossParams:
    ref_loss_db: float = 42.84
    ref_distance_km: float = 0.01
    exponent: float = 4.31
    shadow_sigma_db: float = 0.0
    obstacle_losses_db: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.exponent > 0:
            raise LinkBudgetError("path-loss exponent must be positive")
        if not self.shadow_sigma_db >= 0:
            raise LinkBudgetError("shadow_sigma_db must be non-negative")
        if not self.ref_distance_km > 0:
            raise LinkBudgetError("ref_distance_km must be positive")
        object.__setattr__(self, "obstacle_losses_db", tuple(float(x) for x in self.obstacle_losses_db))

    @property
    def obstacle_total_db(self) -> float:
        return sum(self.obstacle_losses_db)


@dataclass(frozen=True)
class AntennaGains:
    g_tx: float = 2.15
    g_rx: float = 2.15


@dataclass(frozen=True)
class SnrFloorTable:
    """Required demodulation SNR per spreading factor."""

    floors: Mapping[int, float] = field(default_factory=lambda: dict(DEFAULT_SNR_FLOORS_DB))

    def __post_init__(self):
        floors = {int(k): float(v) for k, v in self.floors.items()}
        if sorted(floors) != list(range(SF_MIN, SF_MAX + 1)):
            raise LinkBudgetError("floor table needs one entry for every SF 7..12")
        values = [floors[sf] for sf in range(SF_MIN, SF_MAX + 1)]
        if any(b >= a for a, b in zip(values, values[1:])):
            raise LinkBudgetError("floor table must be strictly decreasing in SF")
        object.__setattr__(self, "floors", floors)

    def __getitem__(self, sf: int) -> float:
        if sf not in self.floors:
            raise LinkBudgetError(f"sf must be in [{SF_MIN}, {SF_MAX}], got {sf}")
        return self.floors[sf]


def _check_finite(**values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise LinkBudgetError(f"{name} must be finite, got {v}")


def path_loss(distance_km: float, params: PathLossParams, shadow_sample_db: float = 0.0) -> float:
    """Log-distance path loss in dB, including obstacle attenuation.

    ``shadow_sample_db`` is one draw of the zero-mean shadowing term; the caller
    owns the randomness so that links can be frozen across a run.
    """
    if not distance_km > 0:
        raise LinkBudgetError(f"path loss: distance must be positive, got {distance_km} km")
    if distance_km < params.ref_distance_km:
        raise LinkBudgetError(
            f"path loss: distance {distance_km} km is below the reference distance {params.ref_distance_km} km"
        )
    return (
        params.ref_loss_db
        + 10.0 * params.exponent * math.log10(distance_km / params.ref_distance_km)
        + shadow_sample_db
        + params.obstacle_total_db
    )


def rssi(tp_dbm: float, g_tx_dbi: float, l_pl_db: float) -> float:
    _check_finite(tp_dbm=tp_dbm, g_tx_dbi=g_tx_dbi, l_pl_db=l_pl_db)
    return tp_dbm + g_tx_dbi - l_pl_db


def received_power_dbw(rssi_db: float, g_rx_dbi: float) -> float:
    """Received power in dBW from RSSI and the receive antenna gain."""
    _check_finite(rssi_db=rssi_db, g_rx_dbi=g_rx_dbi)
    return rssi_db + g_rx_dbi - 30.0


def received_power_diag_dbw(rssi_db: float, snr_db: float) -> float:
    """Diagnostic received-power form with the ``1 + 10^(SNR/10)`` correction.

    Evaluated exactly as written, linear term and all. Not used by the metric
    pipeline; :func:`received_power_dbw` is the canonical form.
    """
    _check_finite(rssi_db=rssi_db, snr_db=snr_db)
    return rssi_db + snr_db - (1.0 + 10.0 ** (0.1 * snr_db)) - 30.0


def snr_measured(rssi_dbm: float, noise_floor_dbm: float) -> float:
    _check_finite(rssi_dbm=rssi_dbm, noise_floor_dbm=noise_floor_dbm)
    return rssi_dbm - noise_floor_dbm


def noise_floor(bandwidth_hz: float, noise_figure_db: float = 6.0) -> float:
    if not bandwidth_hz > 0:
        raise LinkBudgetError(f"noise floor: bandwidth must be positive, got {bandwidth_hz} Hz")
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


def margin(snr_measured_db: float, sf: int, floors: SnrFloorTable | None = None) -> float:
    """Demodulation margin: positive is demodulable, negative is weak/corrupt."""
    floors = floors or SnrFloorTable()
    if not SF_MIN <= sf <= SF_MAX:
        raise LinkBudgetError(f"margin: sf must be in [{SF_MIN}, {SF_MAX}], got {sf}")
    return snr_measured_db - floors[sf]


def payload_symbols(cfg: RadioConfig) -> int:
    de = 1 if cfg.low_data_rate_optimize else 0
    ih = 0 if cfg.explicit_header else 1
    crc = 1 if cfg.crc_on else 0
    num = 8 * cfg.payload - 4 * cfg.sf + 28 + 16 * crc - 20 * ih
    blocks = math.ceil(num / (4 * (cfg.sf - 2 * de)))
    return 8 + max(blocks * (cfg.cr_denominator_n + 4), 0)


def preamble_time(cfg: RadioConfig) -> float:
    return (cfg.preamble_symbols + 4.25) * cfg.symbol_time


def airtime(cfg: RadioConfig) -> float:
    """Time on air of one frame, seconds (standard Semtech LoRa formula)."""
    if not isinstance(cfg, RadioConfig):
        raise LinkBudgetError("airtime needs a RadioConfig")
    return preamble_time(cfg) + payload_symbols(cfg) * cfg.symbol_time


def header_time(cfg: RadioConfig) -> float:
    """Duration of the explicit PHY header (first 8 payload symbols); 0 when implicit."""
    return 8 * cfg.symbol_time if cfg.explicit_header else 0.0
