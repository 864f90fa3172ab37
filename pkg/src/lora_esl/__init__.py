"""LoRa electronic-shelf-label network simulator."""

from .config import Scenario, ConfigError, load, loads, dumps
from .simulator import MetricsReport, compare_policies, compute_plr, rp_threshold_fraction, run_scenario, sweep_gateways

__all__ = [
    "ConfigError",
    "MetricsReport",
    "Scenario",
    "compare_policies",
    "compute_plr",
    "dumps",
    "load",
    "loads",
    "rp_threshold_fraction",
    "run_scenario",
    "sweep_gateways",
]
