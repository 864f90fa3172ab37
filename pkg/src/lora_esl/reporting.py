"""CSV and JSON report writers.

Ring CSV header: ``ring,metric,value``. One row per ring per metric, with dB
quantities at 2 decimals and ratios at 4. Undefined values are left empty.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Sequence
from pathlib import Path

from .simulator import MetricsReport

RING_CSV_HEADER = ("ring", "metric", "value")
COMPARISON_CSV_HEADER = ("gw_count", "ring", "plr", "mean_rp_dbw", "above_threshold_fraction")

# (metric name, decimals)
RING_METRICS = (
    ("scheduled", 0),
    ("delivered", 0),
    ("lost_collision", 0),
    ("lost_capture", 0),
    ("lost_below_sensitivity", 0),
    ("lost_corrupt", 0),
    ("plr", 4),
    ("mean_rssi_dbm", 2),
    ("mean_snr_db", 2),
    ("mean_rp_dbw", 2),
    ("above_threshold_fraction", 4),
    ("mean_tp_dbm", 2),
    ("mean_sf", 2),
)


def fmt(value, decimals: int) -> str:
    if value is None:
        return ""
    if decimals == 0:
        return str(int(value))
    return f"{value:.{decimals}f}"


def _ring_value(ring, name: str):
    if name.startswith("lost_"):
        return ring.lost[name[5:]]
    return getattr(ring, name)


def ring_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RING_CSV_HEADER)
    for ring in report.rings:
        for name, dp in RING_METRICS:
            w.writerow((ring.ring, name, fmt(_ring_value(ring, name), dp)))
    return buf.getvalue()


def comparison_csv(reports: Sequence[MetricsReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPARISON_CSV_HEADER)
    for rep in reports:
        for ring in rep.rings:
            w.writerow((
                rep.gw_count,
                ring.ring,
                fmt(ring.plr, 4),
                fmt(ring.mean_rp_dbw, 2),
                fmt(ring.above_threshold_fraction, 4),
            ))
    return buf.getvalue()


def render(report: MetricsReport, fmt_name: str) -> dict[str, str]:
    """File name -> content for the requested format (``csv``, ``json`` or ``both``)."""
    out = {}
    if fmt_name in ("csv", "both"):
        out["report.csv"] = ring_csv(report)
    if fmt_name in ("json", "both"):
        out["report.json"] = report.to_json() + "\n"
    return out


def write_files(out_dir: Path, files: dict[str, str]) -> list[Path]:
    """Write everything at once, after all content has been produced."""
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in files.items():
        p = out_dir / name
        p.write_text(text)
        paths.append(p)
    return paths
