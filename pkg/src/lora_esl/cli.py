"""``lora-esl`` command line.

Exit codes: 0 success, 1 usage, 2 scenario file unreadable or invalid,
3 runtime failure. ``LORA_ESL_SEED`` overrides the scenario seed.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import config, reporting
from .deployment import (
    arithmetic_allocation,
    fibonacci_allocation,
    kmeans_cluster,
    ring_totals_arithmetic,
    split_across_gateways,
)
from .link_budget import (
    LinkBudgetError,
    PathLossParams,
    SnrFloorTable,
    margin,
    noise_floor,
    path_loss,
    received_power_dbw,
    rssi,
)

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
SEED_ENV = "LORA_ESL_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _gw_list(text: str) -> list[int]:
    try:
        counts = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not counts or any(c < 1 for c in counts):
        raise argparse.ArgumentTypeError("gateway counts must be positive")
    return counts


def _load_scenario(path: str) -> config.Scenario:
    p = Path(path)
    if not p.is_file():
        raise config.ConfigError("", f"cannot read scenario file {path}")
    scenario = config.load(p)
    seed = os.environ.get(SEED_ENV)
    if seed is not None:
        try:
            scenario = scenario.with_updates(seed=int(seed))
        except ValueError:
            raise config.ConfigError("", f"{SEED_ENV} must be an integer, got {seed!r}") from None
    return scenario


def cmd_allocate(args) -> int:
    if args.kind == "arithmetic":
        table = split_across_gateways(ring_totals_arithmetic(args.first, args.diff, args.rings), args.gws)
        per_gw = arithmetic_allocation(args.first, args.diff, args.rings, args.gws)
    else:
        total = sum(ring_totals_arithmetic(args.first, args.diff, args.rings))
        table = split_across_gateways(fibonacci_allocation(total, args.rings, args.orientation), args.gws)
        per_gw = [int(x) for x in table[0]]
    print("ring,devices_per_gw")
    for i, n in enumerate(per_gw):
        print(f"{i},{n}")
    print(f"# total across {args.gws} gateway(s): {int(table.sum())}")
    return EXIT_OK


def cmd_linkbudget(args) -> int:
    try:
        if args.lpl is not None:
            loss = args.lpl
            source = "given"
        else:
            loss = path_loss(args.distance, PathLossParams(exponent=args.exponent))
            source = f"log-distance at {args.distance} km"
        rx = rssi(args.tp, args.gtx, loss)
        nf = noise_floor(args.bw * 1000.0, args.nf)
        snr = rx - nf
        m = margin(snr, args.sf, SnrFloorTable())
    except LinkBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"path_loss_db      {loss:.2f}  ({source})")
    print(f"rssi_dbm          {rx:.2f}  (tp + g_tx - path loss)")
    print(f"noise_floor_dbm   {nf:.2f}  (-174 + 10log10(bw) + nf)")
    print(f"snr_db            {snr:.2f}")
    print(f"margin_db         {m:.2f}  (sf {args.sf})")
    if args.grx is not None:
        print(f"rp_dbw            {received_power_dbw(rx, args.grx):.2f}  (rssi + g_rx - 30)")
    return EXIT_OK


def cmd_cluster(args) -> int:
    from .simulator import build_deployment

    scenario = _load_scenario(args.scenario)
    dep = build_deployment(scenario)
    k = args.k or scenario.gw_count
    cl = kmeans_cluster(dep.device_xy, k, seed=scenario.seed)
    print("cluster,x_km,y_km,radius_km,devices")
    for i, (x, y) in enumerate(cl.centroids):
        n = int(np.sum(cl.assignment == i))
        print(f"{i},{x:.4f},{y:.4f},{cl.radii[i]:.4f},{n}")
    print(f"# objective {cl.objective:.6f} after {cl.iterations} iterations")
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .simulator import run_scenario

    scenario = _load_scenario(args.scenario)
    report = run_scenario(scenario)
    files = reporting.render(report, args.format)
    reporting.write_files(Path(args.out), files)
    print(f"total_plr {reporting.fmt(report.plr, 4)}")
    print(f"above_threshold_fraction {reporting.fmt(report.above_threshold_fraction, 4)}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .simulator import sweep_gateways

    template = _load_scenario(args.template)
    reports = sweep_gateways(template, args.gws)
    files = {}
    for rep in reports:
        for name, text in reporting.render(rep, "both").items():
            stem, ext = name.rsplit(".", 1)
            files[f"{stem}_gw{rep.gw_count}.{ext}"] = text
    files["comparison.csv"] = reporting.comparison_csv(reports)
    reporting.write_files(Path(args.out), files)
    print("gw_count,total_plr,above_threshold_fraction")
    for rep in reports:
        print(f"{rep.gw_count},{reporting.fmt(rep.plr, 4)},{reporting.fmt(rep.above_threshold_fraction, 4)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lora-esl", description="LoRa ESL network simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("allocate", help="devices per ring per gateway")
    a.add_argument("--gws", type=int, default=1)
    a.add_argument("--first", type=int, default=200)
    a.add_argument("--diff", type=int, default=100)
    a.add_argument("--rings", type=int, default=6)
    a.add_argument("--kind", choices=("arithmetic", "fibonacci"), default="arithmetic")
    a.add_argument("--orientation", choices=("outward", "inward"), default="outward")
    a.set_defaults(func=cmd_allocate)

    lb = sub.add_parser("linkbudget", help="RSSI, SNR margin and received power for one link")
    lb.add_argument("--tp", type=float, default=14.0)
    lb.add_argument("--gtx", type=float, default=2.15)
    src = lb.add_mutually_exclusive_group()
    src.add_argument("--lpl", type=float, help="path loss in dB")
    src.add_argument("--distance", type=float, help="distance in km (log-distance model)")
    lb.add_argument("--exponent", type=float, default=4.31)
    lb.add_argument("--grx", type=float, default=None)
    lb.add_argument("--sf", type=int, default=7)
    lb.add_argument("--bw", type=float, default=125.0, help="kHz")
    lb.add_argument("--nf", type=float, default=6.0, help="noise figure, dB")
    lb.set_defaults(func=cmd_linkbudget)

    c = sub.add_parser("cluster", help="k-means over a scenario's devices")
    c.add_argument("scenario")
    c.add_argument("--k", type=int, default=None)
    c.set_defaults(func=cmd_cluster)

    s = sub.add_parser("simulate", help="run one scenario")
    s.add_argument("scenario")
    s.add_argument("--out", default="out")
    s.add_argument("--format", choices=("csv", "json", "both"), default="both")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="run a template across gateway counts")
    w.add_argument("template")
    w.add_argument("--gws", type=_gw_list, default=[1, 2, 4, 10, 20])
    w.add_argument("--out", default="out")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "linkbudget" and args.lpl is None and args.distance is None:
            args.lpl = 127.84
        if args.command == "allocate" and (args.gws < 1 or args.rings < 1 or args.first < 0 or args.diff < 0):
            raise UsageError("allocate: --gws and --rings must be >= 1, --first and --diff >= 0")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except config.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
