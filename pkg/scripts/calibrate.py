"""Grid search over the free geometry/propagation knobs.

The path-loss law and the parameter tables are fixed; what is left open is
the venue size, the shadowing spread and the number of walls in every link.
For each grid point this prints, averaged over seeds, the RP under-threshold
fraction and total PLR for 1/2/4/10 gateways plus the innermost-ring PLR at
10 and 20 gateways.

    python3 scripts/calibrate.py [--seeds 3] [--venues 2.1,2.6,3.2] [--sigmas 3,4,6] [--walls 0,1,2]
"""

import argparse
import itertools

import numpy as np

from lora_esl import Scenario, run_scenario


def floats(text):
    return [float(t) for t in text.split(",")]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--venues", type=floats, default=[2.1, 2.6, 3.2])
    ap.add_argument("--sigmas", type=floats, default=[3.0, 4.0, 6.0])
    ap.add_argument("--walls", type=lambda t: [int(x) for x in t.split(",")], default=[0, 1, 2])
    ap.add_argument("--reception", choices=("any", "home"), default="any")
    args = ap.parse_args()

    print("venue_km,sigma_db,walls,under_1,under_2,under_4,under_10,plr_1,plr_2,plr_4,plr_10,ring0_10,ring0_20")
    for venue, sigma, walls in itertools.product(args.venues, args.sigmas, args.walls):
        base = Scenario().with_updates(
            deployment={"gw_layout": {"venue_radius_km": venue}},
            pathloss={"sigma_db": sigma, "obstacles": ["concrete_wall"] * walls},
            channel={"reception": args.reception},
        )
        under, plr, ring0 = {}, {}, {}
        for g in (1, 2, 4, 10, 20):
            reps = [run_scenario(base.with_updates(deployment={"gw_count": g}, seed=s)) for s in range(args.seeds)]
            under[g] = np.mean([1 - r.above_threshold_fraction for r in reps])
            plr[g] = np.mean([r.plr for r in reps])
            ring0[g] = np.mean([r.rings[0].plr for r in reps])
        cells = [under[g] for g in (1, 2, 4, 10)] + [plr[g] for g in (1, 2, 4, 10)] + [ring0[10], ring0[20]]
        print(f"{venue},{sigma},{walls}," + ",".join(f"{c:.4f}" for c in cells), flush=True)


if __name__ == "__main__":
    main()
