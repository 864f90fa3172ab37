"""SNR-driven vs RSSI-driven adaptation on one scenario, per ring and per seed.

    python3 scripts/compare_policies.py [--scenario scenarios/ten_gw_rssi.json] [--seeds 10]
"""

import argparse

from lora_esl import config
from lora_esl.simulator import compare_policies


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scenario", default="scenarios/ten_gw_rssi.json")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--rings", action="store_true", help="print the per-ring table for seed 0")
    args = ap.parse_args()

    base = config.load(args.scenario)
    print("seed,snr_plr,rssi_plr,winner")
    wins = 0
    for seed in range(args.seeds):
        cmp = compare_policies(base.with_updates(seed=seed))
        wins += cmp.winner == "rssi"
        print(f"{seed},{cmp.snr_plr:.4f},{cmp.rssi_plr:.4f},{cmp.winner}", flush=True)
        if args.rings and seed == 0:
            for row in cmp.rows:
                print("  ", row)
    print(f"# rssi policy wins {wins}/{args.seeds}")


if __name__ == "__main__":
    main()
