"""Sweep gateway counts over several seeds and print mean metrics per count.

    python3 scripts/run_sweep.py [--template scenarios/default.json] [--seeds 10] [--out out/sweep]
"""

import argparse
from pathlib import Path

import numpy as np

from lora_esl import config
from lora_esl.reporting import comparison_csv, write_files
from lora_esl.simulator import sweep_gateways


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--template", default="scenarios/default.json")
    ap.add_argument("--gws", default="1,2,4,10,20")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--out", default=None, help="write comparison CSVs (one per seed) here")
    args = ap.parse_args()

    template = config.load(args.template)
    counts = [int(g) for g in args.gws.split(",")]
    by_count = {g: [] for g in counts}
    files = {}
    for seed in range(args.seeds):
        reports = sweep_gateways(template.with_updates(seed=seed), counts)
        for rep in reports:
            by_count[rep.gw_count].append(rep)
        files[f"comparison_seed{seed}.csv"] = comparison_csv(reports)
        print(f"seed {seed} done", flush=True)

    print("gw_count,mean_plr,mean_above_threshold,mean_innermost_plr,mean_outermost_plr")
    for g, reps in by_count.items():
        print(
            f"{g},{np.mean([r.plr for r in reps]):.4f},"
            f"{np.mean([r.above_threshold_fraction for r in reps]):.4f},"
            f"{np.mean([r.rings[0].plr for r in reps]):.4f},"
            f"{np.mean([r.rings[-1].plr for r in reps]):.4f}"
        )
    if args.out:
        write_files(Path(args.out), files)


if __name__ == "__main__":
    main()
