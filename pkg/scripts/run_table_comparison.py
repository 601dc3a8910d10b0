#!/usr/bin/env python3
"""Comparison table: C-TOP vs MTP vs local-MST on two synthetic blocks.

Runs the full pipeline (shared heuristic plan, per-algorithm topology and
powers) and prints throughput, connectivity rate after sequential UAV
failures at n_dc, and average hop count.

Usage: python3 scripts/run_table_comparison.py [--out DIR]
"""

import argparse
import math
import os

from fanetopt.report import emit_report
from fanetopt.scenario import synthetic_scenario
from fanetopt.simulator import run_pipeline

BLOCKS = [
    ("A=4, N=50, 500x500 m", dict(extent_m=500.0, n_uavs=4, n_slots=50,
                                  k_min=2, delta=2, e_max_j=70.0, seed=0)),
    ("A=8, N=50, 500x500 m", dict(extent_m=500.0, n_uavs=8, n_slots=50,
                                  k_min=2, delta=2, e_max_j=40.0,
                                  wp_per_uav=3, seed=1)),
]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", help="also emit full report files per run")
    parser.add_argument("--n-dc", type=int, default=45)
    args = parser.parse_args()

    for title, kwargs in BLOCKS:
        scenario = synthetic_scenario(**kwargs)
        print(f"\n{title}  (n_dc={args.n_dc})")
        print(f"{'algorithm':<10} {'throughput':>12} {'xi':>8} {'avg hops':>9}")
        for algo in ("mtp", "lmst", "ctop"):
            report = run_pipeline(scenario, "heuristic", algo, seed=0,
                                  n_dc=args.n_dc)
            hops = "inf" if math.isinf(report.avg_hops) else f"{report.avg_hops:.2f}"
            print(f"{algo:<10} {report.throughput_total:>12.4g} "
                  f"{report.connectivity:>8.4f} {hops:>9}")
            if args.out:
                emit_report(report, os.path.join(
                    args.out, f"{kwargs['n_uavs']}uav_{algo}"))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
