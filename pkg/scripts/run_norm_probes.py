#!/usr/bin/env python3
"""Empirical constants for every catalogued multilinear estimate (1000
trials each) plus the boundary-term K-sweep on the fine 128^3 lattice."""

import argparse
import json
import time

from stozak.grids import Grid
from stozak.probes import CATALOGUE, bdy_initial_k_sweep, probe_estimate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--skip-k-sweep", action="store_true")
    ap.add_argument("--out", default="norm_probes.json")
    args = ap.parse_args()

    grid = Grid(args.n)
    reports = {}
    for eid in sorted(CATALOGUE):
        t0 = time.time()
        rep = probe_estimate(eid, trials=args.trials, grid=grid, seed=args.seed)
        rep["seconds"] = round(time.time() - t0, 1)
        reports[eid] = rep
        print(f"{eid:30s} const={rep['const']:.4e} "
              f"power_ok={rep.get('power_check_ok', '-')} ({rep['seconds']}s)")
    if not args.skip_k_sweep:
        sweep = bdy_initial_k_sweep()
        reports["bdy_initial_k_sweep"] = sweep
        print("K sweep:", sweep)
    with open(args.out, "w") as fh:
        json.dump(reports, fh, indent=2, default=float)
    print(f"written to {args.out}")


if __name__ == "__main__":
    main()
