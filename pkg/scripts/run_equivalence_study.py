#!/usr/bin/env python3
"""Mild vs normal-form residual study over a dt ladder (solution-concept
equivalence, run on one smooth-path noise realization)."""

import argparse
import json

from stozak.config import RunConfig
from stozak.harness import equivalence_suite, resolve_outdir


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="equivalence_study")
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--ladder", default="0.02,0.01,0.005")
    ap.add_argument("--T", type=float, default=0.2)
    ap.add_argument("--K", default="32,64")
    args = ap.parse_args()

    cfg = RunConfig.from_dict({
        "grid": {"n": args.n},
        "noise": {"kind": "gaussian", "n_schrodinger": 2, "n_wave": 1,
                  "amplitude": 0.12, "wave_amplitude": 0.06},
        "initial": {"amplitude": 0.6, "width": 3.0},
        "equivalence": {
            "dt_ladder": [float(x) for x in args.ladder.split(",")],
            "T": args.T,
            "K_pair": [int(x) for x in args.K.split(",")],
        },
    })
    out = resolve_outdir("", args.out)
    report = equivalence_suite(cfg, outdir=out)
    print(json.dumps(report, indent=2, default=float))


if __name__ == "__main__":
    main()
