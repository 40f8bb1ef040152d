"""Command-line surface: ground-state, simulate, mc-blowup, equivalence,
subsonic, norms.

Exit codes: 0 on success (scenario-internal assertions pass), 2 on a config
schema violation, 3 on a numeric failure (the last checkpoint is retained).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone

from .config import ConfigError, RunConfig
from .harness import (NumericError, equivalence_suite, mc_blowup,
                      resolve_outdir, run_scenario, subsonic_table)


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {}
    if getattr(args, "scenario", None):
        overrides["scenario"] = args.scenario
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        raw = cfg.to_dict()
        raw.update(overrides)
        cfg = RunConfig.from_dict(raw)
    return cfg


def _cmd_ground_state(args) -> int:
    from .variational import ode_defect, solve_ground_state
    prof = solve_ground_state(r_max=args.r_max, mesh=args.mesh, tol=args.tol)
    f = prof.functionals
    out = resolve_outdir(".", args.out)
    path = os.path.join(out, "ground_state.csv")
    stride = max(1, int(round(args.profile_stride / args.mesh)))
    with open(path, "w") as fh:
        fh.write("# schema=stozak-ground-v1\n")
        fh.write(f"# generated_at={datetime.now(timezone.utc).isoformat()}\n")
        fh.write(f"# Q0={float(prof.Q0):.17g}\n")
        fh.write(f"# ode_defect={float(ode_defect(prof)):.17g}\n")
        for key in ("M", "E_S", "J", "K", "l2_sq", "grad_sq", "l4_4"):
            fh.write(f"# {key}={float(f[key]):.17g}\n")
        fh.write("r[1],Q[1],dQ[1]\n")
        for r, q, dq in zip(prof.r[::stride], prof.Q[::stride], prof.dQ[::stride]):
            fh.write(f"{r:.6f},{q:.17g},{dq:.17g}\n")
    print(f"Q(0) = {prof.Q0:.8f}")
    print(f"grad_sq / l2_sq = {f['grad_sq'] / f['l2_sq']:.8f} (Pohozaev: 3)")
    print(f"l4_4 / l2_sq    = {f['l4_4'] / f['l2_sq']:.8f} (Pohozaev: 4)")
    print(f"K(Q) = {f['K']:.3e},  E_S(Q) M(Q) = {f['E_S'] * f['M']:.8f}")
    print(f"profile written to {path}")
    return 0


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = resolve_outdir(cfg.output_dir, args.out)
    result = run_scenario(cfg, outdir=out, resume=args.resume)
    print(json.dumps({"scenario": result.name, "passed": result.passed,
                      "details": {k: v for k, v in result.details.items()
                                  if not k.startswith("_")}},
                     indent=2, default=float))
    return 0 if result.passed else 3


def _cmd_mc_blowup(args) -> int:
    cfg = _load_config(args)
    if cfg.noise.kind != "nonconservative":
        raw = cfg.to_dict()
        raw["noise"]["kind"] = "nonconservative"
        cfg = RunConfig.from_dict(raw)
    out = resolve_outdir(cfg.output_dir, args.out)
    summary = mc_blowup(cfg, outdir=out, threads=args.threads)
    print(json.dumps(summary.to_dict(), indent=2, default=float))
    return 0 if summary.monotone else 3


def _cmd_equivalence(args) -> int:
    cfg = _load_config(args)
    out = resolve_outdir(cfg.output_dir, args.out)
    report = equivalence_suite(cfg, outdir=out)
    print(json.dumps(report, indent=2, default=float))
    return 0 if (report["orders_match"] and report["dual_K_within_factor_4"]) else 3


def _cmd_subsonic(args) -> int:
    cfg = _load_config(args)
    if args.alphas:
        raw = cfg.to_dict()
        raw["subsonic_alphas"] = [float(a) for a in args.alphas.split(",")]
        raw["T"] = args.T
        cfg = RunConfig.from_dict(raw)
    out = resolve_outdir(cfg.output_dir, args.out)
    rows = subsonic_table(cfg, outdir=out)
    for a, e in rows:
        print(f"alpha={a:g}: |u_alpha(T) - u_NLS(T)|_L2 = {e:.6e}")
    errs = [e for _, e in rows]
    return 0 if all(errs[i] > errs[i + 1] for i in range(len(errs) - 1)) else 3


def _cmd_norms(args) -> int:
    from .grids import Grid
    from .probes import CATALOGUE, probe_estimate
    ids = sorted(CATALOGUE) if args.estimates == "all" else args.estimates.split(",")
    grid = Grid(args.n)
    out = resolve_outdir(".", args.out)
    path = os.path.join(out, "norm_probes.csv")
    lines = ["# schema=stozak-norms-v1",
             f"# generated_at={datetime.now(timezone.utc).isoformat()}",
             "estimate[name],trials[1],const[1],mean_ratio[1],power_check[bool]"]
    ok = True
    for eid in ids:
        rep = probe_estimate(eid, trials=args.trials, grid=grid,
                             seed=args.seed or 0)
        ok = ok and rep["finite"] and rep.get("power_check_ok", True)
        lines.append(f"{eid},{rep['trials']},{rep['const']:.17g},"
                     f"{rep['mean_ratio']:.17g},"
                     f"{int(rep.get('power_check_ok', True))}")
        print(f"{eid:28s} const={rep['const']:.4e} "
              f"power_ok={rep.get('power_check_ok', '-')}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"written to {path}")
    return 0 if ok else 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="stozak",
        description="Pseudospectral toolkit for the 3D stochastic Zakharov system")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, scenario=False):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
        if scenario:
            p.add_argument("--scenario", help="scenario id", default=None)
            p.add_argument("--resume", help="checkpoint file to resume from",
                           default=None)

    p = sub.add_parser("ground-state", help="solve the ground state, emit CSV")
    p.add_argument("--r-max", type=float, default=30.0)
    p.add_argument("--mesh", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--profile-stride", type=float, default=0.01,
                   help="radial spacing of emitted profile rows")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_ground_state)

    p = sub.add_parser("simulate", help="run one scenario")
    common(p, scenario=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("mc-blowup", help="Monte Carlo noise-regularization study")
    common(p)
    p.set_defaults(func=_cmd_mc_blowup)

    p = sub.add_parser("equivalence", help="mild vs normal-form residual suite")
    common(p)
    p.set_defaults(func=_cmd_equivalence)

    p = sub.add_parser("subsonic", help="alpha-ladder comparison against cubic NLS")
    common(p)
    p.add_argument("--alphas", default="1,2,4,8")
    p.add_argument("--T", type=float, default=0.5)
    p.set_defaults(func=_cmd_subsonic)

    p = sub.add_parser("norms", help="empirical multilinear-estimate constants")
    p.add_argument("--estimates", default="all")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_norms)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
