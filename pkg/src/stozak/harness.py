"""Scenario orchestration, Monte Carlo farming, and persistence.

Outputs per run: a diagnostics CSV (one row per save time), a summary JSON
embedding the resolved config, and binary checkpoints.  The CSV carries a
timestamp comment line that is excluded from the reproducibility hash, so
identical (config, seed) runs produce byte-identical payloads.

Checkpoint layout (little-endian, documented offsets):

    0   magic b"ZKCK"
    4   u32 version (= 1)
    8   u32 n (grid points per axis)
    12  u8  gauge (0 ito, 1 random, 2 nonconservative), 3 pad bytes
    16  f64 box length
    24  f64 alpha
    32  f64 t
    40  u64 seed
    48  u64 stream (trajectory index)
    56  u64 step index
    64  complex128[n^3] u field (C order, frequency coefficients)
    64 + 16 n^3  complex128[n^3] v field (same layout)

Frequency coefficients are stored (mode amplitudes, numpy fftn order /n^3):
the integrators consume the frequency representation first, so a resumed
run replays bit-identically.
"""

from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .config import ConfigError, RunConfig
from .dynamics import (IntegratorConfig, Trajectory,
                       residual_mild, residual_normal_form, residual_weak,
                       solve_deterministic, solve_cubic_nls, solve_ito,
                       solve_nonconservative, solve_pathwise, solve_random,
                       step_deterministic, subsonic_compare)
from .grids import Grid, SpectralField, gaussian_packet, well_prepared_wave
from .noise import BrownianPath, NoiseBasis, NoiseRealization, sample_path
from .transforms import Gauge
from .variational import (GroundStateProfile, evaluate_functionals,
                          place_on_grid, solve_ground_state, threshold_monitor)


class NumericError(RuntimeError):
    """Numeric failure in a scenario; the CLI maps this to exit code 3."""


OUTPUT_ROOT_ENV = "STOZAK_OUT_ROOT"

_GAUGE_CODE = {Gauge.ITO: 0, Gauge.RANDOM: 1, Gauge.NONCONSERVATIVE: 2}
_GAUGE_FROM = {v: k for k, v in _GAUGE_CODE.items()}


def resolve_outdir(cfg_output_dir: str, cli_out: str | None) -> str:
    out = cli_out or cfg_output_dir or "."
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not os.path.isabs(out):
        out = os.path.join(root, out)
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# config -> objects
# ---------------------------------------------------------------------------

def build_grid(cfg: RunConfig) -> Grid:
    g = cfg.grid
    return Grid(g.n, length=g.length, dealias_fraction=g.dealias_fraction)


def build_basis(cfg: RunConfig, grid: Grid, im_phi: float | None = None) -> NoiseBasis:
    ns = cfg.noise
    if ns.kind == "zero":
        return NoiseBasis.zero(grid)
    if ns.kind == "gaussian":
        return NoiseBasis.gaussian(grid, n_schrodinger=ns.n_schrodinger,
                                   n_wave=ns.n_wave, amplitude=ns.amplitude,
                                   wave_amplitude=ns.wave_amplitude,
                                   width=ns.width)
    return NoiseBasis.nonconservative(
        grid, im_phi=ns.im_phi if im_phi is None else im_phi, re_phi=ns.re_phi)


def build_noise(cfg: RunConfig, grid: Grid, T: float, dt_mesh: float,
                stream: int = 0, im_phi: float | None = None) -> NoiseRealization:
    basis = build_basis(cfg, grid, im_phi=im_phi)
    if cfg.noise.synthetic_rates:
        rates = list(cfg.noise.synthetic_rates)
        n_modes = basis.n_schrodinger + basis.n_wave
        rates = (rates * n_modes)[:max(n_modes, 1)]
        path = BrownianPath.synthetic_linear(rates, T, dt_mesh)
        return NoiseRealization(basis, path)
    return sample_path(basis, T, dt_mesh, seed=cfg.seed, stream=stream)


_GROUND_CACHE: dict[str, GroundStateProfile] = {}


def ground_state_cached() -> GroundStateProfile:
    if "Q" not in _GROUND_CACHE:
        _GROUND_CACHE["Q"] = solve_ground_state()
    return _GROUND_CACHE["Q"]


def build_initial(cfg: RunConfig, grid: Grid):
    ini = cfg.initial
    if ini.kind == "gaussian":
        mom = ini.momentum if ini.momentum else None
        u0 = gaussian_packet(grid, ini.amplitude, ini.width, momentum=mom)
    else:
        Q = ground_state_cached()
        u0 = place_on_grid(Q, grid) * ini.fraction
    v0 = well_prepared_wave(u0) if ini.well_prepared else SpectralField.zero(grid)
    return u0, v0


def scale_to_negative_energy(u0: SpectralField, margin: float = 0.5) -> SpectralField:
    """Rescale amplitude so E_S(u0) = -margin * ||grad u0||^2 (blow-up regime)."""
    row = evaluate_functionals(u0, SpectralField.zero(u0.grid))
    # E_S(a u) = a^2/2 grad_sq - a^4/4 l4_4; choose a so it equals
    # -margin * a^2 grad_sq
    a2 = (2.0 + 4.0 * margin) * row.grad_sq / row.l4_4
    return u0 * math.sqrt(a2)


def integ_cfg(cfg: RunConfig) -> IntegratorConfig:
    it = cfg.integrator
    return IntegratorConfig(dt=it.dt, scheme=it.scheme, dealias=it.dealias,
                            K=it.K, threshold_factor=it.threshold_factor,
                            use_real_part=it.use_real_part,
                            save_every=it.save_every)


# ---------------------------------------------------------------------------
# diagnostics CSV
# ---------------------------------------------------------------------------

DIAG_COLUMNS = [
    ("step", "1"), ("t", "1"), ("mass", "1"), ("h1_u", "1"), ("l2_v", "1"),
    ("E_Z", "1"), ("E_S", "1"), ("J", "1"), ("K_func", "1"),
    ("threshold_product", "1"), ("below_threshold", "bool"),
    ("sigma_star_hit", "bool"), ("w_star", "1"), ("h_gbm", "1"),
    ("blow_up", "bool"),
]

CSV_SCHEMA = "stozak-diag-v1"


def diagnostics_rows(traj: Trajectory, cfg: IntegratorConfig,
                     noise: NoiseRealization | None = None,
                     ground: GroundStateProfile | None = None):
    rows = []
    sigma_hit_time = None
    for k, (t, u, v) in enumerate(zip(traj.times, traj.u, traj.v)):
        fr = evaluate_functionals(u, v)
        below, hit = True, False
        if ground is not None:
            flags = threshold_monitor(u, v, ground)
            below, hit = flags.below_threshold, flags.sigma_star_hit
            if hit and sigma_hit_time is None:
                sigma_hit_time = t
        wstar = h = 0.0
        if noise is not None and noise.basis.n_schrodinger:
            i = int(round(t / noise.dt))
            if noise.basis.conservative:
                wstar = noise.w_star(i)
            else:
                h = noise.geometric_bm(i)
        blow = traj.blow_up and traj.blow_up_time is not None and t >= traj.blow_up_time
        rows.append({
            "step": k, "t": t, "mass": 0.5 * u.l2() ** 2, "h1_u": u.h1(),
            "l2_v": v.l2(), "E_Z": fr.E_Z, "E_S": fr.E_S, "J": fr.J,
            "K_func": fr.K, "threshold_product": fr.threshold_product,
            "below_threshold": below, "sigma_star_hit": hit,
            "w_star": wstar, "h_gbm": h, "blow_up": blow,
        })
    return rows


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_diagnostics_csv(path: str, rows, config_hash: str):
    header = ",".join(f"{name}[{unit}]" for name, unit in DIAG_COLUMNS)
    lines = [f"# schema={CSV_SCHEMA} config={config_hash}",
             f"# generated_at={datetime.now(timezone.utc).isoformat()}",
             header]
    for row in rows:
        lines.append(",".join(_fmt(row[name]) for name, _ in DIAG_COLUMNS))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def csv_payload_hash(path: str) -> str:
    """Hash of the CSV minus the generated_at line (reproducibility contract)."""
    import hashlib
    keep = []
    with open(path, "rb") as fh:
        for line in fh.read().split(b"\n"):
            if line.startswith(b"# generated_at="):
                continue
            keep.append(line)
    return hashlib.sha256(b"\n".join(keep)).hexdigest()


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

CKPT_MAGIC = b"ZKCK"
CKPT_VERSION = 1
_CKPT_HEAD = struct.Struct("<4sII B3x ddd QQQ")


def write_checkpoint(path: str, grid: Grid, gauge: Gauge, t: float,
                     u: SpectralField, v: SpectralField, seed: int,
                     stream: int, step_index: int, alpha: float = 1.0):
    head = _CKPT_HEAD.pack(CKPT_MAGIC, CKPT_VERSION, grid.n,
                           _GAUGE_CODE[gauge], grid.length, alpha, t,
                           seed, stream, step_index)
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.ascontiguousarray(u.freq(), dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(v.freq(), dtype="<c16").tobytes())


def read_checkpoint(path: str):
    with open(path, "rb") as fh:
        head = fh.read(_CKPT_HEAD.size)
        magic, version, n, gauge_code, length, alpha, t, seed, stream, step = \
            _CKPT_HEAD.unpack(head)
        if magic != CKPT_MAGIC or version != CKPT_VERSION:
            raise NumericError(f"bad checkpoint header in {path}")
        grid = Grid(int(n), length=float(length))
        count = n**3
        u = np.frombuffer(fh.read(16 * count), dtype="<c16").reshape((n,) * 3)
        v = np.frombuffer(fh.read(16 * count), dtype="<c16").reshape((n,) * 3)
    return {
        "grid": grid, "gauge": _GAUGE_FROM[int(gauge_code)], "alpha": float(alpha),
        "t": float(t), "seed": int(seed), "stream": int(stream),
        "step_index": int(step), "u": SpectralField.from_freq(grid, u.copy()),
        "v": SpectralField.from_freq(grid, v.copy()),
    }


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

@dataclass
class ScenarioResult:
    name: str
    passed: bool
    details: dict
    trajectory: Trajectory | None = None


def _steps_of(cfg: RunConfig) -> int:
    return int(round(cfg.T / cfg.integrator.dt))


def run_scenario(cfg: RunConfig, outdir: str | None = None,
                 resume: str | None = None) -> ScenarioResult:
    if cfg.scenario not in RunConfig.SCENARIOS:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}; "
                          f"known: {RunConfig.SCENARIOS}")
    grid = build_grid(cfg)
    icfg = integ_cfg(cfg)
    name = cfg.scenario

    if name == "deterministic-small":
        result = _scenario_deterministic(cfg, grid, icfg, resume, outdir)
    elif name == "below-threshold":
        result = _scenario_below_threshold(cfg, grid, icfg)
    elif name in ("blowup-nls", "blowup-zakharov"):
        result = _scenario_blowup(cfg, grid, icfg, nls=(name == "blowup-nls"))
    elif name == "pathwise":
        result = _scenario_pathwise(cfg, grid, icfg)
    else:
        result = _scenario_nonconservative(cfg, grid, icfg)

    if outdir:
        _persist(cfg, result, outdir)
    if result.trajectory is not None and result.trajectory.times:
        final = result.trajectory.u[-1].phys()
        if not np.all(np.isfinite(final)) and not result.trajectory.blow_up:
            raise NumericError("non-finite field outside a flagged blow-up")
    return result


def _persist(cfg: RunConfig, result: ScenarioResult, outdir: str):
    os.makedirs(outdir, exist_ok=True)
    h = cfg.sha256()
    with open(os.path.join(outdir, "config.json"), "w") as fh:
        fh.write(cfg.resolved_json())
    if result.trajectory is not None:
        ground = _GROUND_CACHE.get("Q")
        rows = diagnostics_rows(result.trajectory, integ_cfg(cfg),
                                noise=result.details.get("_noise"), ground=ground)
        write_diagnostics_csv(os.path.join(outdir, "diagnostics.csv"), rows, h)
    summary = {"scenario": result.name, "passed": result.passed,
               "config_sha256": h,
               "details": {k: v for k, v in result.details.items()
                           if not k.startswith("_")},
               "config": cfg.to_dict()}
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=float)


def _scenario_deterministic(cfg, grid, icfg, resume=None,
                            outdir=None) -> ScenarioResult:
    ck_dir = None
    if outdir:
        ck_dir = os.path.join(outdir, "checkpoints")
        os.makedirs(ck_dir, exist_ok=True)
    if resume:
        ck = read_checkpoint(resume)
        u, v = ck["u"], ck["v"]
        k0 = ck["step_index"]
        traj = Trajectory(gauge=ck["gauge"], alpha=ck["alpha"])
        traj.save(ck["t"], u, v)
    else:
        u, v = build_initial(cfg, grid)
        from .dynamics import _entry
        u, v = _entry(icfg, u, v)
        k0 = 0
        traj = Trajectory(gauge=Gauge.RANDOM, alpha=cfg.alpha)
        traj.save(0.0, u, v)
    n_steps = _steps_of(cfg)
    for k in range(k0, n_steps):
        u, v = step_deterministic(u, v, icfg.dt, cfg.alpha, icfg.dealias)
        t = (k + 1) * icfg.dt
        if (k + 1) % icfg.save_every == 0 or k + 1 == n_steps:
            traj.save(t, u, v)
            if ck_dir:
                write_checkpoint(
                    os.path.join(ck_dir, f"ck_{k + 1:08d}.bin"), grid,
                    Gauge.RANDOM, t, u, v, cfg.seed, 0, k + 1, cfg.alpha)
    e0 = evaluate_functionals(traj.u[0], traj.v[0]).E_Z
    drifts = [abs(evaluate_functionals(u, v).E_Z - e0) / abs(e0)
              for u, v in zip(traj.u[1:], traj.v[1:])]
    drift = max(drifts) if drifts else 0.0
    m0 = 0.5 * traj.u[0].l2() ** 2
    mdrift = abs(0.5 * traj.u[-1].l2() ** 2 - m0) / m0
    passed = drift < 1e-6 and not traj.blow_up
    return ScenarioResult("deterministic-small", passed,
                          {"E_Z_drift": drift, "mass_drift": mdrift,
                           "blow_up": traj.blow_up}, traj)


def _scenario_below_threshold(cfg, grid, icfg) -> ScenarioResult:
    ground = ground_state_cached()
    u0, v0 = build_initial(cfg, grid)
    traj = solve_deterministic(u0, v0, cfg.T, icfg, alpha=cfg.alpha)
    init = traj.u[0].h1() + traj.v[0].l2()
    sup_ratio = max((u.h1() + v.l2()) / init for u, v in zip(traj.u, traj.v))
    k_values = [evaluate_functionals(u, v).K for u, v in zip(traj.u, traj.v)]
    hits = [threshold_monitor(u, v, ground).sigma_star_hit
            for u, v in zip(traj.u, traj.v)]
    passed = (not traj.blow_up and sup_ratio < 10.0 and min(k_values) > 0.0
              and not any(hits))
    return ScenarioResult("below-threshold", passed,
                          {"sup_norm_ratio": sup_ratio, "min_K": min(k_values),
                           "sigma_star_hit": any(hits),
                           "blow_up": traj.blow_up}, traj)


def _scenario_blowup(cfg, grid, icfg, nls: bool) -> ScenarioResult:
    u0, _ = build_initial(cfg, grid)
    u0 = scale_to_negative_energy(u0)
    row = evaluate_functionals(u0, SpectralField.zero(grid))
    if nls:
        traj = solve_cubic_nls(u0, cfg.T, icfg)
    else:
        traj = solve_deterministic(u0, well_prepared_wave(u0), cfg.T, icfg,
                                   alpha=cfg.alpha)
    passed = traj.blow_up and traj.blow_up_time is not None \
        and traj.blow_up_time < cfg.T
    return ScenarioResult("blowup-nls" if nls else "blowup-zakharov", passed,
                          {"E_S_initial": row.E_S, "blow_up": traj.blow_up,
                           "tau_star_proxy": traj.blow_up_time}, traj)


def _scenario_pathwise(cfg, grid, icfg) -> ScenarioResult:
    u0, v0 = build_initial(cfg, grid)
    noise = build_noise(cfg, grid, cfg.T, icfg.dt / 2.0)
    traj = solve_pathwise(u0, v0, noise, cfg.T, icfg)
    m0 = 0.5 * traj.u[0].l2() ** 2
    mdrift = abs(0.5 * traj.u[-1].l2() ** 2 - m0) / m0
    passed = not traj.blow_up and mdrift < 1e-6
    return ScenarioResult("pathwise", passed,
                          {"mass_drift": mdrift, "segments": len(traj.sigma_sequence) + 1,
                           "sigma_sequence": traj.sigma_sequence[:50],
                           "_noise": noise, "blow_up": traj.blow_up}, traj)


def _scenario_nonconservative(cfg, grid, icfg) -> ScenarioResult:
    u0, v0 = build_initial(cfg, grid)
    noise = build_noise(cfg, grid, cfg.T, icfg.dt)
    traj = solve_nonconservative(u0, v0, noise, cfg.T, icfg)
    return ScenarioResult("nonconservative", True,
                          {"blow_up": traj.blow_up,
                           "tau_star_proxy": traj.blow_up_time,
                           "_noise": noise}, traj)


# ---------------------------------------------------------------------------
# Monte Carlo blow-up study (Theorem-1.3 trend)
# ---------------------------------------------------------------------------

def wilson_interval(k: int, n: int, z: float = 1.959963984540054):
    """95% Wilson score interval for a binomial fraction."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return max(0.0, center - half), min(1.0, center + half)


def _mc_one(args):
    cfg_dict, im_phi, stream = args
    cfg = RunConfig.from_dict(cfg_dict)
    grid = build_grid(cfg)
    icfg = integ_cfg(cfg)
    u0, v0 = build_initial(cfg, grid)
    u0 = scale_to_negative_energy(u0)
    v0 = well_prepared_wave(u0)
    noise = build_noise(cfg, grid, cfg.T, icfg.dt, stream=stream, im_phi=im_phi)
    traj = solve_nonconservative(u0, v0, noise, cfg.T, icfg)
    return (stream, bool(traj.blow_up),
            float(traj.blow_up_time) if traj.blow_up_time is not None else math.nan)


@dataclass
class McSummary:
    levels: list
    baseline_ok: bool
    monotone: bool

    def to_dict(self):
        return {"levels": self.levels, "baseline_ok": self.baseline_ok,
                "monotone_trend": self.monotone}


def mc_blowup(cfg: RunConfig, outdir: str | None = None,
              threads: int = 1) -> McSummary:
    """Blow-up fraction per Im(phi_1) level, Wilson CIs, monotone trend.

    The deterministic baseline (level 0, h == 1) must blow up on every path;
    otherwise the data is not in the interesting regime.
    """
    if cfg.noise.kind != "nonconservative":
        raise ConfigError("mc-blowup requires noise.kind = nonconservative")
    n_traj = cfg.mc.trajectories_per_level
    levels_out = []
    cfg_dict = cfg.to_dict()
    for level in cfg.mc.im_phi_levels:
        jobs = [(cfg_dict, float(level), s) for s in range(n_traj)]
        if threads > 1:
            import multiprocessing as mp
            with mp.Pool(threads) as pool:
                results = pool.map(_mc_one, jobs)
        else:
            results = [_mc_one(j) for j in jobs]
        results.sort(key=lambda r: r[0])  # deterministic reduction order
        blow = sum(1 for _, b, _ in results if b)
        taus = [t for _, b, t in results if b and not math.isnan(t)]
        lo, hi = wilson_interval(blow, n_traj)
        levels_out.append({
            "im_phi": float(level), "trajectories": n_traj,
            "blow_up_count": blow, "blow_up_fraction": blow / n_traj,
            "wilson_lo": lo, "wilson_hi": hi,
            "mean_tau_star": float(np.mean(taus)) if taus else None,
        })
    fractions = [lv["blow_up_fraction"] for lv in levels_out]
    baseline_ok = levels_out[0]["im_phi"] != 0.0 or fractions[0] == 1.0
    if levels_out[0]["im_phi"] == 0.0 and not baseline_ok:
        raise NumericError(
            "deterministic baseline fails to blow up: data not in the "
            "interesting regime")
    monotone = all(fractions[i] >= fractions[i + 1] - 1e-12
                   for i in range(len(fractions) - 1))
    summary = McSummary(levels_out, baseline_ok, monotone)
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(outdir, "config.json"), "w") as fh:
            fh.write(cfg.resolved_json())
        with open(os.path.join(outdir, "mc_summary.json"), "w") as fh:
            json.dump(summary.to_dict(), fh, indent=2, default=float)
        lines = [f"# schema=stozak-mc-v1 config={cfg.sha256()}",
                 f"# generated_at={datetime.now(timezone.utc).isoformat()}",
                 "im_phi[1],trajectories[1],blow_up_count[1],blow_up_fraction[1],"
                 "wilson_lo[1],wilson_hi[1],mean_tau_star[1]"]
        for lv in levels_out:
            lines.append(",".join(
                _fmt(lv[k]) if lv[k] is not None else "nan" for k in (
                    "im_phi", "trajectories", "blow_up_count", "blow_up_fraction",
                    "wilson_lo", "wilson_hi", "mean_tau_star")))
        with open(os.path.join(outdir, "mc_blowup.csv"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return summary


# ---------------------------------------------------------------------------
# equivalence suite (Props A.1 / B.1 as numerics)
# ---------------------------------------------------------------------------

def equivalence_suite(cfg: RunConfig, outdir: str | None = None) -> dict:
    """Mild and normal-form residuals over a dt ladder, order matching,
    dual-K comparison, and a weak-form pairing check."""
    grid = build_grid(cfg)
    eq = cfg.equivalence
    u0, v0 = build_initial(cfg, grid)
    rows = []

    def equiv_noise(dt_mesh):
        # the residual-order measurement needs one noise realization shared
        # across the dt ladder; smooth synthetic paths are mesh-independent,
        # whereas resampling Brownian paths per mesh would pollute the orders
        if eq.synthetic and not cfg.noise.synthetic_rates:
            basis = build_basis(cfg, grid)
            n_modes = max(basis.n_schrodinger + basis.n_wave, 1)
            rates = [0.8, -0.5, 0.3, 0.6, -0.4, 0.2]
            rates = (rates * n_modes)[:n_modes]
            path = BrownianPath.synthetic_linear(rates, eq.T, dt_mesh)
            return NoiseRealization(basis, path)
        return build_noise(cfg, grid, eq.T, dt_mesh)

    for dt in eq.dt_ladder:
        icfg = IntegratorConfig(dt=dt, save_every=1, K=eq.K_pair[0],
                                use_real_part=False)
        noise = equiv_noise(dt / 2.0)
        traj = solve_random(u0, v0, noise, eq.T, icfg)
        r_mild = residual_mild(traj, noise, use_real_part=False)
        r_nf = residual_normal_form(traj, noise, K=eq.K_pair[0],
                                    use_real_part=False)
        r_nf2 = residual_normal_form(traj, noise, K=eq.K_pair[1],
                                     use_real_part=False)
        r_weak = residual_weak(traj, noise, use_real_part=False)
        rows.append({"dt": dt, "mild": r_mild, "normal_form": r_nf,
                     "normal_form_K2": r_nf2, "weak": r_weak})
    rows.sort(key=lambda r: -r["dt"])
    span = math.log(rows[0]["dt"] / rows[-1]["dt"])
    order_mild = math.log(rows[0]["mild"] / rows[-1]["mild"]) / span
    order_nf = math.log(rows[0]["normal_form"] / rows[-1]["normal_form"]) / span
    dual_k = max(r["normal_form_K2"] / r["normal_form"] for r in rows)
    dual_k = max(dual_k, max(r["normal_form"] / r["normal_form_K2"] for r in rows))
    report = {
        "ladder": rows,
        "order_mild": order_mild,
        "order_normal_form": order_nf,
        "order_gap": abs(order_mild - order_nf),
        "dual_K_ratio": dual_k,
        "orders_match": abs(order_mild - order_nf) < 0.3,
        "dual_K_within_factor_4": dual_k < 4.0,
    }
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(outdir, "equivalence.json"), "w") as fh:
            json.dump({"config": cfg.to_dict(), "report": report}, fh,
                      indent=2, default=float)
    return report


def subsonic_table(cfg: RunConfig, outdir: str | None = None):
    grid = build_grid(cfg)
    icfg = integ_cfg(cfg)
    u0, _ = build_initial(cfg, grid)
    rows = subsonic_compare(u0, cfg.subsonic_alphas, cfg.T, icfg,
                            well_prepared=cfg.initial.well_prepared)
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        lines = [f"# schema=stozak-subsonic-v1 config={cfg.sha256()}",
                 f"# generated_at={datetime.now(timezone.utc).isoformat()}",
                 "alpha[1],l2_error_vs_nls[1]"]
        for a, e in rows:
            lines.append(f"{_fmt(a)},{_fmt(e)}")
        with open(os.path.join(outdir, "subsonic.csv"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return rows
