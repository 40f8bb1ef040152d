"""Figure renderers.

Deterministic output: fixed style, no timestamps, pinned SVG hash salt; the
source run's config hash is embedded in the caption and the image metadata.
Strictly read-only over the primary outputs: nothing here computes beyond
plotting transforms (log scales, CI bars).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import SchemaError, Table, read_table  # noqa: E402

plt.rcParams.update({
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 110,
    "svg.hashsalt": "zakfigs",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
})


def _finish(fig, axes_caption: str, config_hash: str, out_path: str):
    fig.text(0.01, 0.01, f"{axes_caption}  config={config_hash or 'n/a'}",
             fontsize=6, color="0.4")
    meta = {"Title": axes_caption, "Description": f"config={config_hash}"}
    if out_path.endswith(".svg"):
        meta["Date"] = None  # strip the timestamp for byte-stable output
    else:
        meta["Software"] = "zakfigs"
    fig.savefig(out_path, metadata=meta)
    plt.close(fig)


def render_drift(table: Table, out_path: str):
    t = np.array(table.column("t"))
    ez = np.array(table.column("E_Z"))
    mass = np.array(table.column("mass"))
    fig, ax = plt.subplots()
    base_e = ez[0] if ez[0] != 0 else 1.0
    base_m = mass[0] if mass[0] != 0 else 1.0
    eps = np.finfo(float).eps
    ax.semilogy(t[1:], np.abs(ez[1:] - ez[0]) / abs(base_e) + eps,
                label="|E_Z(t) - E_Z(0)| / |E_Z(0)|")
    ax.semilogy(t[1:], np.abs(mass[1:] - mass[0]) / base_m + eps,
                label="mass drift")
    ax.axhline(np.finfo(float).eps, color="0.6", lw=0.8, ls="--",
               label="machine epsilon")
    ax.set_xlabel("t")
    ax.set_ylabel("relative drift")
    ax.legend(loc="best")
    _finish(fig, "conserved-quantity drift", table.config_hash, out_path)


def render_mc_blowup(table: Table, out_path: str):
    phi = np.array(table.column("im_phi"))
    frac = np.array(table.column("blow_up_fraction"))
    lo = np.array(table.column("wilson_lo"))
    hi = np.array(table.column("wilson_hi"))
    fig, ax = plt.subplots()
    ax.errorbar(phi, frac, yerr=[frac - lo, hi - frac], fmt="o-",
                capsize=4, label="blow-up fraction (95% Wilson CI)")
    ax.set_xlabel("Im phi_1 (noise amplitude)")
    ax.set_ylabel("blow-up fraction on [0, T]")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(loc="best")
    _finish(fig, "regularization by noise", table.config_hash, out_path)


def render_subsonic(table: Table, out_path: str):
    alpha = np.array(table.column("alpha"))
    err = np.array(table.column("l2_error_vs_nls"))
    fig, ax = plt.subplots()
    ax.loglog(alpha, err, "o-")
    ax.set_xlabel("wave speed alpha")
    ax.set_ylabel("|u_alpha(T) - u_NLS(T)|_L2")
    _finish(fig, "subsonic limit", table.config_hash, out_path)


def render_ground_state(table: Table, out_path: str):
    r = np.array(table.column("r"))
    Q = np.array(table.column("Q"))
    fig, ax = plt.subplots()
    ax.plot(r, Q)
    ax.set_xlabel("r")
    ax.set_ylabel("Q(r)")
    kq = table.meta.get("K", float("nan"))
    ax.annotate(f"K(Q) = {kq:.2e} (0 analytically)",
                xy=(0.45, 0.75), xycoords="axes fraction")
    for key in ("M", "E_S", "J"):
        if key not in table.meta:
            raise SchemaError(f"ground-state CSV lacks functional {key!r}")
    txt = ", ".join(f"{k}(Q)={table.meta[k]:.4f}" for k in ("M", "E_S", "J"))
    ax.set_title(txt, fontsize=8)
    _finish(fig, "ground state profile", table.config_hash, out_path)


def render_norm_probes(table: Table, out_path: str):
    names = table.column("estimate")
    consts = np.array(table.column("const"))
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ypos = np.arange(len(names))
    ax.barh(ypos, np.maximum(consts, 1e-300), log=True)
    ax.set_yticks(ypos, names, fontsize=6)
    ax.set_xlabel("empirical constant (sup over trials)")
    fig.tight_layout()
    _finish(fig, "multilinear estimate constants", table.config_hash, out_path)


FIGURES = {
    "drift": ("stozak-diag-v1", render_drift),
    "mc-blowup": ("stozak-mc-v1", render_mc_blowup),
    "subsonic": ("stozak-subsonic-v1", render_subsonic),
    "ground-state": ("stozak-ground-v1", render_ground_state),
    "norm-probes": ("stozak-norms-v1", render_norm_probes),
}


def render(figure_id: str, in_path: str, out_path: str):
    if figure_id not in FIGURES:
        raise SchemaError(f"unknown figure id {figure_id!r}; known: "
                          f"{sorted(FIGURES)}")
    schema, fn = FIGURES[figure_id]
    table = read_table(in_path, expect_schema=schema)
    fn(table, out_path)
    return out_path
