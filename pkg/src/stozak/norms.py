"""Discrete space-time norms and empirical probes of the multilinear estimates.

The lateral norm L_e^{p,q} integrates |f|^q over time and the plane
transverse to e, then takes the L^p norm along the e-coordinate.  The
composite norms stack Strichartz components (L^2 L^6 with <N> weights) and
local-smoothing components (N^{3/2} lateral L^{infty,2}) over dyadic shells.

The dual-space norms (G, N^1) involve an infimum over three-way (two-way)
splittings of g; computing the true infimum over a grid is not tractable, so
the reported value takes, per dyadic block, the best PURE bucket.  This is
an upper bound for the true norm and is conservative in exactly the right
direction for estimate probes: the measured ratios left/right only shrink if
the true infimum is smaller.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import Grid, SpectralField
from .spectral import phi_bump, shell_system


@dataclass
class SpaceTimeField:
    """Uniform time mesh on an interval and one complex field per time."""

    grid: Grid
    times: np.ndarray
    data: np.ndarray  # (nt, n, n, n) frequency coefficients

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        dt = np.diff(self.times)
        if dt.size and np.abs(dt - dt[0]).max() > 1e-9 * max(dt[0], 1e-12):
            raise ValueError("SpaceTimeField requires a uniform time mesh")
        if self.data.shape != (self.times.size,) + (self.grid.n,) * 3:
            raise ValueError("data shape does not match times/grid")

    @classmethod
    def from_fields(cls, times, fields) -> "SpaceTimeField":
        grid = fields[0].grid
        data = np.stack([f.freq() for f in fields])
        return cls(grid, np.asarray(times, float), data)

    @property
    def interval(self) -> float:
        return float(self.times[-1] - self.times[0])

    def phys(self) -> np.ndarray:
        return np.fft.ifftn(self.data, axes=(1, 2, 3)) * self.grid.n**3

    def time_weights(self) -> np.ndarray:
        """Trapezoid weights on the mesh (exact for the constant-in-t tests)."""
        nt = self.times.size
        if nt == 1:
            return np.ones(1)
        h = self.times[1] - self.times[0]
        w = np.full(nt, h)
        w[0] = w[-1] = 0.5 * h
        return w


def _space_lp(a_phys: np.ndarray, p: float, dv: float) -> np.ndarray:
    """L^p over the last three axes; a_phys is (..., n, n, n)."""
    mag = np.abs(a_phys)
    if np.isinf(p):
        return mag.max(axis=(-3, -2, -1))
    return (np.sum(mag**p, axis=(-3, -2, -1)) * dv) ** (1.0 / p)


def _time_lq(vals: np.ndarray, q: float, w: np.ndarray) -> float:
    if np.isinf(q):
        return float(vals.max())
    return float((np.sum(w * vals**q)) ** (1.0 / q))


def lebesgue_tx(f: SpaceTimeField, q_time: float, p_space: float) -> float:
    """L^q(I; L^p_x) mixed norm."""
    vals = _space_lp(f.phys(), p_space, f.grid.cell_volume)
    return _time_lq(vals, q_time, f.time_weights())


def lateral_norm(f: SpaceTimeField, axis: int, p: float, q: float) -> float:
    """L_e^{p,q}: outer L^p along axis, inner L^q over time x transverse plane."""
    if axis not in (0, 1, 2):
        raise ValueError("axis must be 0, 1 or 2")
    a = np.abs(f.phys())
    w = f.time_weights()
    grid = f.grid
    taxes = tuple(1 + ax for ax in range(3) if ax != axis)
    dA = grid.dx**2
    if np.isinf(q):
        inner = a.max(axis=taxes)  # (nt, n)
        inner = inner.max(axis=0)
    else:
        sl = np.sum(a**q, axis=taxes) * dA  # (nt, n)
        inner = (np.tensordot(w, sl, axes=1)) ** (1.0 / q)
    if np.isinf(p):
        return float(inner.max())
    return float((np.sum(inner**p) * grid.dx) ** (1.0 / p))


def sup_hs(f: SpaceTimeField, s: float) -> float:
    wgt = (1.0 + f.grid.k2) ** s
    vals = np.sqrt(f.grid.volume * np.sum(wgt * np.abs(f.data) ** 2, axis=(1, 2, 3)))
    return float(vals.max())


def y_norm(f: SpaceTimeField) -> float:
    """L^infty(I; L^2)."""
    return sup_hs(f, 0.0)


@dataclass
class NormReport:
    value: float
    breakdown: dict = field(default_factory=dict)
    decomposition_choice: dict = field(default_factory=dict)


def _shell_field(f: SpaceTimeField, j: int) -> SpaceTimeField:
    ss = shell_system(f.grid)
    return SpaceTimeField(f.grid, f.times, f.data * ss.chi(j))


def _directional_data(f: SpaceTimeField, N: float, axis: int) -> SpaceTimeField:
    mask = phi_bump(f.grid.k_component(axis) / N)
    return SpaceTimeField(f.grid, f.times, f.data * mask)


def _shell_stack_phys(f: SpaceTimeField) -> np.ndarray:
    """(n_shells, nt, n, n, n) physical values of all P_N f in one batched FFT."""
    ss = shell_system(f.grid)
    masks = np.stack([ss.chi(j) for j in range(ss.levels + 1)])
    stack = masks[:, None] * f.data[None]
    return np.fft.ifftn(stack, axes=(-3, -2, -1)) * f.grid.n**3


def _stack_l2l6(f: SpaceTimeField, phys_stack: np.ndarray) -> np.ndarray:
    vals = _space_lp(phys_stack, 6.0, f.grid.cell_volume)  # (S, nt)
    w = f.time_weights()
    return np.sqrt(np.tensordot(vals**2, w, axes=([1], [0])))  # (S,)


def x_norm(f: SpaceTimeField) -> NormReport:
    """X(I) norm: sup-in-time H^1 plus the l^2 dyadic stack of Strichartz and
    directional local-smoothing components."""
    ss = shell_system(f.grid)
    grid = f.grid
    shells = np.asarray(ss.shells)
    masks = np.stack([ss.chi(j) for j in range(ss.levels + 1)])
    pn = masks[:, None] * f.data[None]  # (S, nt, n, n, n)
    phys = np.fft.ifftn(pn, axes=(-3, -2, -1)) * grid.n**3
    vals = np.sqrt(1.0 + shells**2) * _stack_l2l6(f, phys)

    w = f.time_weights()
    dA = grid.dx**2
    lateral = np.zeros(len(shells))
    for ax in range(3):
        dir_masks = np.stack([phi_bump(grid.k_component(ax) / N) for N in shells])
        pd = np.fft.ifftn(dir_masks[:, None] * pn, axes=(-3, -2, -1)) * grid.n**3
        taxes = tuple(2 + a for a in range(3) if a != ax)
        sl = np.sum(np.abs(pd) ** 2, axis=taxes) * dA      # (S, nt, n)
        inner = np.sqrt(np.tensordot(w, sl, axes=([0], [1])))  # (S, n)
        lateral += shells**1.5 * inner.max(axis=1)
    blocks = {N: float(vals[j] + lateral[j]) for j, N in enumerate(shells)}
    stack = float(np.sqrt(sum(v * v for v in blocks.values())))
    return NormReport(value=sup_hs(f, 1.0) + stack, breakdown=blocks)


def s1_norm(f: SpaceTimeField) -> NormReport:
    """S^1(I): the X norm with the local-smoothing component dropped."""
    ss = shell_system(f.grid)
    shells = np.asarray(ss.shells)
    phys = _shell_stack_phys(f)
    vals = np.sqrt(1.0 + shells**2) * _stack_l2l6(f, phys)
    blocks = {N: float(vals[j]) for j, N in enumerate(shells)}
    stack = float(np.sqrt(sum(v * v for v in blocks.values())))
    return NormReport(value=sup_hs(f, 1.0) + stack, breakdown=blocks)


def _g_buckets(fN: SpaceTimeField, N: float):
    bracket = np.sqrt(1.0 + N * N)
    b1 = bracket * lebesgue_tx(fN, 1.0, 2.0)
    b2 = bracket * lebesgue_tx(fN, 8.0 / 5.0, 4.0 / 3.0)
    b3 = np.sqrt(N) * sum(lateral_norm(fN, ax, 1.0, 2.0) for ax in range(3))
    return b1, b2, b3


def g_norm(g: SpaceTimeField) -> NormReport:
    """G(I) upper bound: per dyadic block the best of the three pure-bucket
    assignments (true infimum over splittings is not computed)."""
    ss = shell_system(g.grid)
    blocks, choice = {}, {}
    for j, N in enumerate(ss.shells):
        b = _g_buckets(_shell_field(g, j), N)
        k = int(np.argmin(b))
        blocks[N] = b[k]
        choice[N] = ("L1L2", "L8/5L4/3", "lateral")[k]
    val = float(np.sqrt(sum(v * v for v in blocks.values())))
    return NormReport(value=val, breakdown=blocks, decomposition_choice=choice)


def n1_norm(g: SpaceTimeField) -> NormReport:
    """N^1(I) upper bound: two-bucket variant (no lateral bucket)."""
    ss = shell_system(g.grid)
    blocks, choice = {}, {}
    for j, N in enumerate(ss.shells):
        b1, b2, _ = _g_buckets(_shell_field(g, j), N)
        k = int(np.argmin((b1, b2)))
        blocks[N] = (b1, b2)[k]
        choice[N] = ("L1L2", "L8/5L4/3")[k]
    val = float(np.sqrt(sum(v * v for v in blocks.values())))
    return NormReport(value=val, breakdown=blocks, decomposition_choice=choice)


# ---------------------------------------------------------------------------
# trial data and flow helpers for the estimate probes
# ---------------------------------------------------------------------------

def random_band_limited(grid: Grid, rng, decay: float = 1.0) -> SpectralField:
    """Complex Gaussian coefficients, amplitude ~ <k>^{-decay}, dealias band."""
    c = (rng.standard_normal((grid.n,) * 3)
         + 1j * rng.standard_normal((grid.n,) * 3))
    c = c * (1.0 + grid.k2) ** (-0.5 * decay) * grid.dealias_mask
    return SpectralField.from_freq(grid, c)


def free_schrodinger(grid: Grid, f0: SpectralField, times) -> SpaceTimeField:
    data = np.stack([np.exp(-1j * t * grid.k2) * f0.freq() for t in times])
    return SpaceTimeField(grid, np.asarray(times, float), data)


def free_wave(grid: Grid, f0: SpectralField, times) -> SpaceTimeField:
    data = np.stack([np.exp(1j * t * grid.kk) * f0.freq() for t in times])
    return SpaceTimeField(grid, np.asarray(times, float), data)


def duhamel_schrodinger(g: SpaceTimeField) -> SpaceTimeField:
    """int_0^t e^{i(t-s)Delta} g(s) ds on the mesh (cumulative trapezoid)."""
    grid = g.grid
    t = g.times
    nt = t.size
    out = np.zeros_like(g.data)
    acc = np.zeros_like(g.data[0])  # integral of e^{-i s Delta} g(s)
    h = t[1] - t[0] if nt > 1 else 0.0
    back = np.exp(1j * t[:, None, None, None] * grid.k2[None])
    fwd0 = np.exp(-1j * t[:, None, None, None] * grid.k2[None])
    for m in range(1, nt):
        acc = acc + 0.5 * h * (back[m - 1] * g.data[m - 1] + back[m] * g.data[m])
        out[m] = fwd0[m] * acc
    return SpaceTimeField(grid, t, out)


def duhamel_wave(g: SpaceTimeField) -> SpaceTimeField:
    grid = g.grid
    t = g.times
    out = np.zeros_like(g.data)
    acc = np.zeros_like(g.data[0])
    h = t[1] - t[0] if t.size > 1 else 0.0
    for m in range(1, t.size):
        bm1 = np.exp(-1j * t[m - 1] * grid.kk) * g.data[m - 1]
        bm = np.exp(-1j * t[m] * grid.kk) * g.data[m]
        acc = acc + 0.5 * h * (bm1 + bm)
        out[m] = np.exp(1j * t[m] * grid.kk) * acc
    return SpaceTimeField(grid, t, out)


def potential_flow(grid: Grid, f0: SpectralField, Y0: SpectralField, times,
                   source: SpaceTimeField | None = None) -> SpaceTimeField:
    """Strang solve of (d/dt - i Delta + i v1) u = source with v1 = e^{it|nabla|} Y0."""
    nt = len(times)
    dt = times[1] - times[0]
    data = np.empty((nt,) + (grid.n,) * 3, dtype=np.complex128)
    uhat = f0.freq() * grid.dealias_mask
    data[0] = uhat
    e_half = np.exp(-1j * (0.5 * dt) * grid.k2)
    for m in range(1, nt):
        t_mid = times[m - 1] + 0.5 * dt
        v1 = np.fft.ifftn(np.exp(1j * t_mid * grid.kk) * Y0.freq()) * grid.n**3
        u = np.fft.ifftn(e_half * uhat) * grid.n**3
        u = np.exp(-1j * dt * v1) * u
        uhat = np.fft.fftn(u) / grid.n**3 * grid.dealias_mask
        if source is not None:
            s_mid = 0.5 * (source.data[m - 1] + source.data[m])
            uhat = uhat + dt * s_mid
        uhat = e_half * uhat
        data[m] = uhat
    return SpaceTimeField(grid, np.asarray(times, float), data)


def product_st(a: SpaceTimeField, b: SpaceTimeField,
               scalar: np.ndarray | None = None) -> SpaceTimeField:
    """Pointwise (dealiased) product per time slice; scalar is optional h(t)."""
    grid = a.grid
    pa, pb = a.phys(), b.phys()
    prod = pa * pb
    if scalar is not None:
        prod = prod * scalar[:, None, None, None]
    hat = np.fft.fftn(prod, axes=(1, 2, 3)) / grid.n**3 * grid.dealias_mask
    return SpaceTimeField(grid, a.times, hat)


def st_map(f: SpaceTimeField, op) -> SpaceTimeField:
    out = np.stack([op(SpectralField.from_freq(f.grid, f.data[m])).freq()
                    for m in range(f.times.size)])
    return SpaceTimeField(f.grid, f.times, out)
