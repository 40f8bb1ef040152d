"""Littlewood-Paley projectors, paraproducts and bilinear frequency multipliers.

Dyadic shells are built from a fixed smooth even bump eta0 (plateau on
[-5/4, 5/4], support in (-8/5, 8/5)) via

    chi_N(xi) = eta0(|xi|/N) - eta0(2|xi|/N),      chi_{<=N}(xi) = eta0(|xi|/N).

On a finite grid the representable shells are N_j = (2*pi/L) * 2^j for
j = 0..log2(n/2); content below the lowest shell is folded into it and
content above the highest shell into that one, so the partition of unity
sum_j chi_j(xi) = 1 holds exactly on every nonzero lattice mode.  The mean
mode is carried by the low-pass windows (eta0(0) = 1) and by an explicit
mean x mean term in the high-high paraproduct.

All bilinear operations apply the grid's dealias mask to their output, so
the frequency-exact convolution path and the FFT product path agree on
band-limited data and algebraic identities between them survive masking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import Grid, SpectralField, _check_same_grid


# ---------------------------------------------------------------------------
# smooth bumps
# ---------------------------------------------------------------------------

def _mollifier(t):
    """exp(-1/t) for t > 0, extended by 0; the standard C-infinity glue."""
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)


def _smoothstep_down(x, a, b):
    """C-infinity transition from 1 at x<=a to 0 at x>=b."""
    x = np.asarray(x, dtype=np.float64)
    s = (x - a) / (b - a)
    up = _mollifier(s)
    down = _mollifier(1.0 - s)
    out = down / (up + down + np.finfo(float).tiny)
    return np.where(x <= a, 1.0, np.where(x >= b, 0.0, out))


ETA0_PLATEAU = 5.0 / 4.0
ETA0_SUPPORT = 8.0 / 5.0


def eta0(x):
    """Even bump: 1 on [-5/4, 5/4], 0 outside (-8/5, 8/5)."""
    return _smoothstep_down(np.abs(np.asarray(x, dtype=np.float64)), ETA0_PLATEAU, ETA0_SUPPORT)


def phi_bump(r):
    """Lateral bump: 0 for |r| <= 1/8 or |r| > 4, 1 on 1/4 <= |r| <= 2."""
    t = np.abs(np.asarray(r, dtype=np.float64))
    rising = 1.0 - _smoothstep_down(t, 1.0 / 8.0, 1.0 / 4.0)
    falling = _smoothstep_down(t, 2.0, 4.0)
    out = np.where(t < 1.0 / 4.0, rising, falling)
    out = np.where(t > 4.0, 0.0, out)
    return out


@dataclass(frozen=True)
class DyadicParams:
    """High/low interaction threshold K (dyadic, >= 2^5) and the bump radii."""

    K: int = 32
    eta0_inner: float = ETA0_PLATEAU
    eta0_outer: float = ETA0_SUPPORT
    phi_inner: float = 0.25
    phi_outer: float = 2.0
    phi_support: tuple = (0.125, 4.0)

    def __post_init__(self):
        if self.K < 32 or (self.K & (self.K - 1)) != 0:
            raise ValueError(f"K must be a dyadic integer >= 2^5, got {self.K}")

    @property
    def kappa(self) -> int:
        return int(round(math.log2(self.K)))


# ---------------------------------------------------------------------------
# shell systems (per-grid immutable caches)
# ---------------------------------------------------------------------------

class ShellSystem:
    """Folded dyadic shell masks for one grid; immutable after construction."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.levels = int(round(math.log2(grid.n // 2)))
        self.shells = tuple(grid.fundamental * 2.0**j for j in range(self.levels + 1))
        kk = grid.kk
        self._chi = []
        for j, N in enumerate(self.shells):
            if j == 0:
                m = eta0(kk / N)
                m[0, 0, 0] = 0.0
            elif j == self.levels:
                m = 1.0 - eta0(2.0 * kk / N)
            else:
                m = eta0(kk / N) - eta0(2.0 * kk / N)
            self._chi.append(m)
        self._windows: dict[float, np.ndarray] = {}

    def chi(self, j: int) -> np.ndarray:
        return self._chi[j]

    def shell_index(self, N: float) -> int:
        for j, Nj in enumerate(self.shells):
            if abs(N - Nj) <= 1e-9 * Nj:
                return j
        raise ValueError(
            f"N={N} not in the representable dyadic range "
            f"[{self.shells[0]}, {self.shells[-1]}]"
        )

    def lowpass(self, M: float) -> np.ndarray:
        """Window chi_{<=M}; collapses to the mean mode once M drops below
        the lowest shell (consistent with the folded label algebra)."""
        key = float(M)
        if key not in self._windows:
            if M >= self.shells[0] * (1.0 - 1e-12):
                self._windows[key] = eta0(self.grid.kk / M)
            else:
                m = np.zeros((self.grid.n,) * 3)
                m[0, 0, 0] = 1.0
                self._windows[key] = m
        return self._windows[key]

    def xl_indices(self) -> list[int]:
        return [j for j, N in enumerate(self.shells) if abs(math.log2(N)) > 1.0 + 1e-12]

    def unit_indices(self) -> list[int]:
        return [j for j, N in enumerate(self.shells) if abs(math.log2(N)) <= 1.0 + 1e-12]


_SHELL_CACHE: dict[tuple, ShellSystem] = {}


def shell_system(grid: Grid) -> ShellSystem:
    key = (grid.n, grid.length, grid.dealias_fraction)
    if key not in _SHELL_CACHE:
        _SHELL_CACHE[key] = ShellSystem(grid)
    return _SHELL_CACHE[key]


def dyadic_shells(grid: Grid) -> tuple:
    return shell_system(grid).shells


# ---------------------------------------------------------------------------
# projectors
# ---------------------------------------------------------------------------

def lp_project(f: SpectralField, N: float) -> SpectralField:
    """Littlewood-Paley piece P_N f (folded at the extreme shells)."""
    ss = shell_system(f.grid)
    j = ss.shell_index(N)
    return SpectralField.from_freq(f.grid, ss.chi(j) * f.freq())


def lowpass_project(f: SpectralField, M: float) -> SpectralField:
    """Low-pass P_{<=M} f with the window convention of ShellSystem.lowpass."""
    ss = shell_system(f.grid)
    return SpectralField.from_freq(f.grid, ss.lowpass(M) * f.freq())


def directional_project(f: SpectralField, N: float, axis: int) -> SpectralField:
    """P_{N,e_j} f: one-dimensional lateral bump phi(xi_j / N)."""
    ss = shell_system(f.grid)
    ss.shell_index(N)  # range check
    mask = phi_bump(f.grid.k_component(axis) / N)
    return SpectralField.from_freq(f.grid, mask * f.freq())


def directional_reconstruct(f: SpectralField, N: float) -> SpectralField:
    """sum_j P_{N,e_j} [prod_{l<j} (1 - P_{N,e_l})] P_N f, which equals P_N f."""
    pnf = lp_project(f, N)
    out = SpectralField.zero(f.grid)
    remainder = pnf
    for axis in range(3):
        out = out + directional_project(remainder, N, axis)
        remainder = remainder - directional_project(remainder, N, axis)
    return out


# ---------------------------------------------------------------------------
# paraproducts (FFT production path)
# ---------------------------------------------------------------------------

PARAPRODUCT_KINDS = ("LH", "HL", "HH", "XL", "1L", "R")


def _masked_phys(c: np.ndarray, mask: np.ndarray, n: int) -> np.ndarray:
    return np.fft.ifftn(mask * c) * n**3


def paraproduct(f: SpectralField, g: SpectralField, kind: str,
                params: DyadicParams | None = None) -> SpectralField:
    """Frequency-interaction part of the product fg.

    LH: f low, g in a shell; HL = LH with the roles swapped; HH: both factors
    within a ratio-K band (plus the mean x mean pair); XL/1L split HL by
    whether the high shell sits away from or at unit scale; R = 1L + HH + LH.
    """
    _check_same_grid(f, g)
    params = params or DyadicParams()
    if kind not in PARAPRODUCT_KINDS:
        raise ValueError(f"unknown paraproduct kind {kind!r}")
    if kind == "HL":
        return paraproduct(g, f, "LH", params)
    if kind == "R":
        out = paraproduct(f, g, "1L", params) + paraproduct(f, g, "HH", params)
        return out + paraproduct(f, g, "LH", params)

    ss = shell_system(f.grid)
    n, K = f.grid.n, params.K
    cf, cg = f.freq(), g.freq()
    acc = np.zeros((n,) * 3, dtype=np.complex128)

    if kind == "LH":
        for j, N in enumerate(ss.shells):
            low = _masked_phys(cf, ss.lowpass(N / K), n)
            high = _masked_phys(cg, ss.chi(j), n)
            acc += np.fft.fftn(low * high) / n**3
    elif kind in ("XL", "1L"):
        idx = ss.xl_indices() if kind == "XL" else ss.unit_indices()
        for j in idx:
            N = ss.shells[j]
            high = _masked_phys(cf, ss.chi(j), n)
            low = _masked_phys(cg, ss.lowpass(N / K), n)
            acc += np.fft.fftn(high * low) / n**3
    elif kind == "HH":
        kappa = params.kappa
        pf = [_masked_phys(cf, ss.chi(j), n) for j in range(ss.levels + 1)]
        pg = [_masked_phys(cg, ss.chi(j), n) for j in range(ss.levels + 1)]
        for j1 in range(ss.levels + 1):
            for j2 in range(ss.levels + 1):
                if abs(j1 - j2) <= kappa - 1:
                    acc += np.fft.fftn(pf[j1] * pg[j2]) / n**3
        acc[0, 0, 0] += cf[0, 0, 0] * cg[0, 0, 0]

    return SpectralField.from_freq(f.grid, acc * f.grid.dealias_mask)


# ---------------------------------------------------------------------------
# exact frequency-space convolution machinery
# ---------------------------------------------------------------------------

def _shifted_axes(grid: Grid):
    k1 = np.fft.fftshift(grid.k1)
    kx = k1[:, None, None]
    ky = k1[None, :, None]
    kz = k1[None, None, :]
    return kx, ky, kz


def _shift_add(out: np.ndarray, src: np.ndarray, shift: tuple[int, int, int]):
    """out[m + shift] += src[m] in mode-ascending layout; out-of-range drops."""
    n = out.shape[0]
    sl_out, sl_in = [], []
    for s in shift:
        if s >= 0:
            sl_out.append(slice(s, n))
            sl_in.append(slice(0, n - s))
        else:
            sl_out.append(slice(0, n + s))
            sl_in.append(slice(-s, n))
    out[tuple(sl_out)] += src[tuple(sl_in)]


class BilinearSymbolError(ValueError):
    """Raised when a symbol is not finite on a pair that carries mass."""


def bilinear_multiplier(f: SpectralField, g: SpectralField, m) -> SpectralField:
    """Exact discrete T_m(f, g): out(zeta) = sum_{xi+eta=zeta} m(xi,eta) fhat(xi) ghat(eta).

    The sum runs over the true frequency lattice (out-of-range output modes
    are dropped, no aliasing); the dealias mask is applied at the end to stay
    comparable with the FFT product path.  m is called as m(kx, ky, kz, eta)
    with broadcastable lattice component arrays for the first factor and one
    3-vector eta for the second.  O(n^6); this is the oracle path.
    """
    _check_same_grid(f, g)
    grid = f.grid
    n = grid.n
    cf = np.fft.fftshift(f.freq())
    cg = np.fft.fftshift(g.freq())
    kx, ky, kz = _shifted_axes(grid)
    modes = np.fft.fftshift(np.fft.fftfreq(n, d=1.0 / n)).astype(int)
    out = np.zeros((n,) * 3, dtype=np.complex128)
    f_nonzero = np.abs(cf) > 0

    for i1, m1 in enumerate(modes):
        for i2, m2 in enumerate(modes):
            for i3, m3 in enumerate(modes):
                amp = cg[i1, i2, i3]
                if amp == 0:
                    continue
                eta = np.array([m1, m2, m3], dtype=float) * grid.fundamental
                vals = np.asarray(m(kx, ky, kz, eta), dtype=np.complex128)
                vals = np.broadcast_to(vals, cf.shape)
                bad = ~np.isfinite(vals) & f_nonzero
                if bad.any():
                    w = np.argwhere(bad)[0]
                    xi = (modes[w[0]] * grid.fundamental,
                          modes[w[1]] * grid.fundamental,
                          modes[w[2]] * grid.fundamental)
                    raise BilinearSymbolError(
                        f"symbol not finite at xi={xi}, eta={tuple(eta)}")
                vals = np.where(np.isfinite(vals), vals, 0.0)
                _shift_add(out, cf * vals * amp, (int(m1), int(m2), int(m3)))

    out = np.fft.ifftshift(out) * grid.dealias_mask
    return SpectralField.from_freq(grid, out)


# ---------------------------------------------------------------------------
# resonance function and the normal-form operator Omega_b
# ---------------------------------------------------------------------------

def resonance(k, e):
    """omega_r(k, e) = |k + e|^2 + |k| - |e|^2 (first slot = high factor)."""
    k = np.asarray(k, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    ksum = k + e
    return (np.sum(ksum * ksum, axis=-1) + np.sqrt(np.sum(k * k, axis=-1))
            - np.sum(e * e, axis=-1))


class OmegaB:
    """Bilinear normal-form operator: symbol P_XL(k, e) / omega_r(k, e).

    The first argument is the high-frequency factor.  Realized exactly in
    frequency space: the XL low windows on a finite grid contain only a few
    lattice modes e, so the output is a short sum of frequency-shifted copies
    of the shell-projected high factor.  At construction the resonance
    function is checked to be strictly positive on every in-support lattice
    pair (exhaustively); the minimum is recorded.
    """

    def __init__(self, grid: Grid, params: DyadicParams | None = None):
        self.grid = grid
        self.params = params or DyadicParams()
        ss = shell_system(grid)
        self._ss = ss
        kx, ky, kz = _shifted_axes(grid)
        self._kx, self._ky, self._kz = kx, ky, kz
        kk = np.sqrt(kx**2 + ky**2 + kz**2)
        self._kk = kk
        self._k2 = kk**2

        self.min_resonance = np.inf
        self.entries = []  # (shell index j, chi mask shifted, [(shift, window weight)])
        n = grid.n
        for j in ss.xl_indices():
            N = ss.shells[j]
            chi_s = np.fft.fftshift(ss.chi(j))
            supp = chi_s > 0
            win = np.fft.fftshift(ss.lowpass(N / self.params.K))
            wnz = np.argwhere(win > 0)
            modes = []
            for idx in wnz:
                mode = idx - n // 2
                e = mode.astype(float) * grid.fundamental
                wr = (self._k2 + 2.0 * (kx * e[0] + ky * e[1] + kz * e[2])
                      + e @ e + kk - e @ e)
                wr_min = wr[supp].min() if supp.any() else np.inf
                if wr_min <= 0:
                    raise ValueError(
                        f"resonance vanishes on XL support: shell N={N}, e={tuple(e)}")
                self.min_resonance = min(self.min_resonance, float(wr_min))
                modes.append((tuple(int(v) for v in mode),
                              float(win[tuple(idx)])))
            self.entries.append((j, chi_s, modes))

    def apply(self, f: SpectralField, g: SpectralField,
              shell_indices=None) -> SpectralField:
        _check_same_grid(f, g)
        grid = self.grid
        n = grid.n
        cf = np.fft.fftshift(f.freq())
        cg = np.fft.fftshift(g.freq())
        out = np.zeros((n,) * 3, dtype=np.complex128)
        for j, chi_s, modes in self.entries:
            if shell_indices is not None and j not in shell_indices:
                continue
            fh = chi_s * cf
            supp = chi_s > 0
            for mode, w in modes:
                amp = w * cg[mode[0] + n // 2, mode[1] + n // 2, mode[2] + n // 2]
                if amp == 0:
                    continue
                e = np.array(mode, dtype=float) * grid.fundamental
                wr = (self._k2 + 2.0 * (self._kx * e[0] + self._ky * e[1]
                                        + self._kz * e[2]) + self._kk)
                src = np.zeros_like(fh)
                np.divide(fh, wr, out=src, where=supp)
                _shift_add(out, src * amp, mode)
        out = np.fft.ifftshift(out) * grid.dealias_mask
        return SpectralField.from_freq(grid, out)


_OMEGA_CACHE: dict[tuple, OmegaB] = {}


def omega_b_operator(grid: Grid, params: DyadicParams | None = None) -> OmegaB:
    params = params or DyadicParams()
    key = (grid.n, grid.length, grid.dealias_fraction, params.K)
    if key not in _OMEGA_CACHE:
        _OMEGA_CACHE[key] = OmegaB(grid, params)
    return _OMEGA_CACHE[key]


def omega_b(f: SpectralField, g: SpectralField,
            params: DyadicParams | None = None) -> SpectralField:
    """Omega_b(f, g) with f the high factor (the wave slot in the normal form)."""
    return omega_b_operator(f.grid, params).apply(f, g)


def xl_symbol(grid: Grid, params: DyadicParams | None = None):
    """P_XL as a callable symbol for bilinear_multiplier (consistency tests)."""
    params = params or DyadicParams()
    ss = shell_system(grid)

    def m(kx, ky, kz, eta):
        kk = np.sqrt(kx**2 + ky**2 + kz**2)
        val = np.zeros_like(kk)
        enorm = float(np.sqrt(eta @ eta))
        for j in ss.xl_indices():
            N = ss.shells[j]
            if j == 0:
                chi = eta0(kk / N)
                chi = np.where(kk == 0.0, 0.0, chi)
            elif j == ss.levels:
                chi = 1.0 - eta0(2.0 * kk / N)
            else:
                chi = eta0(kk / N) - eta0(2.0 * kk / N)
            M = N / params.K
            if M >= ss.shells[0] * (1.0 - 1e-12):
                wval = float(eta0(enorm / M))
            else:
                wval = 1.0 if enorm == 0.0 else 0.0
            val = val + chi * wval
        return val

    return m


def omega_b_symbol(grid: Grid, params: DyadicParams | None = None):
    """P_XL / omega_r as a callable symbol (oracle for OmegaB.apply)."""
    pxl = xl_symbol(grid, params)

    def m(kx, ky, kz, eta):
        mask = pxl(kx, ky, kz, eta)
        kk = np.sqrt(kx**2 + ky**2 + kz**2)
        wr = (kk**2 + 2.0 * (kx * eta[0] + ky * eta[1] + kz * eta[2])
              + eta @ eta + kk - eta @ eta)
        out = np.zeros_like(mask)
        np.divide(mask, wr, out=out, where=mask > 0)
        return out

    return m
