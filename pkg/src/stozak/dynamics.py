"""Time integrators and residual evaluators for all formulations.

Deterministic and damped systems use a Strang arrangement: exact spectral
linear flows, pointwise phase rotation for the Schroedinger nonlinearity
(the potential is evaluated at the sub-step midpoint), and an exact
integrating-factor trapezoid for the wave source.  The random (rescaled)
system advances the Schroedinger line with a Lawson RK4 in the interaction
picture, treating Re(v)u - b.grad(u) - cu + Re(T)u as the nonlinearity.
The Ito system is advanced by Euler-Maruyama with the exact linear flow and
left-point noise increments, which is the independent cross-check of the
pathwise solver rather than the accuracy workhorse.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import Grid, SpectralField
from .noise import NoiseRealization
from .spectral import DyadicParams, omega_b_operator, paraproduct
from .transforms import (Gauge, default_eps_star, refined_rescale,
                         refined_rescale_inverse)

SCHEMES = ("strang_split", "lawson_rk4", "euler_maruyama")


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    scheme: str = "strang_split"
    dealias: bool = True
    K: int = 32
    residual_check_every: int = 0
    threshold_factor: float = 50.0
    use_real_part: bool = True
    save_every: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def params(self) -> DyadicParams:
        return DyadicParams(K=self.K)


@dataclass
class Trajectory:
    """Saved states plus blow-up bookkeeping and the stopping sequence."""

    times: list = field(default_factory=list)
    u: list = field(default_factory=list)
    v: list = field(default_factory=list)
    gauge: Gauge = Gauge.RANDOM
    alpha: float = 1.0
    blow_up: bool = False
    blow_up_time: float | None = None
    sigma_sequence: list = field(default_factory=list)
    residual_checks: list = field(default_factory=list)  # (t, mild defect)

    def save(self, t, u, v):
        # keep only the frequency representation: halves the memory held by
        # long save lists (phys is recomputed on demand)
        self.times.append(t)
        self.u.append(SpectralField.from_freq(u.grid, u.freq()))
        self.v.append(SpectralField.from_freq(v.grid, v.freq()))

    @property
    def final(self):
        return self.times[-1], self.u[-1], self.v[-1]


def monitor_blow_up(u: SpectralField, v: SpectralField, initial_norm: float,
                    factor: float = 50.0) -> bool:
    """Blow-up alternative proxy: H1 x L2 norm beyond factor x initial, or NaN."""
    val = u.h1() + v.l2()
    return bool(not np.isfinite(val) or val > factor * initial_norm)


# ---------------------------------------------------------------------------
# elementary steps
# ---------------------------------------------------------------------------

_PHASE_CACHE: dict = {}


def _phases(grid: Grid, dt: float, alpha: float = 1.0):
    """Cached linear-flow phase arrays for one (grid, dt, alpha)."""
    key = (grid.n, grid.length, dt, alpha)
    if key not in _PHASE_CACHE:
        _PHASE_CACHE[key] = {
            "schrodinger_half": np.exp(-1j * (0.5 * dt) * grid.k2),
            "schrodinger_full": np.exp(-1j * dt * grid.k2),
            "wave_half": np.exp(1j * alpha * (0.5 * dt) * grid.kk),
            "wave_full": np.exp(1j * alpha * dt * grid.kk),
        }
    return _PHASE_CACHE[key]


def _dealias(grid: Grid, arr_hat: np.ndarray, on: bool) -> np.ndarray:
    return arr_hat * grid.dealias_mask if on else arr_hat


def _wave_stage(grid, vhat0, shat0, alpha, s):
    """Exact wave flow with the source |nabla| s frozen: interaction-picture
    integral evaluates in closed form mode by mode."""
    phase = np.exp(1j * alpha * s * grid.kk)
    return phase * vhat0 + (phase - 1.0) * shat0


def step_deterministic(u: SpectralField, v: SpectralField, dt: float,
                       alpha: float = 1.0, dealias: bool = True,
                       h_scale: float = 1.0):
    """One Strang step of the first-order deterministic system; h_scale
    multiplies the wave source (the geometric-BM damping enters here)."""
    grid = u.grid
    ph = _phases(grid, dt, alpha)
    uhat, vhat = u.freq(), v.freq()
    shat0 = _dealias(grid, np.fft.fftn(np.abs(u.phys()) ** 2) / grid.n**3, dealias)

    uhat = ph["schrodinger_half"] * uhat
    v_mid = np.fft.ifftn(ph["wave_half"] * vhat
                         + (ph["wave_half"] - 1.0) * h_scale * shat0) * grid.n**3
    u_phys = np.fft.ifftn(uhat) * grid.n**3
    u_phys = np.exp(-1j * dt * np.real(v_mid)) * u_phys
    uhat = _dealias(grid, np.fft.fftn(u_phys) / grid.n**3, dealias)
    uhat = ph["schrodinger_half"] * uhat

    u_new = SpectralField.from_freq(grid, uhat)
    shat1 = _dealias(grid, np.fft.fftn(np.abs(u_new.phys()) ** 2) / grid.n**3, dealias)
    phase = ph["wave_full"]
    source = 0.5 * dt * 1j * alpha * grid.kk * (phase * shat0 + shat1) * h_scale
    v_new = SpectralField.from_freq(grid, phase * vhat + source)
    return u_new, v_new


def step_cubic_nls(u: SpectralField, dt: float, dealias: bool = True) -> SpectralField:
    """Strang step of the focusing cubic NLS: i u_t + Delta u = -|u|^2 u."""
    grid = u.grid
    ph = _phases(grid, dt)["schrodinger_half"]
    uhat = ph * u.freq()
    u_phys = np.fft.ifftn(uhat) * grid.n**3
    u_phys = np.exp(1j * dt * np.abs(u_phys) ** 2) * u_phys
    uhat = _dealias(grid, np.fft.fftn(u_phys) / grid.n**3, dealias)
    uhat = ph * uhat
    return SpectralField.from_freq(grid, uhat)


def lawson_rk4_schrodinger(uhat: np.ndarray, grid: Grid, t: float, dt: float,
                           rhs, dealias: bool = True) -> np.ndarray:
    """Lawson RK4 for u_t = i Delta u + rhs(t, u); rhs maps (t, uhat) -> array.

    Exact e^{i s Delta} propagation between stages; fourth order in the
    Schroedinger substep when rhs is smooth in time.
    """
    ph = _phases(grid, dt)
    e_half, e_full = ph["schrodinger_half"], ph["schrodinger_full"]
    k1 = rhs(t, uhat)
    k2 = rhs(t + 0.5 * dt, e_half * (uhat + 0.5 * dt * k1))
    k3 = rhs(t + 0.5 * dt, e_half * uhat + 0.5 * dt * k2)
    k4 = rhs(t + dt, e_full * uhat + dt * e_half * k3)
    out = e_full * uhat + (dt / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)
    return _dealias(grid, out, dealias)


def _random_rhs(grid: Grid, coeffs, dealias: bool, use_real_part: bool,
                forcing=None):
    """Nonlinearity of the random system as a Lawson-compatible rhs."""
    kcomp = [grid.k_component(j) for j in range(3)]

    def rhs(t, uhat):
        v_phys, b_phys, c_phys, tw_phys = coeffs(t)
        u_phys = np.fft.ifftn(uhat) * grid.n**3
        pot = np.real(v_phys) if use_real_part else v_phys
        acc = pot * u_phys
        if b_phys is not None:
            for j in range(3):
                du = np.fft.ifftn(1j * kcomp[j] * uhat) * grid.n**3
                acc -= b_phys[j] * du
        if c_phys is not None:
            acc -= c_phys * u_phys
        if tw_phys is not None:
            acc += (np.real(tw_phys) if use_real_part else tw_phys) * u_phys
        out = -1j * np.fft.fftn(acc) / grid.n**3
        if forcing is not None:
            out = out + forcing(t)
        return _dealias(grid, out, dealias)

    return rhs


def step_random(u: SpectralField, v: SpectralField, noise: NoiseRealization,
                noise_index: int, cfg: IntegratorConfig, alpha: float = 1.0):
    """One Lawson-RK4 step of the rescaled system.  cfg.dt must equal twice
    the noise mesh step so that stage times land on the mesh."""
    grid = u.grid
    dt = cfg.dt
    stride = int(round(dt / noise.dt))
    if abs(stride * noise.dt - dt) > 1e-12 or stride % 2:
        raise ValueError("cfg.dt must be an even multiple of the noise mesh step")
    half = stride // 2
    t0 = noise_index * noise.dt

    uhat, vhat = u.freq(), v.freq()
    shat0 = _dealias(grid, np.fft.fftn(np.abs(u.phys()) ** 2) / grid.n**3, cfg.dealias)

    idx = {t0: noise_index, t0 + 0.5 * dt: noise_index + half,
           t0 + dt: noise_index + stride}
    cache = {}

    def coeffs(t):
        i = idx[min(idx, key=lambda s: abs(s - t))]
        if i not in cache:
            v_phys = np.fft.ifftn(_wave_stage(grid, vhat, shat0, alpha,
                                              (i - noise_index) * noise.dt)) * grid.n**3
            b, c, tw = noise.coefficient_fields(i)
            cache[i] = (v_phys, b, c, tw)
        return cache[i]

    rhs = _random_rhs(grid, coeffs, cfg.dealias, cfg.use_real_part)
    uhat_new = lawson_rk4_schrodinger(uhat, grid, t0, dt, rhs, cfg.dealias)

    u_new = SpectralField.from_freq(grid, uhat_new)
    shat1 = _dealias(grid, np.fft.fftn(np.abs(u_new.phys()) ** 2) / grid.n**3, cfg.dealias)
    phase = _phases(grid, dt, alpha)["wave_full"]
    source = 0.5 * dt * 1j * alpha * grid.kk * (phase * shat0 + shat1)
    v_new = SpectralField.from_freq(grid, phase * vhat + source)
    return u_new, v_new


def step_ito(X: SpectralField, Y: SpectralField, noise: NoiseRealization,
             noise_index: int, cfg: IntegratorConfig):
    """Euler-Maruyama step of the Ito system: exponential linear flow,
    explicit nonlinearity and -mu X drift, left-point noise increments."""
    grid = X.grid
    dt = cfg.dt
    if abs(noise.dt - dt) > 1e-12:
        raise ValueError("Ito stepping requires the noise mesh at the solver dt")
    x = X.phys()
    y_re = np.real(Y.phys())
    drift = -1j * y_re * x - noise.mu * x
    incr = x * noise.dW1(noise_index)
    xhat = np.fft.fftn(x + dt * drift + incr) / grid.n**3
    xhat = _phases(grid, dt)["schrodinger_full"] * _dealias(grid, xhat, cfg.dealias)

    shat = _dealias(grid, np.fft.fftn(np.abs(x) ** 2) / grid.n**3, cfg.dealias)
    yhat = Y.freq() + 1j * dt * grid.kk * shat
    if noise.basis.n_wave:
        dw2 = np.tensordot(1j * noise._wbeta_inc(noise_index),
                           noise._shared["wave_hat"], axes=1)
        yhat = yhat - 1j * dw2
    yhat = _phases(grid, dt)["wave_full"] * yhat
    return (SpectralField.from_freq(grid, xhat),
            SpectralField.from_freq(grid, yhat))


def step_nonconservative(z: SpectralField, v: SpectralField,
                         noise: NoiseRealization, noise_index: int,
                         cfg: IntegratorConfig):
    """Strang step of the damped system i z_t + Delta z = Re(v) z,
    i v_t + |nabla| v = -h |nabla| |z|^2, with h evaluated mid-step."""
    stride = int(round(cfg.dt / noise.dt))
    h0 = noise.geometric_bm(noise_index)
    h1 = noise.geometric_bm(noise_index + stride)
    h_mid = float(np.sqrt(h0 * h1))
    return step_deterministic(z, v, cfg.dt, alpha=1.0, dealias=cfg.dealias,
                              h_scale=h_mid)


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------


def _entry(cfg, *fields):
    """Solvers operate on the dealias band: project initial data onto it so
    the discrete dynamics and the residual evaluators share one phase space."""
    if not cfg.dealias:
        return fields if len(fields) > 1 else fields[0]
    out = tuple(SpectralField.from_freq(f.grid, f.freq() * f.grid.dealias_mask)
                for f in fields)
    return out if len(out) > 1 else out[0]

def _require_pathwise_scheme(cfg: IntegratorConfig):
    # Euler-Maruyama only makes sense for the Ito gauge
    if cfg.scheme == "euler_maruyama":
        raise ValueError("euler_maruyama applies to the Ito formulation only")


def _n_steps(T: float, dt: float) -> int:
    n = T / dt
    if abs(n - round(n)) > 1e-8:
        raise ValueError(f"T must be a multiple of dt (T={T}, dt={dt})")
    return int(round(n))


def _save_final(traj, t, u, v):
    if t > 0 and abs(traj.times[-1] - t) > 1e-12:
        traj.save(t, u, v)


def solve_deterministic(u0: SpectralField, v0: SpectralField, T: float,
                        cfg: IntegratorConfig, alpha: float = 1.0) -> Trajectory:
    _require_pathwise_scheme(cfg)
    traj = Trajectory(gauge=Gauge.RANDOM, alpha=alpha)
    u, v = _entry(cfg, u0, v0)
    initial = u.h1() + v.l2()
    traj.save(0.0, u, v)
    t = 0.0
    for k in range(_n_steps(T, cfg.dt)):
        u, v = step_deterministic(u, v, cfg.dt, alpha, cfg.dealias)
        t = (k + 1) * cfg.dt
        if monitor_blow_up(u, v, initial, cfg.threshold_factor):
            traj.blow_up, traj.blow_up_time = True, t
            traj.save(t, u, v)
            break
        if (k + 1) % cfg.save_every == 0:
            traj.save(t, u, v)
    _save_final(traj, t, u, v)
    return traj


def solve_cubic_nls(u0: SpectralField, T: float, cfg: IntegratorConfig) -> Trajectory:
    _require_pathwise_scheme(cfg)
    traj = Trajectory(gauge=Gauge.RANDOM)
    u = _entry(cfg, u0)
    zero = SpectralField.zero(u0.grid)
    initial = u.h1()
    traj.save(0.0, u, zero)
    t = 0.0
    for k in range(_n_steps(T, cfg.dt)):
        u = step_cubic_nls(u, cfg.dt, cfg.dealias)
        t = (k + 1) * cfg.dt
        if not np.isfinite(u.h1()) or u.h1() > cfg.threshold_factor * initial:
            traj.blow_up, traj.blow_up_time = True, t
            traj.save(t, u, zero)
            break
        if (k + 1) % cfg.save_every == 0:
            traj.save(t, u, zero)
    _save_final(traj, t, u, zero)
    return traj


def solve_random(u0: SpectralField, v0: SpectralField, noise: NoiseRealization,
                 T: float, cfg: IntegratorConfig, alpha: float = 1.0,
                 stop=None) -> Trajectory:
    """Advance the rescaled (or sigma-shifted, via a shifted noise view)
    system; stop(t_local, u, v) may end the segment early."""
    _require_pathwise_scheme(cfg)
    traj = Trajectory(gauge=Gauge.RANDOM, alpha=alpha)
    u, v = _entry(cfg, u0, v0)
    stride = int(round(cfg.dt / noise.dt))
    initial = u.h1() + v.l2()
    traj.save(0.0, u, v)
    t = 0.0
    for k in range(_n_steps(T, cfg.dt)):
        u, v = step_random(u, v, noise, k * stride, cfg, alpha)
        t = (k + 1) * cfg.dt
        if monitor_blow_up(u, v, initial, cfg.threshold_factor):
            traj.blow_up, traj.blow_up_time = True, t
            traj.save(t, u, v)
            break
        if (k + 1) % cfg.save_every == 0:
            traj.save(t, u, v)
        if (cfg.residual_check_every > 0 and cfg.save_every == 1
                and (k + 1) % cfg.residual_check_every == 0
                and len(traj.times) % 2 == 1):
            traj.residual_checks.append(
                (t, residual_mild(traj, noise, cfg.use_real_part)))
        if stop is not None and stop(t, u, v):
            break
    _save_final(traj, t, u, v)
    return traj


def solve_ito(X0: SpectralField, Y0: SpectralField, noise: NoiseRealization,
              T: float, cfg: IntegratorConfig) -> Trajectory:
    traj = Trajectory(gauge=Gauge.ITO)
    X, Y = _entry(cfg, X0, Y0)
    initial = X.h1() + Y.l2()
    traj.save(0.0, X, Y)
    t = 0.0
    for k in range(_n_steps(T, cfg.dt)):
        X, Y = step_ito(X, Y, noise, k, cfg)
        t = (k + 1) * cfg.dt
        if monitor_blow_up(X, Y, initial, cfg.threshold_factor):
            traj.blow_up, traj.blow_up_time = True, t
            traj.save(t, X, Y)
            break
        if (k + 1) % cfg.save_every == 0:
            traj.save(t, X, Y)
    _save_final(traj, t, X, Y)
    return traj


def solve_nonconservative(z0: SpectralField, v0: SpectralField,
                          noise: NoiseRealization, T: float,
                          cfg: IntegratorConfig) -> Trajectory:
    _require_pathwise_scheme(cfg)
    traj = Trajectory(gauge=Gauge.NONCONSERVATIVE)
    z, v = _entry(cfg, z0, v0)
    stride = int(round(cfg.dt / noise.dt))
    initial = z.h1() + v.l2()
    traj.save(0.0, z, v)
    t = 0.0
    for k in range(_n_steps(T, cfg.dt)):
        z, v = step_nonconservative(z, v, noise, k * stride, cfg)
        t = (k + 1) * cfg.dt
        if monitor_blow_up(z, v, initial, cfg.threshold_factor):
            traj.blow_up, traj.blow_up_time = True, t
            traj.save(t, z, v)
            break
        if (k + 1) % cfg.save_every == 0:
            traj.save(t, z, v)
    _save_final(traj, t, z, v)
    return traj


def solve_pathwise(X0: SpectralField, Y0: SpectralField, noise: NoiseRealization,
                   T: float, cfg: IntegratorConfig, c0: float = 0.5,
                   eps_schedule=default_eps_star) -> Trajectory:
    """Iterated refined-rescale / solve / glue construction of Theorem-1.1 type.

    Monitors the increment smallness W*_sigma and the elapsed segment time
    against eps_star; each segment solves the sigma-shifted system and is
    glued back pathwise.  Returns the trajectory in the random gauge with the
    sigma sequence recorded.
    """
    _require_pathwise_scheme(cfg)
    traj = Trajectory(gauge=Gauge.RANDOM)
    u, v = _entry(cfg, X0, Y0)  # W1(0) = 0, T_0 = 0: random gauge = Ito data at t = 0
    stride = int(round(cfg.dt / noise.dt))
    initial = u.h1() + v.l2()
    traj.save(0.0, u, v)
    t_global = 0.0

    while t_global < T - 1e-12 and not traj.blow_up:
        sigma_idx = int(round(t_global / noise.dt))
        view = noise.shifted(sigma_idx)
        u_s, v_s = refined_rescale(u, v, noise, sigma_idx)
        eps = eps_schedule(u_s.h1(), v_s.l2(), c0)

        t_local = 0.0
        while t_global + t_local < T - 1e-12:
            k = int(round(t_local / cfg.dt))
            u_s, v_s = step_random(u_s, v_s, view, k * stride, cfg)
            t_local += cfg.dt
            u, v = refined_rescale_inverse(u_s, v_s, noise, sigma_idx, t_local)
            t = t_global + t_local
            if monitor_blow_up(u, v, initial, cfg.threshold_factor):
                traj.blow_up, traj.blow_up_time = True, t
                traj.save(t, u, v)
                break
            if int(round(t / cfg.dt)) % cfg.save_every == 0:
                traj.save(t, u, v)
            if t_local >= eps - 1e-12 or view.w_star(int(round(t_local / noise.dt))) >= eps:
                break
        t_global += t_local
        if t_local > 0 and t_global < T - 1e-12 and not traj.blow_up:
            traj.sigma_sequence.append(t_global)
        if t_local == 0.0:
            raise RuntimeError("pathwise solver made no progress (eps_star too small)")
    _save_final(traj, t_global, u, v)
    return traj


# ---------------------------------------------------------------------------
# residual evaluators (mild, normal form, weak)
# ---------------------------------------------------------------------------

def _simpson_weights(m: int, h: float) -> np.ndarray:
    if m % 2:
        raise ValueError("Simpson quadrature needs an even number of intervals")
    w = np.ones(m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def _uniform_times(times) -> float:
    dt = np.diff(times)
    if dt.size == 0 or np.abs(dt - dt[0]).max() > 1e-9 * max(dt[0], 1e-12):
        raise ValueError("residual evaluation needs uniform save times")
    return float(dt[0])


def _noise_fields_at(noise, t, grid, need_w2):
    i = int(round(t / noise.dt))
    if abs(i * noise.dt - t) > 1e-8:
        raise ValueError("save time off the noise mesh")
    return noise.coefficient_fields(i)


def _schrodinger_rhs_field(u, v, b, c, tw, use_real_part, grid, dealias_on=True):
    """G = (Re) v u - b.grad u - c u + (Re) T u as a physical-space array."""
    u_phys = u.phys()
    pot = np.real(v.phys()) if use_real_part else v.phys()
    acc = pot * u_phys
    if b is not None:
        uhat = u.freq()
        for j in range(3):
            acc -= b[j] * (np.fft.ifftn(1j * grid.k_component(j) * uhat) * grid.n**3)
    if c is not None:
        acc -= c * u_phys
    if tw is not None:
        acc += (np.real(tw) if use_real_part else tw) * u_phys
    out = np.fft.fftn(acc) / grid.n**3
    return SpectralField.from_freq(grid, _dealias(grid, out, dealias_on))


def residual_mild(traj: Trajectory, noise: NoiseRealization,
                  use_real_part: bool = True) -> float:
    """L2 defect of the Duhamel (mild) formulation at the final save time,
    by composite Simpson over the save mesh."""
    times, us, vs = traj.times, traj.u, traj.v
    h = _uniform_times(times)
    m = len(times) - 1
    w = _simpson_weights(m, h)
    grid = us[0].grid
    t_end = times[-1]

    integral = np.zeros((grid.n,) * 3, dtype=np.complex128)
    for k, s in enumerate(times):
        b, c, tw = _noise_fields_at(noise, s, grid, noise.basis.n_wave > 0)
        G = _schrodinger_rhs_field(us[k], vs[k], b, c, tw, use_real_part, grid)
        integral += w[k] * (np.exp(-1j * (t_end - s) * grid.k2) * G.freq())
    defect_u = us[-1].freq() - np.exp(-1j * t_end * grid.k2) * us[0].freq() \
        + 1j * integral

    integral_v = np.zeros_like(integral)
    for k, s in enumerate(times):
        shat = _dealias(grid, np.fft.fftn(np.abs(us[k].phys()) ** 2) / grid.n**3, True)
        integral_v += w[k] * (np.exp(1j * (t_end - s) * grid.kk) * grid.kk * shat)
    defect_v = vs[-1].freq() - np.exp(1j * t_end * grid.kk) * vs[0].freq() \
        - 1j * integral_v

    du = SpectralField.from_freq(grid, defect_u).l2()
    dv = SpectralField.from_freq(grid, defect_v).l2()
    return float(du + dv)


def residual_normal_form(traj: Trajectory, noise: NoiseRealization,
                         K: int = 32, use_real_part: bool = False) -> float:
    """L2 defect of the normal-form formulation (all seven Schroedinger terms
    plus the wave line) at the final save time."""
    params = DyadicParams(K=K)
    times, us, vs = traj.times, traj.u, traj.v
    h = _uniform_times(times)
    w = _simpson_weights(len(times) - 1, h)
    grid = us[0].grid
    t_end = times[-1]
    ob = omega_b_operator(grid, params)

    def nabla_sq(uf):
        shat = _dealias(grid, np.fft.fftn(np.abs(uf.phys()) ** 2) / grid.n**3, True)
        return SpectralField.from_freq(grid, grid.kk * shat)

    integral = np.zeros((grid.n,) * 3, dtype=np.complex128)
    for k, s in enumerate(times):
        b, c, tw = _noise_fields_at(noise, s, grid, noise.basis.n_wave > 0)
        u_k, v_k = us[k], vs[k]
        vuR = paraproduct(v_k, u_k, "R", params)
        G = _schrodinger_rhs_field(u_k, v_k, b, c, tw, use_real_part, grid)
        vu = SpectralField.from_freq(
            grid, _dealias(grid, np.fft.fftn(
                (np.real(v_k.phys()) if use_real_part else v_k.phys())
                * u_k.phys()) / grid.n**3, True))
        P = vu - G  # b.grad u + cu - T u
        term = (-1j) * vuR.freq() + 1j * P.freq() \
            + 1j * ob.apply(nabla_sq(u_k), u_k).freq() \
            + 1j * ob.apply(v_k, P - vu).freq()
        integral += w[k] * (np.exp(-1j * (t_end - s) * grid.k2) * term)

    boundary = np.exp(-1j * t_end * grid.k2) * (us[0].freq()
                                                + ob.apply(vs[0], us[0]).freq())
    defect_u = us[-1].freq() - boundary + ob.apply(vs[-1], us[-1]).freq() - integral

    integral_v = np.zeros_like(integral)
    for k, s in enumerate(times):
        integral_v += w[k] * (np.exp(1j * (t_end - s) * grid.kk)
                              * nabla_sq(us[k]).freq())
    defect_v = vs[-1].freq() - np.exp(1j * t_end * grid.kk) * vs[0].freq() \
        - 1j * integral_v

    du = SpectralField.from_freq(grid, defect_u).l2()
    dv = SpectralField.from_freq(grid, defect_v).l2()
    return float(du + dv)


def residual_weak(traj: Trajectory, noise: NoiseRealization, n_test: int = 6,
                  seed: int = 7, use_real_part: bool = True) -> float:
    """Discrete weak-form defect against a bank of band-limited test functions;
    returns the worst normalized pairing defect."""
    times, us, vs = traj.times, traj.u, traj.v
    h = _uniform_times(times)
    w = _simpson_weights(len(times) - 1, h)
    grid = us[0].grid
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_test):
        chat = (rng.standard_normal((grid.n,) * 3)
                + 1j * rng.standard_normal((grid.n,) * 3))
        chat *= grid.dealias_mask * (grid.k2 <= (0.5 * grid.kmax) ** 2)
        phi = SpectralField.from_freq(grid, chat)
        phi_norm = phi.h1()

        def pair(f_hat):
            return grid.volume * np.vdot(phi.freq(), f_hat)

        acc = 0.0 + 0.0j
        for k, s in enumerate(times):
            b, c, tw = _noise_fields_at(noise, s, grid, noise.basis.n_wave > 0)
            G = _schrodinger_rhs_field(us[k], vs[k], b, c, tw, use_real_part, grid)
            integrand = -1j * grid.k2 * us[k].freq() - 1j * G.freq()
            acc += w[k] * pair(integrand)
        defect = pair(us[-1].freq()) - pair(us[0].freq()) - acc
        worst = max(worst, abs(defect) / (phi_norm + 1e-300))
    return float(worst)


def normal_form_commutator_defect(v: SpectralField, u: SpectralField,
                                  params: DyadicParams | None = None) -> float:
    """Static part of the identity
    (d/dt - i Delta) Omega_b(v, u) = i (vu)_XL + Omega_b((d/dt - i|nabla|)v, u)
                                     + Omega_b(v, (d/dt - i Delta)u):
    the time derivatives cancel by bilinearity, leaving
    -i Delta Omega_b(v,u) = i (vu)_XL - i Omega_b(|nabla| v, u) - i Omega_b(v, Delta u),
    which holds mode by mode; returns the L2 defect."""
    params = params or DyadicParams()
    grid = u.grid
    ob = omega_b_operator(grid, params)
    lhs = SpectralField.from_freq(grid, 1j * grid.k2 * ob.apply(v, u).freq())
    nv = SpectralField.from_freq(grid, grid.kk * v.freq())
    lapu = SpectralField.from_freq(grid, -grid.k2 * u.freq())
    rhs = (1j * paraproduct(v, u, "XL", params)
           - 1j * ob.apply(nv, u)
           + 1j * ob.apply(v, lapu))
    return (lhs - rhs).l2()


# ---------------------------------------------------------------------------
# subsonic limit
# ---------------------------------------------------------------------------

def subsonic_compare(u0: SpectralField, alphas, T: float, cfg: IntegratorConfig,
                     well_prepared: bool = True):
    """Table of ||u_alpha(T) - u_NLS(T)||_L2 over the requested alpha ladder."""
    grid = u0.grid
    nls = solve_cubic_nls(u0, T, cfg)
    u_ref = nls.u[-1]
    rows = []
    for a in alphas:
        if well_prepared:
            s = np.abs(u0.phys()) ** 2
            v0 = SpectralField.from_freq(
                grid, _dealias(grid, np.fft.fftn(-s) / grid.n**3, cfg.dealias))
        else:
            v0 = SpectralField.zero(grid)
        zk = solve_deterministic(u0, v0, T, cfg, alpha=a)
        rows.append((float(a), float((zk.u[-1] - u_ref).l2())))
    return rows
