"""Gauge changes between the Ito, random, and non-conservative formulations.

The conservative rescaling u = e^{-W1} X, v = Y - T_t(W2) converts the Ito
system into a pathwise random PDE; the refined version restarts the gauge at
a stopping index sigma, and glue() concatenates a base trajectory with a
sigma-shifted continuation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .grids import SpectralField, half_wave
from .noise import NoiseModeError, NoiseRealization


class Gauge(Enum):
    ITO = "ito"                      # (X, Y)
    RANDOM = "random"                # (u, v)
    NONCONSERVATIVE = "nonconservative"  # (z, v)


class GaugeError(RuntimeError):
    pass


@dataclass
class ZakharovState:
    """Time, Schroedinger component (H^1), wave component (L^2), wave speed."""

    t: float
    u: SpectralField
    v: SpectralField
    alpha: float = 1.0
    gauge: Gauge = Gauge.RANDOM

    def energy_norm(self) -> float:
        return self.u.h1() + self.v.l2()

    def copy(self) -> "ZakharovState":
        return replace(self, u=self.u.copy(), v=self.v.copy())


def _mesh_index(noise: NoiseRealization, t: float) -> int:
    i = t / noise.dt
    if abs(i - round(i)) > 1e-8:
        raise ValueError(f"time {t} is not on the noise mesh (dt={noise.dt})")
    return int(round(i))


def to_random_gauge(state: ZakharovState, noise: NoiseRealization) -> ZakharovState:
    """(X, Y) -> (u, v) = (e^{-W1} X, Y - T_t(W2)) at the state's time."""
    if state.gauge is not Gauge.ITO:
        raise GaugeError(f"expected ito gauge, got {state.gauge}")
    i = _mesh_index(noise, state.t)
    g = state.u.grid
    u = SpectralField.from_phys(g, np.exp(-noise.W1(i)) * state.u.phys())
    v = state.v - noise.stochastic_convolution(i)
    return ZakharovState(state.t, u, v, state.alpha, Gauge.RANDOM)


def from_random_gauge(state: ZakharovState, noise: NoiseRealization) -> ZakharovState:
    """(u, v) -> (X, Y) = (e^{W1} u, v + T_t(W2))."""
    if state.gauge is not Gauge.RANDOM:
        raise GaugeError(f"expected random gauge, got {state.gauge}")
    i = _mesh_index(noise, state.t)
    g = state.u.grid
    X = SpectralField.from_phys(g, np.exp(noise.W1(i)) * state.u.phys())
    Y = state.v + noise.stochastic_convolution(i)
    return ZakharovState(state.t, X, Y, state.alpha, Gauge.ITO)


def refined_rescale(u: SpectralField, v: SpectralField, noise: NoiseRealization,
                    sigma_index: int, t_local: float = 0.0):
    """Forward map of the refined rescaling at stopping index sigma:

        u_sigma(t) = e^{W1(sigma)} u(sigma + t),
        v_sigma(t) = v(sigma + t) + e^{i t |nabla|} T_sigma(W2).

    The fields passed in are u(sigma + t_local), v(sigma + t_local).
    """
    g = u.grid
    w1s = noise.W1(sigma_index)
    u_s = SpectralField.from_phys(g, np.exp(w1s) * u.phys())
    tw = noise.stochastic_convolution(sigma_index)
    v_s = v + half_wave(tw, t_local)
    return u_s, v_s


def refined_rescale_inverse(u_s: SpectralField, v_s: SpectralField,
                            noise: NoiseRealization, sigma_index: int,
                            t_local: float = 0.0):
    """Inverse map: u(sigma+t) = e^{-W1(sigma)} u_sigma(t),
    v(sigma+t) = v_sigma(t) - e^{i t |nabla|} T_sigma(W2)."""
    g = u_s.grid
    w1s = noise.W1(sigma_index)
    u = SpectralField.from_phys(g, np.exp(-w1s) * u_s.phys())
    tw = noise.stochastic_convolution(sigma_index)
    v = v_s - half_wave(tw, t_local)
    return u, v


class GlueError(RuntimeError):
    def __init__(self, jump: float, tol: float):
        super().__init__(f"matching condition violated at sigma: jump {jump:.3e} > {tol:.3e}")
        self.jump = jump


def glue(segment1, segment2, noise: NoiseRealization, sigma_index: int,
         tol: float = 1e-10):
    """Concatenate a random-gauge trajectory on [0, sigma] with a sigma-gauge
    trajectory on [0, tau]; returns (times, u fields, v fields) on [0, sigma+tau].

    segment1/segment2 are (times, [u...], [v...]) with segment2 in the
    sigma-shifted gauge; the matching condition
    u_sigma(0) = e^{W1(sigma)} u1(sigma), v_sigma(0) = v1(sigma) + T_sigma(W2)
    is enforced within tol.
    """
    t1, u1, v1 = segment1
    t2, u2, v2 = segment2
    if len(t2) == 0 or len(t2) == 1 and t2[0] == 0.0 and len(u2) == 0:
        return segment1
    u_match, v_match = refined_rescale(u1[-1], v1[-1], noise, sigma_index)
    jump = max((u2[0] - u_match).l2(), (v2[0] - v_match).l2())
    if jump > tol:
        raise GlueError(jump, tol)

    times = list(t1)
    us = list(u1)
    vs = list(v1)
    sigma_t = t1[-1]
    for k in range(1, len(t2)):
        u_phys, v_phys = refined_rescale_inverse(u2[k], v2[k], noise,
                                                 sigma_index, t_local=t2[k])
        times.append(sigma_t + t2[k])
        us.append(u_phys)
        vs.append(v_phys)
    return times, us, vs


def to_nonconservative_gauge(state: ZakharovState, noise: NoiseRealization) -> ZakharovState:
    """(X, Y) -> (z, v) = (e^{hat_mu t - W1(t)} X, Y); requires Im phi_1 noise."""
    if state.gauge is not Gauge.ITO:
        raise GaugeError(f"expected ito gauge, got {state.gauge}")
    if noise.basis.conservative:
        raise NoiseModeError("non-conservative gauge requires Im phi_1 != 0")
    i = _mesh_index(noise, state.t)
    g = state.u.grid
    factor = np.exp(noise.hat_mu() * state.t - noise.W1(i))
    z = SpectralField.from_phys(g, factor * state.u.phys())
    return ZakharovState(state.t, z, state.v.copy(), state.alpha, Gauge.NONCONSERVATIVE)


def from_nonconservative_gauge(state: ZakharovState, noise: NoiseRealization) -> ZakharovState:
    if state.gauge is not Gauge.NONCONSERVATIVE:
        raise GaugeError(f"expected nonconservative gauge, got {state.gauge}")
    i = _mesh_index(noise, state.t)
    g = state.u.grid
    factor = np.exp(noise.W1(i) - noise.hat_mu() * state.t)
    X = SpectralField.from_phys(g, factor * state.u.phys())
    return ZakharovState(state.t, X, state.v.copy(), state.alpha, Gauge.ITO)


def free_wave_split(v: SpectralField, Y0: SpectralField, t: float):
    """v = v1 + v2 with v1(t) = e^{i t |nabla|} Y0 the free wave."""
    v1 = half_wave(Y0, t)
    v2 = v - v1
    return v1, v2


def default_eps_star(u_h1: float, v_l2: float, c0: float = 0.5) -> float:
    """Stopping-threshold schedule, decreasing in both norms."""
    return c0 / (1.0 + u_h1 + v_l2) ** 2
