"""Gauge changes, refined rescaling, gluing, the free-wave split."""

import numpy as np
import pytest

from stozak.grids import Grid, SpectralField, half_wave
from stozak.noise import NoiseBasis, NoiseModeError, sample_path
from stozak.transforms import (Gauge, GaugeError, GlueError, ZakharovState,
                               default_eps_star, free_wave_split,
                               from_nonconservative_gauge, from_random_gauge,
                               glue, refined_rescale, refined_rescale_inverse,
                               to_nonconservative_gauge, to_random_gauge)
from tests.conftest import random_field


@pytest.fixture(scope="module")
def setup16():
    g = Grid(16)
    basis = NoiseBasis.gaussian(g, n_schrodinger=3, n_wave=2,
                                amplitude=0.3, wave_amplitude=0.15)
    nz = sample_path(basis, T=0.4, dt=0.02, seed=17)
    return g, basis, nz


class TestConservativeGauge:
    def test_zero_noise_identity(self, grid16, rng):
        nz = sample_path(NoiseBasis.zero(grid16), T=0.1, dt=0.02, seed=0)
        X, Y = random_field(grid16, rng), random_field(grid16, rng)
        st = ZakharovState(0.06, X, Y, 1.0, Gauge.ITO)
        out = to_random_gauge(st, nz)
        assert (out.u - X).l2() < 1e-14
        assert (out.v - Y).l2() < 1e-14

    def test_round_trip(self, setup16, rng):
        g, basis, nz = setup16
        X, Y = random_field(g, rng), random_field(g, rng)
        st = ZakharovState(0.2, X, Y, 1.0, Gauge.ITO)
        back = from_random_gauge(to_random_gauge(st, nz), nz)
        assert (back.u - X).l2() < 1e-12 * X.l2()
        assert (back.v - Y).l2() < 1e-12 * max(Y.l2(), 1.0)

    def test_modulus_preserved(self, setup16, rng):
        g, basis, nz = setup16
        X = random_field(g, rng)
        st = ZakharovState(0.3, X, SpectralField.zero(g), 1.0, Gauge.ITO)
        u = to_random_gauge(st, nz).u
        assert np.abs(np.abs(u.phys()) - np.abs(X.phys())).max() < 1e-12
        assert abs(u.l2() - X.l2()) < 1e-12 * X.l2()

    def test_single_mode_hand_value(self, grid16):
        g = grid16
        phi = np.ones((g.n,) * 3)  # constant real mode
        basis = NoiseBasis(g, [phi], [])
        nz = sample_path(basis, T=0.1, dt=0.02, seed=3)
        X = SpectralField.from_phys(g, 0.7 * np.ones((g.n,) * 3, complex))
        st = ZakharovState(0.1, X, SpectralField.zero(g), 1.0, Gauge.ITO)
        u = to_random_gauge(st, nz).u
        beta = nz.path.beta[5, 0]
        expect = np.exp(-1j * beta) * 0.7
        assert np.abs(u.phys() - expect).max() < 1e-13

    def test_gauge_mismatch(self, setup16, rng):
        g, _, nz = setup16
        st = ZakharovState(0.0, random_field(g, rng), random_field(g, rng),
                           1.0, Gauge.RANDOM)
        with pytest.raises(GaugeError):
            to_random_gauge(st, nz)

    def test_off_mesh_time(self, setup16, rng):
        g, _, nz = setup16
        st = ZakharovState(0.0314159, random_field(g, rng),
                           random_field(g, rng), 1.0, Gauge.ITO)
        with pytest.raises(ValueError):
            to_random_gauge(st, nz)


class TestRefinedRescale:
    def test_sigma_zero_identity(self, setup16, rng):
        g, _, nz = setup16
        u, v = random_field(g, rng), random_field(g, rng)
        u_s, v_s = refined_rescale(u, v, nz, sigma_index=0)
        assert (u_s - u).l2() < 1e-14
        assert (v_s - v).l2() < 1e-14

    def test_round_trip(self, setup16, rng):
        g, _, nz = setup16
        u, v = random_field(g, rng), random_field(g, rng)
        for t_local in (0.0, 0.1):
            u_s, v_s = refined_rescale(u, v, nz, 10, t_local)
            u2, v2 = refined_rescale_inverse(u_s, v_s, nz, 10, t_local)
            assert (u2 - u).l2() < 1e-12 * u.l2()
            assert (v2 - v).l2() < 1e-12 * max(v.l2(), 1.0)

    def test_zero_noise_pure_shift(self, grid16, rng):
        nz = sample_path(NoiseBasis.zero(grid16), T=0.2, dt=0.02, seed=0)
        u, v = random_field(grid16, rng), random_field(grid16, rng)
        u_s, v_s = refined_rescale(u, v, nz, 5, t_local=0.1)
        assert (u_s - u).l2() < 1e-14
        assert (v_s - v).l2() < 1e-14


class TestGlue:
    def _segments(self, g, nz, rng, n1=4, n2=3):
        dt = nz.dt
        t1 = [k * dt for k in range(n1 + 1)]
        u1 = [random_field(g, rng) for _ in t1]
        v1 = [random_field(g, rng) for _ in t1]
        sigma_idx = n1
        u_m, v_m = refined_rescale(u1[-1], v1[-1], nz, sigma_idx)
        t2 = [k * dt for k in range(n2 + 1)]
        u2 = [u_m] + [random_field(g, rng) for _ in range(n2)]
        v2 = [v_m] + [random_field(g, rng) for _ in range(n2)]
        return (t1, u1, v1), (t2, u2, v2), sigma_idx

    def test_zero_length_second_segment(self, setup16, rng):
        g, _, nz = setup16
        seg1, _, sigma = self._segments(g, nz, rng)
        out = glue(seg1, ([], [], []), nz, sigma)
        assert out is seg1

    def test_continuity_and_inverse(self, setup16, rng):
        g, _, nz = setup16
        seg1, seg2, sigma = self._segments(g, nz, rng)
        times, us, vs = glue(seg1, seg2, nz, sigma)
        assert len(times) == len(seg1[0]) + len(seg2[0]) - 1
        # value at sigma comes from segment 1; the inverse map of the matched
        # segment-2 start must agree with it
        u_back, v_back = refined_rescale_inverse(seg2[1][0], seg2[2][0], nz, sigma)
        assert (u_back - seg1[1][-1]).l2() < 1e-12 * seg1[1][-1].l2()
        assert (v_back - seg1[2][-1]).l2() < 1e-12 * seg1[2][-1].l2()

    def test_matching_violation_raises(self, setup16, rng):
        g, _, nz = setup16
        seg1, seg2, sigma = self._segments(g, nz, rng)
        bad_u2 = [seg2[1][0] + random_field(g, rng) * 1e-3] + seg2[1][1:]
        with pytest.raises(GlueError):
            glue(seg1, (seg2[0], bad_u2, seg2[2]), nz, sigma)

    def test_zero_noise_concatenation(self, grid16, rng):
        nz = sample_path(NoiseBasis.zero(grid16), T=0.4, dt=0.02, seed=0)
        seg1, seg2, sigma = self._segments(grid16, nz, rng)
        times, us, vs = glue(seg1, seg2, nz, sigma)
        # with zero noise the sigma-gauge is the identity: pure concatenation
        assert (us[len(seg1[0])] - seg2[1][1]).l2() < 1e-13


class TestNonconservativeGauge:
    def test_requires_mode(self, setup16, rng):
        g, _, nz = setup16
        st = ZakharovState(0.1, random_field(g, rng), random_field(g, rng),
                           1.0, Gauge.ITO)
        with pytest.raises(NoiseModeError):
            to_nonconservative_gauge(st, nz)

    def test_real_phi_reduces_to_conservative(self, grid16, rng):
        # Im phi = 0 with re_phi != 0: hat_mu = 0 and z = e^{-W1} X
        basis = NoiseBasis.nonconservative(grid16, im_phi=0.0, re_phi=0.8)
        nz = sample_path(basis, T=0.1, dt=0.02, seed=4)
        assert np.abs(basis.hat_mu()).max() < 1e-14
        X = random_field(grid16, rng)
        st = ZakharovState(0.1, X, SpectralField.zero(grid16), 1.0, Gauge.ITO)
        z = to_nonconservative_gauge(st, nz).u
        u = to_random_gauge(
            ZakharovState(0.1, X, SpectralField.zero(grid16), 1.0, Gauge.ITO),
            nz).u
        assert (z - u).l2() < 1e-13

    def test_modulus_identity(self, grid16, rng):
        # |z| = e^{Re(hat_mu) t + Im(phi1) beta} |X| pointwise
        a = 2.0
        basis = NoiseBasis.nonconservative(grid16, im_phi=a)
        nz = sample_path(basis, T=0.2, dt=0.02, seed=5)
        X = random_field(grid16, rng)
        t, i = 0.2, 10
        st = ZakharovState(t, X, SpectralField.zero(grid16), 1.0, Gauge.ITO)
        z = to_nonconservative_gauge(st, nz).u
        beta = nz.path.beta[i, 0]
        factor = np.exp(a * a * t + a * beta)
        assert np.abs(np.abs(z.phys()) - factor * np.abs(X.phys())).max() \
            < 1e-11 * factor

    def test_h_consistency_with_gauge(self, grid16, rng):
        # h |z|^2 = e^{2 Re(W1 - hat_mu t)} |z|^2 = |X|^2 exactly
        a = 1.5
        basis = NoiseBasis.nonconservative(grid16, im_phi=a)
        nz = sample_path(basis, T=0.2, dt=0.02, seed=6)
        X = random_field(grid16, rng)
        t, i = 0.12, 6
        st = ZakharovState(t, X, SpectralField.zero(grid16), 1.0, Gauge.ITO)
        z = to_nonconservative_gauge(st, nz).u
        h = nz.geometric_bm(i)
        lhs = h * np.abs(z.phys()) ** 2
        assert np.abs(lhs - np.abs(X.phys()) ** 2).max() \
            < 1e-12 * np.abs(X.phys() ** 2).max() / min(h, 1.0)

    def test_round_trip(self, grid16, rng):
        basis = NoiseBasis.nonconservative(grid16, im_phi=2.0, re_phi=0.3)
        nz = sample_path(basis, T=0.2, dt=0.02, seed=7)
        X, Y = random_field(grid16, rng), random_field(grid16, rng)
        st = ZakharovState(0.14, X, Y, 1.0, Gauge.ITO)
        back = from_nonconservative_gauge(to_nonconservative_gauge(st, nz), nz)
        assert (back.u - X).l2() < 1e-11 * X.l2()
        assert (back.v - Y).l2() < 1e-13 * max(Y.l2(), 1.0)


class TestFreeWaveSplit:
    def test_t_zero(self, grid16, rng):
        v, Y0 = random_field(grid16, rng), random_field(grid16, rng)
        v1, v2 = free_wave_split(v, Y0, 0.0)
        assert (v1 - Y0).l2() < 1e-14
        assert (v2 - (v - Y0)).l2() < 1e-14

    def test_zero_initial_wave(self, grid16, rng):
        v = random_field(grid16, rng)
        v1, v2 = free_wave_split(v, SpectralField.zero(grid16), 0.3)
        assert v1.l2() == 0.0
        assert (v2 - v).l2() < 1e-14

    def test_sum_exact_and_semigroup_residual(self, grid16, rng):
        v, Y0 = random_field(grid16, rng), random_field(grid16, rng)
        t, dt = 0.4, 0.05
        v1, v2 = free_wave_split(v, Y0, t)
        assert ((v1 + v2) - v).l2() < 1e-13 * v.l2()
        # (d/dt - i |nabla|) v1 = 0 discretely: stepping by the exact
        # semigroup reproduces v1(t + dt)
        v1_next, _ = free_wave_split(v, Y0, t + dt)
        assert (half_wave(v1, dt) - v1_next).l2() < 1e-12 * max(v1.l2(), 1.0)


def test_eps_star_decreasing():
    assert default_eps_star(1.0, 1.0) > default_eps_star(2.0, 1.0)
    assert default_eps_star(1.0, 1.0) > default_eps_star(1.0, 3.0)
    assert np.isclose(default_eps_star(5.0, 5.0, c0=2.0),
                      4.0 * default_eps_star(5.0, 5.0))
