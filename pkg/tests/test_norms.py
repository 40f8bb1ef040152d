"""Lateral and composite space-time norms; estimate probe machinery."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stozak.grids import Grid, SpectralField
from stozak.norms import (SpaceTimeField, free_schrodinger, g_norm,
                          lateral_norm, lebesgue_tx, n1_norm,
                          random_band_limited, s1_norm, sup_hs, x_norm, y_norm)
from stozak.probes import CATALOGUE, probe_estimate
from tests.conftest import random_field


def _const_in_time(field, times):
    data = np.broadcast_to(field.freq()[None], (len(times),) + field.freq().shape)
    return SpaceTimeField(field.grid, np.asarray(times), data.copy())


@pytest.fixture(scope="module")
def times5():
    return np.linspace(0.0, 1.0, 5)


class TestLateral:
    def test_separable_factorization(self, grid16, times5):
        # f(t, x) = a(t) b(x_e) c(x_perp): the norm factorizes
        g = grid16
        x = np.arange(g.n) * g.dx
        a = 1.0 + 0.5 * np.cos(2 * np.pi * times5 / times5[-1])
        b = np.exp(np.sin(2 * np.pi * x / g.length))
        cperp = 1.0 + 0.3 * np.sin(2 * np.pi * x / g.length)
        f_phys = (a[:, None, None, None]
                  * b[None, :, None, None]
                  * cperp[None, None, :, None]
                  * cperp[None, None, None, :])
        data = np.fft.fftn(f_phys, axes=(1, 2, 3)) / g.n**3
        f = SpaceTimeField(g, times5, data)
        p, q = 3.0, 2.0
        val = lateral_norm(f, 0, p, q)
        w = f.time_weights()
        norm_b = (np.sum(np.abs(b) ** p) * g.dx) ** (1 / p)
        inner_ac = (np.sum(w * a**q) * np.sum(
            (np.abs(cperp[:, None] * cperp[None, :]) ** q)) * g.dx**2) ** (1 / q)
        assert np.isclose(val, norm_b * inner_ac, rtol=1e-10)

    def test_slice_indicator(self, grid16, times5):
        g = grid16
        f_phys = np.zeros((5,) + (g.n,) * 3)
        f_phys[:, 3, :, :] = 2.0
        data = np.fft.fftn(f_phys, axes=(1, 2, 3)) / g.n**3
        f = SpaceTimeField(g, times5, data)
        # L^{infty,2}: sup over slices of the L^2(t x transverse) mass
        val = lateral_norm(f, 0, np.inf, 2.0)
        expect = np.sqrt(4.0 * times5[-1] * g.length**2)
        assert np.isclose(val, expect, rtol=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1), axis=st.integers(0, 2),
           pq=st.sampled_from([(1.0, 2.0), (2.0, 2.0), (np.inf, 2.0),
                               (1.0, np.inf), (3.0, 4.0)]))
    def test_triangle_inequality(self, seed, axis, pq):
        g = Grid(8, length=2 * np.pi)
        r = np.random.default_rng(seed)
        t = np.linspace(0, 0.5, 3)
        d1 = (r.standard_normal((3,) + (8,) * 3)
              + 1j * r.standard_normal((3,) + (8,) * 3))
        d2 = (r.standard_normal((3,) + (8,) * 3)
              + 1j * r.standard_normal((3,) + (8,) * 3))
        f1, f2 = SpaceTimeField(g, t, d1), SpaceTimeField(g, t, d2)
        fsum = SpaceTimeField(g, t, d1 + d2)
        p, q = pq
        lhs = lateral_norm(fsum, axis, p, q)
        rhs = lateral_norm(f1, axis, p, q) + lateral_norm(f2, axis, p, q)
        assert lhs <= rhs + 1e-12 * max(rhs, 1.0)


class TestCompositeNorms:
    def test_zero_field(self, grid16, times5):
        z = _const_in_time(SpectralField.zero(grid16), times5)
        assert x_norm(z).value == 0.0
        assert y_norm(z) == 0.0
        assert g_norm(z).value == 0.0
        assert s1_norm(z).value == 0.0
        assert n1_norm(z).value == 0.0

    def test_single_mode_closed_form(self, grid16_coarse):
        g = grid16_coarse
        A, mode = 0.9, (2, 0, 0)
        c = np.zeros((g.n,) * 3, complex)
        c[g.mode_index(mode)] = A
        f = SpectralField.from_freq(g, c)
        T = 0.8
        times = np.linspace(0.0, T, 5)
        st_f = _const_in_time(f, times)
        N, xi2 = 2.0, 4.0
        vol = g.volume
        # blocks: only the shell containing |xi| = 2 contributes
        l2l6 = np.sqrt(T) * A * vol ** (1 / 6) * 1.0  # |e^{ix xi}|_L6 = L^{1/2}
        lateral = N**1.5 * A * np.sqrt(T * g.length**2)  # phi(xi_0/N)=1, axes 1,2 give phi(0)=0
        expect_block = np.sqrt(1 + N * N) * l2l6 + lateral
        rep = x_norm(st_f)
        assert np.isclose(rep.breakdown[N], expect_block, rtol=1e-10)
        assert np.isclose(rep.value, A * np.sqrt((1 + xi2) * vol) + expect_block,
                          rtol=1e-10)
        s1 = s1_norm(st_f)
        assert np.isclose(
            s1.value, A * np.sqrt((1 + xi2) * vol) + np.sqrt(1 + N * N) * l2l6,
            rtol=1e-10)

    def test_s1_dominated_by_x(self, grid16, rng, times5):
        for _ in range(5):
            f = _const_in_time(random_field(grid16, rng), times5)
            assert s1_norm(f).value <= x_norm(f).value + 1e-12

    def test_g_bucket_upper_bound(self, grid16, rng, times5):
        from stozak.norms import _g_buckets, _shell_field
        from stozak.spectral import shell_system
        f = _const_in_time(random_field(grid16, rng), times5)
        rep = g_norm(f)
        ss = shell_system(grid16)
        for j, N in enumerate(ss.shells):
            b1, _, _ = _g_buckets(_shell_field(f, j), N)
            assert rep.breakdown[N] <= b1 + 1e-12
        assert np.isclose(rep.value ** 2,
                          sum(v * v for v in rep.breakdown.values()), rtol=1e-12)

    def test_nested_minima_n1_vs_g(self, grid16, rng, times5):
        f = _const_in_time(random_field(grid16, rng), times5)
        gn = g_norm(f)
        n1 = n1_norm(f)
        for N in gn.breakdown:
            assert n1.breakdown[N] >= gn.breakdown[N] - 1e-12

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1),
           scale=st.floats(0.1, 10.0, allow_nan=False))
    def test_homogeneity(self, seed, scale):
        g = Grid(8, length=2 * np.pi)
        r = np.random.default_rng(seed)
        t = np.linspace(0, 0.5, 3)
        d = (r.standard_normal((3,) + (8,) * 3)
             + 1j * r.standard_normal((3,) + (8,) * 3))
        f = SpaceTimeField(g, t, d)
        fs = SpaceTimeField(g, t, scale * d)
        for norm in (lambda a: x_norm(a).value, y_norm,
                     lambda a: g_norm(a).value, lambda a: s1_norm(a).value):
            assert np.isclose(norm(fs), scale * norm(f), rtol=1e-10)

    def test_triangle_composite(self, grid16, rng, times5):
        for _ in range(10):
            f1 = _const_in_time(random_field(grid16, rng), times5)
            f2 = _const_in_time(random_field(grid16, rng), times5)
            fsum = SpaceTimeField(grid16, np.asarray(times5), f1.data + f2.data)
            assert x_norm(fsum).value <= x_norm(f1).value + x_norm(f2).value + 1e-10
            assert y_norm(fsum) <= y_norm(f1) + y_norm(f2) + 1e-12


class TestProbes:
    def test_all_zero_inputs_define_zero_ratio(self, grid16):
        from stozak.probes import _ratio
        assert _ratio(0.0, 0.0) == 0.0

    def test_unknown_estimate(self):
        with pytest.raises(KeyError):
            probe_estimate("nonsense")

    def test_catalogue_complete(self):
        # one probe per displayed estimate of the multilinear and the
        # potential-flow sections
        assert len(CATALOGUE) == 21

    def test_small_probe_reports(self, grid16):
        r = probe_estimate("wave_quadratic", trials=3, grid=grid16, seed=2,
                           sweep_trials=2)
        assert r["finite"] and r["const"] > 0
        assert "interval_sweep" in r and r["claimed_power"] == 0.25
