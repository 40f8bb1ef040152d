"""Wiener sampling, stochastic convolution, W*, geometric Brownian motion."""

import numpy as np
import pytest

from stozak.grids import SpectralField, half_wave
from stozak.noise import (BrownianPath, NoiseBasis, NoiseModeError,
                          NoiseRealization, geometric_bm_l4_tail, sample_path)


@pytest.fixture(scope="module")
def basis16(grid16_factory=None):
    from stozak.grids import Grid
    g = Grid(16)
    return NoiseBasis.gaussian(g, n_schrodinger=3, n_wave=2,
                               amplitude=0.2, wave_amplitude=0.1)


class TestSampling:
    def test_zero_basis(self, grid16):
        nz = sample_path(NoiseBasis.zero(grid16), T=0.1, dt=0.01, seed=0)
        assert np.abs(nz.W1(5)).max() == 0.0
        assert np.abs(nz.b(5)).max() == 0.0
        assert np.abs(nz.c(5)).max() == 0.0
        assert np.abs(nz.mu).max() == 0.0

    def test_determinism(self, basis16):
        a = sample_path(basis16, T=0.2, dt=0.01, seed=42, stream=3)
        b = sample_path(basis16, T=0.2, dt=0.01, seed=42, stream=3)
        assert np.array_equal(a.path.increments, b.path.increments)
        c = sample_path(basis16, T=0.2, dt=0.01, seed=42, stream=4)
        assert not np.array_equal(a.path.increments, c.path.increments)

    def test_non_integral_mesh_rejected(self, basis16):
        with pytest.raises(ValueError):
            sample_path(basis16, T=0.1, dt=0.03, seed=0)

    def test_variance_monte_carlo(self):
        # Var(beta_k(T)) = T within 5% over 10^4 paths
        T, dt = 0.5, 0.05
        vals = []
        for s in range(10_000):
            p = BrownianPath.sample(1, T, dt, seed=7, stream=s)
            vals.append(p.beta[-1, 0])
        assert abs(np.var(vals) / T - 1.0) < 0.05

    def test_coarsening_preserves_path(self):
        p = BrownianPath.sample(2, 1.0, 0.01, seed=1)
        q = p.coarsened(5)
        assert np.allclose(q.beta[::1], p.beta[::5])


class TestDerivedFields:
    def test_conservative_modulus_one(self, basis16):
        nz = sample_path(basis16, T=0.2, dt=0.01, seed=2)
        for i in (0, 7, 20):
            w1 = nz.W1(i)
            assert np.abs(np.abs(np.exp(-w1)) - 1.0).max() < 1e-13

    def test_b_purely_imaginary_and_c_sign(self, basis16):
        nz = sample_path(basis16, T=0.2, dt=0.01, seed=3)
        b = nz.b(13)
        assert np.abs(b.real).max() < 1e-14
        c = nz.c(13)
        # Re c = -(sum_j (sum_k d_j phi_k beta_k)^2) <= 0
        assert c.real.max() < 1e-13

    def test_b_c_recomputed_from_w1(self, basis16):
        # finite-difference cross-check of b = 2 grad W1 via spectral gradient
        nz = sample_path(basis16, T=0.2, dt=0.01, seed=4)
        g = basis16.grid
        w1 = SpectralField.from_phys(g, nz.W1(9))
        from stozak.grids import gradient, laplacian
        grads = gradient(w1)
        b_ref = np.stack([2.0 * gr.phys() for gr in grads])
        assert np.abs(b_ref - nz.b(9)).max() < 1e-10
        c_ref = sum(gr.phys() ** 2 for gr in grads) + laplacian(w1).phys()
        assert np.abs(c_ref - nz.c(9)).max() < 1e-10

    def test_mu_nonnegative_static(self, basis16):
        mu = basis16.mu()
        assert mu.min() >= 0.0

    def test_summability_report_finite(self, basis16):
        rep = basis16.summability_report()
        assert all(np.isfinite(v) and v >= 0 for v in rep.values())


class TestStochasticConvolution:
    def test_zero_wave_noise(self, grid16):
        basis = NoiseBasis.gaussian(grid16, n_schrodinger=2, n_wave=0,
                                    amplitude=0.2)
        nz = sample_path(basis, T=0.1, dt=0.01, seed=5)
        assert nz.stochastic_convolution(10).l2() == 0.0

    def test_one_step_hand_value(self, grid16_coarse):
        g = grid16_coarse
        # eigenfunction of |nabla|: phi = 2 cos(xi . x) with |xi| = 2
        c = np.zeros((g.n,) * 3, complex)
        c[g.mode_index((2, 0, 0))] = 1.0
        c[g.mode_index((-2, 0, 0))] = 1.0
        phi = np.real(np.fft.ifftn(c) * g.n**3)
        basis = NoiseBasis(g, [], [phi])
        dt = 0.02
        nz = sample_path(basis, T=0.1, dt=dt, seed=6)
        dB = nz.path.increments[0, 0]
        tw = nz.stochastic_convolution(1)
        # T_dt = e^{i dt |nabla|} (-i dW2) with dW2 = i phi dB (the noise
        # series carries the factor i), i.e. e^{i dt |xi0|} phi dB
        expect = -1j * np.exp(1j * dt * 2.0) * SpectralField.from_phys(
            g, phi.astype(complex)).freq() * (1j * dB)
        assert np.abs(tw.freq() - expect).max() < 1e-14

    def test_increment_identity(self, basis16):
        # T_{sigma+t} = e^{i t |nabla|} T_sigma + T_{sigma+t,sigma} exactly
        nz = sample_path(basis16, T=0.3, dt=0.01, seed=7)
        sigma, t_steps = 12, 9
        lhs = nz.stochastic_convolution(sigma + t_steps)
        shifted = nz.shifted(sigma)
        rhs = half_wave(nz.stochastic_convolution(sigma), t_steps * nz.dt) \
            + shifted.stochastic_convolution(t_steps)
        assert (lhs - rhs).l2() < 1e-12 * max(lhs.l2(), 1e-30)

    def test_off_mesh_refused(self, basis16):
        nz = sample_path(basis16, T=0.1, dt=0.01, seed=8)
        with pytest.raises(ValueError):
            nz.stochastic_convolution(99)


class TestWStar:
    def test_zero_noise(self, grid16):
        nz = sample_path(NoiseBasis.zero(grid16), T=0.1, dt=0.01, seed=0)
        for i in (0, 5, 10):
            assert nz.w_star(i) == 0.0

    def test_starts_at_zero(self, basis16):
        nz = sample_path(basis16, T=0.1, dt=0.01, seed=9)
        assert nz.w_star(0) == 0.0

    def test_synthetic_linear_closed_form(self, grid16):
        # one mode, beta(t) = t: every W1-based term is computable directly
        g = grid16
        basis = NoiseBasis.gaussian(g, n_schrodinger=1, n_wave=0, amplitude=0.3)
        path = BrownianPath.synthetic_linear([1.0], T=0.5, dt=0.05)
        nz = NoiseRealization(basis, path)
        t = 0.25
        i = 5
        phi = SpectralField.from_phys(g, basis.schrodinger_modes[0].astype(complex))
        from stozak.grids import gradient
        grad_h1 = np.sqrt(sum(gr.hs(1.0) ** 2 for gr in gradient(phi)))
        h3 = phi.hs(3.0)
        lat = basis.lateral_coefficients().sum()
        expect = t * grad_h1 + t * lat + t * h3 + (t * h3) ** 2
        assert np.isclose(nz.w_star(i), expect, rtol=1e-10)

    def test_running_sup_component_persists(self, basis16):
        # force the path back to zero: the instantaneous W1 terms vanish at
        # the endpoint but the running-sup lateral term must survive
        nz = sample_path(basis16, T=0.3, dt=0.01, seed=10)
        ns = basis16.n_schrodinger
        inc = nz.path.increments.copy()
        inc[15:30] = -inc[:15][::-1]
        path = BrownianPath(nz.dt, inc)
        wiggle = NoiseRealization(basis16, path)
        assert np.abs(path.beta[30, :ns]).max() < 1e-14
        sup_beta = np.abs(path.beta[:31, :ns]).max(axis=0)
        lateral_floor = float(
            np.sum(basis16.lateral_coefficients() * sup_beta[None, :]))
        assert wiggle.w_star(30) >= lateral_floor - 1e-12


class TestGeometricBM:
    def test_conservative_mode_error(self, basis16):
        nz = sample_path(basis16, T=0.1, dt=0.01, seed=11)
        with pytest.raises(NoiseModeError):
            nz.geometric_bm(3)

    def test_im_zero_gives_one(self, grid16):
        basis = NoiseBasis.nonconservative(grid16, im_phi=0.0)
        nz = sample_path(basis, T=0.1, dt=0.01, seed=12)
        assert nz.geometric_bm(7) == 1.0

    def test_h_positive_starts_at_one(self, grid16):
        basis = NoiseBasis.nonconservative(grid16, im_phi=3.0)
        nz = sample_path(basis, T=0.2, dt=0.01, seed=13)
        assert nz.geometric_bm(0) == 1.0
        assert all(nz.geometric_bm(i) > 0 for i in range(0, 21, 4))

    def test_martingale_mean(self, grid16):
        # lognormal oracle: E h(t) = exp(-2 a^2 t + (1/2)(2a)^2 t) = 1 exactly
        basis = NoiseBasis.nonconservative(grid16, im_phi=1.5)
        T, dt, n_paths = 0.25, 0.05, 10_000
        vals = []
        for s in range(n_paths):
            nz = sample_path(basis, T, dt, seed=99, stream=s)
            vals.append(nz.geometric_bm(5))
        mean = np.mean(vals)
        # Var h = e^{4 a^2 t} - 1
        a = 1.5
        se = np.sqrt((np.exp(4 * a * a * T) - 1.0) / n_paths)
        assert abs(mean - 1.0) < 3.0 * se

    def test_l4_tail_decreasing_in_amplitude(self):
        thresh = 0.02
        p1 = geometric_bm_l4_tail(2.0, thresh, n_paths=4000, seed=5, dt=2e-3)
        p2 = geometric_bm_l4_tail(4.0, thresh, n_paths=4000, seed=5, dt=2e-3)
        assert p2 <= p1

    def test_hat_mu_real_part(self, grid16):
        basis = NoiseBasis.nonconservative(grid16, im_phi=2.5, re_phi=0.7)
        hm = basis.hat_mu()
        assert np.abs(hm.real - 2.5**2).max() < 1e-12

    def test_conservative_model_rejects_complex_modes(self, grid16):
        mode = 1j * np.ones((grid16.n,) * 3)
        with pytest.raises(NoiseModeError):
            NoiseBasis(grid16, [mode], [], model="conservative")


def test_increment_independence_statistics():
    # cross-mode and lag-1 correlations of the increments vanish within
    # Monte Carlo error (~1/sqrt(N))
    p = BrownianPath.sample(2, T=400.0, dt=0.05, seed=3)
    a, b = p.increments[:, 0], p.increments[:, 1]
    n = a.size
    cross = np.corrcoef(a, b)[0, 1]
    lag1 = np.corrcoef(a[:-1], a[1:])[0, 1]
    bound = 4.0 / np.sqrt(n)
    assert abs(cross) < bound
    assert abs(lag1) < bound
