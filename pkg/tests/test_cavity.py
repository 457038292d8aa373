"""Tests for resonator analysis, transverse modes, couplings and rates."""

import math

import numpy as np
import pytest
from scipy.constants import c as C_LIGHT

from oposim import cavity


def empty_cavity(r1, r2, length, **kw):
    return cavity.CavityGeometry(r1=r1, r2=r2, length=length, **kw)


class TestGeometry:
    def test_symmetric_half_radius(self):
        # R1 = R2 = 2 L_eff gives g = 1/2 on both mirrors, stable cavity
        geom = empty_cavity(2.0, 2.0, 1.0)
        ana = cavity.analyze_geometry(geom)
        assert ana.g1 == pytest.approx(0.5)
        assert ana.g2 == pytest.approx(0.5)
        assert ana.stable

    def test_plane_parallel_marginal(self):
        geom = empty_cavity(math.inf, math.inf, 1.0)
        ana = cavity.analyze_geometry(geom)
        assert ana.g1 * ana.g2 == pytest.approx(1.0)
        assert not ana.stable  # strict inequality

    def test_confocal_numbers(self):
        geom = empty_cavity(5e-3, 5e-3, 5e-3)
        ana = cavity.analyze_geometry(geom)
        assert ana.fsr == pytest.approx(math.pi * C_LIGHT / 5e-3)
        assert ana.fsr == pytest.approx(1.9e11, rel=0.02)
        assert ana.gouy == pytest.approx(math.pi)

    def test_abcd_determinant_and_trace(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            r1, r2 = rng.uniform(0.3, 5.0, size=2)
            length = rng.uniform(0.05, 1.0)
            lc = rng.uniform(0, length / 2)
            nc = rng.uniform(1.0, 2.5)
            geom = cavity.CavityGeometry(r1, r2, length, crystal_length=lc, crystal_index=nc)
            ana = cavity.analyze_geometry(geom)
            assert abs(np.linalg.det(ana.abcd) - 1.0) < 1e-12
            half_trace = np.trace(ana.abcd) / 2.0
            assert half_trace == pytest.approx(2 * ana.g1 * ana.g2 - 1, abs=1e-12)
            assert ana.stable == (-1 < half_trace < 1)

    def test_slab_lengths(self):
        geom = cavity.CavityGeometry(1.0, 1.0, 0.1, crystal_length=0.01, crystal_index=2.0)
        assert geom.effective_length == pytest.approx(0.1 - 0.005)
        assert geom.optical_length == pytest.approx(0.11)

    def test_bad_geometry_rejected(self):
        with pytest.raises(cavity.GeometryError):
            cavity.CavityGeometry(1.0, 1.0, -1.0)
        with pytest.raises(cavity.GeometryError):
            cavity.CavityGeometry(1.0, 1.0, 0.1, crystal_length=0.2)
        with pytest.raises(cavity.GeometryError):
            cavity.CavityGeometry(1.0, 1.0, 0.1, crystal_index=0.5)


class TestResonances:
    def test_confocal_families_interleave(self):
        geom = empty_cavity(5e-3, 5e-3, 5e-3)
        fsr = cavity.analyze_geometry(geom).fsr
        # omega_qf = FSR (q + f/2 + 1/2): families f and f+2 coincide
        w_q_f0 = cavity.resonance_frequency(geom, 10, 0)
        w_q_f2 = cavity.resonance_frequency(geom, 9, 2)
        assert w_q_f0 == pytest.approx(w_q_f2, rel=1e-12)
        assert w_q_f0 == pytest.approx(fsr * (10 + 0.5), rel=1e-12)

    def test_near_planar_collapses_to_longitudinal_comb(self):
        geom = empty_cavity(1e6, 1e6, 1e-2)
        fsr = cavity.analyze_geometry(geom).fsr
        for f in range(4):
            w = cavity.resonance_frequency(geom, 5, f)
            assert w == pytest.approx(fsr * 5, rel=1e-3)

    def test_near_concentric_all_families_resonate(self):
        radius = 1.0
        geom = empty_cavity(radius, radius, 2 * radius * (1 - 1e-9))
        fsr = cavity.analyze_geometry(geom).fsr
        for q, f in [(5, 0), (5, 1), (5, 3)]:
            w = cavity.resonance_frequency(geom, q, f)
            assert w == pytest.approx(fsr * (q + f + 1), rel=1e-4)

    def test_unstable_rejected(self):
        geom = empty_cavity(0.4, 0.4, 1.0)  # g1 g2 > 1
        assert not cavity.analyze_geometry(geom).stable
        with pytest.raises(cavity.UnstableCavityError):
            cavity.resonance_frequency(geom, 1, 0)


class TestGaussianGeometry:
    def test_confocal_waist(self):
        geom = empty_cavity(5e-3, 5e-3, 5e-3)
        beam = cavity.gaussian_mode_geometry(geom, 532e-9)
        assert beam.w0 == pytest.approx(20.6e-6, rel=0.01)
        assert abs(beam.z_r) == pytest.approx(geom.effective_length / 2, rel=1e-12)

    def test_symmetric_waist_centered(self):
        geom = empty_cavity(3.0, 3.0, 1.0)
        beam = cavity.gaussian_mode_geometry(geom, 1e-6)
        assert beam.z1_eff == pytest.approx(geom.effective_length / 2)

    def test_general_equals_reduced_when_symmetric(self):
        # away from g = 0 the general expression must agree with the reduced one
        geom = empty_cavity(3.0, 3.0, 1.0)
        g = geom.g1
        ratio_general = (g * g * (1 - g * g)) / (2 * g - 2 * g * g) ** 2
        ratio_reduced = (1 + g) / (4 * (1 - g))
        assert ratio_general == pytest.approx(ratio_reduced, rel=1e-12)

    def test_propagation_laws(self):
        geom = empty_cavity(2.0, 2.0, 1.0)
        beam = cavity.gaussian_mode_geometry(geom, 1e-6)
        z = 0.37
        assert beam.spot_size(0.0) == pytest.approx(beam.w0)
        assert beam.spot_size(z) == pytest.approx(beam.w0 * math.sqrt(1 + (z / beam.z_r) ** 2))
        assert beam.curvature_radius(z) == pytest.approx(z * (1 + (beam.z_r / z) ** 2))
        assert beam.gouy_phase(z) == pytest.approx(-math.atan(z / beam.z_r))

    def test_unstable_rejected(self):
        geom = empty_cavity(0.4, 0.4, 1.0)
        with pytest.raises(cavity.UnstableCavityError):
            cavity.gaussian_mode_geometry(geom, 1e-6)


def _grid_quadrature(mode_a, mode_b, z, half_width, n):
    """Transverse overlap integral on a tensor Gauss-Legendre grid."""
    nodes, weights = np.polynomial.legendre.leggauss(n)
    x = nodes * half_width
    wx = weights * half_width
    xx, yy = np.meshgrid(x, x, indexing="ij")
    fa = cavity.mode_amplitude(mode_a, (xx, yy), z)
    fb = cavity.mode_amplitude(mode_b, (xx, yy), z)
    return np.einsum("i,j,ij->", wx, wx, np.conj(fa) * fb)


def _all_modes_up_to_family(basis, fmax, k, w0):
    modes = []
    for f in range(fmax + 1):
        if basis == "hg":
            modes += [cavity.ModeSpec("hg", (m, f - m), k, w0) for m in range(f + 1)]
        elif basis == "lg":
            for l in range(-f, f + 1):
                if (f - abs(l)) % 2 == 0:
                    modes.append(cavity.ModeSpec("lg", ((f - abs(l)) // 2, l), k, w0))
        else:
            for l in range(f % 2, f + 1, 2):
                p = (f - l) // 2
                modes.append(cavity.ModeSpec("hlg", ("c", p, l), k, w0))
                if l > 0:
                    modes.append(cavity.ModeSpec("hlg", ("s", p, l), k, w0))
    return modes


class TestModes:
    K = 2 * math.pi / 1.064e-6
    W0 = 30e-6

    def test_fundamental_on_axis_value(self):
        mode = cavity.ModeSpec("hg", (0, 0), self.K, self.W0)
        val = cavity.mode_amplitude(mode, (0.0, 0.0), 0.0)
        assert val == pytest.approx(1.0 / (self.W0 * math.sqrt(math.pi / 2)), rel=1e-12)

    def test_vortex_core_is_dark(self):
        for l in (1, -1, 2):
            mode = cavity.ModeSpec("lg", (0, l), self.K, self.W0)
            assert abs(cavity.mode_amplitude(mode, (0.0, 0.0), 0.01)) < 1e-30

    def test_hg10_normalization_quadrature(self):
        mode = cavity.ModeSpec("hg", (1, 0), self.K, self.W0)
        for z in (0.0, 0.003):
            w = cavity.GaussianBeam(self.W0, 0, self.K * self.W0**2 / 2, 1.064e-6).spot_size(z)
            val = _grid_quadrature(mode, mode, z, 6 * w, 120)
            assert abs(val - 1.0) < 1e-8

    @pytest.mark.parametrize("basis", ["hg", "lg", "hlg"])
    def test_orthonormality_family_leq_4(self, basis):
        modes = _all_modes_up_to_family(basis, 4, self.K, self.W0)
        zr = self.K * self.W0**2 / 2
        for z in (0.0, 0.4 * zr, 1.5 * zr):
            w = cavity.GaussianBeam(self.W0, 0, zr, 1.064e-6).spot_size(z)
            nodes = 140
            gram = np.zeros((len(modes), len(modes)), dtype=complex)
            amps = []
            leg_nodes, leg_w = np.polynomial.legendre.leggauss(nodes)
            x = leg_nodes * 7 * w
            wx = leg_w * 7 * w
            xx, yy = np.meshgrid(x, x, indexing="ij")
            for m in modes:
                amps.append(cavity.mode_amplitude(m, (xx, yy), z))
            for i in range(len(modes)):
                for j in range(i, len(modes)):
                    val = np.einsum("i,j,ij->", wx, wx, np.conj(amps[i]) * amps[j])
                    gram[i, j] = val
                    gram[j, i] = np.conj(val)
            assert np.max(np.abs(gram - np.eye(len(modes)))) < 1e-6

    def test_hlg_l0_conventions(self):
        sine = cavity.ModeSpec("hlg", ("s", 1, 0), self.K, self.W0)
        cosine = cavity.ModeSpec("hlg", ("c", 1, 0), self.K, self.W0)
        lg = cavity.ModeSpec("lg", (1, 0), self.K, self.W0)
        pts = (np.array([1e-5, 3e-5]), np.array([-2e-5, 1e-5]))
        assert np.all(cavity.mode_amplitude(sine, pts, 0.0) == 0)
        np.testing.assert_allclose(
            cavity.mode_amplitude(cosine, pts, 0.0), cavity.mode_amplitude(lg, pts, 0.0)
        )


def _fixed_grid_overlap(f, l, rho, n=400):
    """Independent high-order fixed-grid evaluation of the radial overlap."""
    from scipy.special import eval_genlaguerre, gammaln

    nodes, weights = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (nodes + 1) * 12.0
    w = 0.5 * weights * 12.0
    p = (f - l) // 2
    alpha = 1.0 + 1.0 / (2 * rho**2)
    vals = np.exp(-alpha * u**2) * u ** (2 * l + 1) * eval_genlaguerre(p, l, u**2) ** 2
    return math.exp(gammaln(p + 1) - gammaln(p + l + 1)) / rho * np.sum(w * vals)


class TestFamilyCouplings:
    def test_lowest_channel_normalized(self):
        for f in (0, 1, 2, 5):
            out = cavity.family_couplings(f, 0.9)
            assert out["r_l"][-1] == pytest.approx(1.0)

    def test_ordering_lower_oam_couples_stronger(self):
        out = cavity.family_couplings(6, 1.0 / math.sqrt(2))
        r = out["r_l"]  # ordered l = f, f-2, ..., l0
        assert np.all(np.diff(r) > 0)
        assert np.all((r > 0) & (r <= 1))

    def test_f2_against_fixed_grid_oracle(self):
        rho = 1.0 / math.sqrt(2)
        out = cavity.family_couplings(2, rho)
        r2_oracle = _fixed_grid_overlap(2, 2, rho) / _fixed_grid_overlap(2, 0, rho)
        assert out["r_l"][0] == pytest.approx(r2_oracle, abs=1e-6)
        # analytic value for this channel pair
        assert out["r_l"][0] == pytest.approx(0.5, abs=1e-9)

    def test_wide_pump_limit(self):
        for f in (2, 3, 4):
            out = cavity.family_couplings(f, 50.0)
            assert np.all(out["r_l"] > 0.95)

    def test_threshold_ratio_reference(self):
        out = cavity.family_couplings(3, 1.0 / math.sqrt(2))
        assert out["r_th"] == pytest.approx(1.0, rel=1e-9)


class TestPhysicalRates:
    def test_loss_rate_number(self):
        # R = 0.99 and L = 5 mm give 1.5e8 1/s
        assert cavity.loss_rate(0.01, 5e-3) == pytest.approx(1.5e8, rel=1e-3)

    def test_footnote_nonlinearity(self):
        length = 5e-3
        geom = cavity.CavityGeometry(
            r1=length, r2=length, length=length,
            crystal_length=length / 10, crystal_index=2.0, t_s=0.01, t_p=0.1,
        )
        params = cavity.PhysicalParams(chi2=2.5e-12, pump_power=0.0, wavelength=1064e-9, geometry=geom)
        omega_p = 2 * math.pi * C_LIGHT / (1064e-9 / 2)
        out = cavity.physical_rates(params, omega_p)
        assert out["g"] == pytest.approx(4e-6, rel=0.10)

    def test_zero_power(self):
        geom = cavity.CavityGeometry(1.0, 1.0, 0.1, t_s=0.01, t_p=0.01)
        params = cavity.PhysicalParams(chi2=1e-12, pump_power=0.0, wavelength=1e-6, geometry=geom)
        out = cavity.physical_rates(params, 1e15)
        assert out["amplitude"] == 0.0
        assert out["sigma"] == 0.0

    def test_sigma_consistency(self):
        geom = cavity.CavityGeometry(1.0, 1.0, 0.1, crystal_length=0.01,
                                     crystal_index=2.0, t_s=0.01, t_p=0.1)
        params = cavity.PhysicalParams(chi2=2.5e-12, pump_power=0.2, wavelength=1064e-9, geometry=geom)
        out = cavity.physical_rates(params, 3.5e15)
        assert out["sigma"] == pytest.approx(
            out["chi"] * out["amplitude"] / (out["gamma_p"] * out["gamma_s"])
        )
        assert out["chi"] == pytest.approx(out["g"] * math.sqrt(out["gamma_p"] * out["gamma_s"]))

    def test_overcoupled_rejected(self):
        with pytest.raises(ValueError):
            cavity.loss_rate(1.0, 0.1)


class TestPolarization:
    def test_linear_at_theta_zero(self):
        for phi in (0.1, math.pi / 4, 1.2):
            out = cavity.ellipse_params(0.0, phi)
            assert out["chi"] == pytest.approx(0.0, abs=1e-12)
            assert out["e"] == pytest.approx(1.0)

    def test_diagonal_linear(self):
        out = cavity.ellipse_params(0.0, math.pi / 4)
        assert out["e"] == pytest.approx(1.0)
        assert abs(out["beta"]) == pytest.approx(math.pi / 4)

    def test_circular(self):
        out = cavity.ellipse_params(math.pi / 4, math.pi / 4)
        assert abs(out["chi"]) == pytest.approx(math.pi / 4)
        assert out["e"] == pytest.approx(0.0, abs=1e-7)

    def test_axes_normalized(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            theta = rng.uniform(0, math.pi)
            phi = rng.uniform(0, math.pi / 2)
            out = cavity.ellipse_params(theta, phi)
            assert out["a"] ** 2 + out["b"] ** 2 == pytest.approx(1.0, abs=1e-12)
            assert -math.pi / 2 <= out["beta"] <= math.pi / 2
            assert -math.pi / 4 - 1e-12 <= out["chi"] <= math.pi / 4 + 1e-12
