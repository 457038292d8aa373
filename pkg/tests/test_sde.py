"""Tests for the stochastic integrator, ensembles and spectral estimators."""

import math

import numpy as np
import pytest

from oposim import models, sde


class TestGaussianIncrement:
    def test_statistics(self):
        rng = sde.trajectory_rng(1, 0)
        dt = 0.01
        n = 10**6
        w = sde.gaussian_increment(rng, dt, n)
        assert abs(w.mean()) < 4.0 * math.sqrt(dt / n)
        assert w.var() == pytest.approx(dt, rel=0.01)

    def test_lag_one_independence(self):
        rng = sde.trajectory_rng(1, 1)
        n = 200000
        w = sde.gaussian_increment(rng, 1.0, n)
        corr = np.mean(w[:-1] * w[1:])
        assert abs(corr) < 4.0 / math.sqrt(n)

    def test_deterministic_stream(self):
        a = sde.gaussian_increment(sde.trajectory_rng(7, 3), 0.1, 100)
        b = sde.gaussian_increment(sde.trajectory_rng(7, 3), 0.1, 100)
        np.testing.assert_array_equal(a, b)
        c = sde.gaussian_increment(sde.trajectory_rng(7, 4), 0.1, 100)
        assert not np.array_equal(a, c)


class TestStep:
    def test_deterministic_limit_matches_rk4(self):
        model = models.DopoResonant(sigma=1.8, kappa=2.0, g=0.0)
        z0 = np.array([0.4 + 0.1j, 0.2 - 0.3j])
        state = model.classical_to_phase_space(z0)[:, None]
        dt, n = 0.01, 500
        zero = np.zeros((model.n_noises, 1))
        for _ in range(n):
            state = sde.semi_implicit_step(model, state, dt, 2, zero)
        _, ref = sde.integrate_classical(model, z0, dt / 20, 20 * n, record_every=20 * n)
        err = np.abs(state[0::2, 0] - ref[-1]).max()
        assert err < dt  # global error O(dt) at least (midpoint is order 2)

    def test_deterministic_order_two(self):
        model = models.DopoResonant(sigma=1.8, kappa=2.0, g=0.0)
        z0 = np.array([0.4 + 0.1j, 0.2 - 0.3j])
        _, ref = sde.integrate_classical(model, z0, 1e-4, 20000, record_every=20000)
        errs = []
        for dt in (0.02, 0.01):
            state = model.classical_to_phase_space(z0)[:, None]
            zero = np.zeros((model.n_noises, 1))
            for _ in range(int(round(2.0 / dt))):
                state = sde.semi_implicit_step(model, state, dt, 2, zero)
            errs.append(np.abs(state[0::2, 0] - ref[-1]).max())
        assert errs[1] < errs[0] / 3.0

    def test_fixed_point_preserved_at_g0(self):
        model = models.TtmDopo(sigma=2.0, kappa=1.0, g=0.0)
        state = model.initial_state(theta=0.4)[:, None]
        start = state.copy()
        zero = np.zeros((model.n_noises, 1))
        for _ in range(100):
            state = sde.semi_implicit_step(model, state, 0.05, 2, zero)
        assert np.abs(state - start).max() < 1e-12


class TestWeakConvergence:
    def test_ou_stationary_variance_order(self):
        # the scheme is linear on the OU model: extract the one-step map
        # c' = a c + b W exactly and compare its stationary variance b^2 dt
        # / (1 - a^2) with Gamma^2 / 2 lambda
        model = sde.OrnsteinUhlenbeck(lam=1.0, gam=1.0)
        errs, dts = [], (0.5, 0.25, 0.125)
        for dt in dts:
            a = sde.semi_implicit_step(model, np.ones((1, 1), complex), dt, 2, np.zeros((1, 1)))
            b = sde.semi_implicit_step(model, np.zeros((1, 1), complex), dt, 2, np.ones((1, 1)))
            a, b = a[0, 0].real, b[0, 0].real
            var = b**2 * dt / (1 - a**2)
            errs.append(abs(var - 0.5))
        slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
        assert slope >= 0.9
        # halving dt cuts the error at least in half (here much faster)
        assert errs[1] <= 0.6 * errs[0]


def ou_config(**kw):
    base = dict(dt=2e-3, t_end=12.0, trajectories=4000, seed=11, burn_in=4.0, save_every=10)
    base.update(kw)
    return sde.IntegratorConfig(**base)


class TestEnsemble:
    def test_ou_zero_mean_and_variance(self):
        model = sde.OrnsteinUhlenbeck(lam=1.0, gam=1.0)
        res = sde.run_ensemble(
            model,
            ou_config(),
            {"c": lambda s: s[0], "c2": lambda s: s[0] ** 2},
            series=("c",),
            stationary=("c2",),
        )
        mean_c = res.series["c"][0][-1]
        stderr_c = res.series["c"][1][-1]
        assert abs(mean_c) < 4 * stderr_c
        m = res.moments["c2"]
        assert abs(m.mean.real - 0.5) < 3 * m.stderr
        assert res.failures == 0

    def test_reproducible_and_batch_invariant(self):
        model = sde.OrnsteinUhlenbeck()
        r1 = sde.run_ensemble(model, ou_config(trajectories=600, batch_size=600),
                              {"c2": lambda s: s[0] ** 2}, stationary=("c2",))
        r2 = sde.run_ensemble(model, ou_config(trajectories=600, batch_size=600),
                              {"c2": lambda s: s[0] ** 2}, stationary=("c2",))
        assert r1.moments["c2"].mean == r2.moments["c2"].mean  # bit identical
        r3 = sde.run_ensemble(model, ou_config(trajectories=600, batch_size=113),
                              {"c2": lambda s: s[0] ** 2}, stationary=("c2",))
        assert r3.moments["c2"].mean == pytest.approx(r1.moments["c2"].mean, rel=1e-12)

    def test_dopo_sigma_zero_silent(self):
        model = models.DopoResonant(sigma=0.0, kappa=1.0, g=0.05)
        cfg = sde.IntegratorConfig(dt=0.01, t_end=5.0, trajectories=64, seed=3, save_every=10)
        res = sde.run_ensemble(
            model, cfg, {"n_s": lambda s: s[3] * s[2]}, series=("n_s",)
        )
        vals = res.series["n_s"][0]
        assert np.abs(vals).max() == 0.0  # no noise drive at all

    def test_ttm_signal_intensity_above_threshold(self):
        sigma = math.sqrt(2.0)
        model = models.TtmDopo(sigma=sigma, kappa=1.0, g=1e-3)
        cfg = sde.IntegratorConfig(dt=5e-3, t_end=12.0, trajectories=400, seed=5,
                                   burn_in=4.0, save_every=10)
        res = sde.run_ensemble(
            model, cfg, {"n": lambda s: s[3] * s[2]},
            stationary=("n",), correlations={"n": 1.0},
        )
        m = res.moments["n"]
        assert m.mean.real == pytest.approx(sigma - 1, abs=max(5 * m.stderr, 1e-3))

    def test_failure_abort_and_exclusion(self):
        class Explosive:
            labels = ("c",)
            dim = 1
            n_noises = 1

            def drift(self, state):
                return state**3

            def noise_matrix(self, state):
                B = np.ones((1, 1) + state.shape[1:], dtype=complex)
                return B

            def pump_indices(self):
                return ()

            def initial_state(self):
                return np.zeros(1, dtype=complex)

        model = Explosive()
        cfg = sde.IntegratorConfig(dt=0.01, t_end=1.2, trajectories=200, seed=1,
                                   save_every=2, max_failure_rate=0.9)
        res = sde.run_ensemble(model, cfg, {"c": lambda s: s[0]}, series=("c",))
        assert 0 < res.failures < 200
        assert np.isfinite(res.series["c"][0]).all()
        with pytest.raises(sde.EnsembleFailure):
            sde.run_ensemble(
                model,
                sde.IntegratorConfig(dt=0.01, t_end=1.2, trajectories=200, seed=1,
                                     save_every=2, max_failure_rate=1e-6),
                {"c": lambda s: s[0]},
            )


class TestCorrelations:
    def test_ou_exponential_correlation(self):
        model = sde.OrnsteinUhlenbeck(lam=1.0, gam=1.0)
        corr = sde.two_time_correlation(model, ou_config(trajectories=6000), lambda s: s[0], 3.0)
        assert corr.values[0].real == pytest.approx(0.5, abs=4 * max(corr.stderr[0], 5e-3))
        for lag in (0.5, 1.0, 2.0):
            k = int(round(lag / (corr.lags[1] - corr.lags[0])))
            target = 0.5 * math.exp(-lag)
            assert corr.values[k].real == pytest.approx(target, abs=0.02)

    def test_wiener_min_correlation(self):
        model = sde.WienerPhase(diffusion=0.1)
        cfg = sde.IntegratorConfig(dt=0.01, t_end=10.0, trajectories=4000, seed=9, save_every=20)
        tt = sde.two_time_correlation(model, cfg, lambda s: s[0].real, None,
                                      stationary=False, grid=40)
        taus = tt.taus
        target = 0.1 * np.minimum.outer(taus, taus)
        mask = np.abs(tt.values.real - target) < 6 * np.maximum(tt.stderr, 1e-3)
        assert mask.mean() > 0.97

    def test_lag_beyond_record_raises(self):
        model = sde.OrnsteinUhlenbeck()
        with pytest.raises(sde.ResolutionError):
            sde.two_time_correlation(model, ou_config(trajectories=16), lambda s: s[0], 50.0)


class TestSpectra:
    def test_ou_lorentzian(self):
        model = sde.OrnsteinUhlenbeck(lam=1.0, gam=1.0)
        omegas = np.array([0.0, 0.7, 1.5, 3.0])
        res = sde.run_ensemble(
            model, ou_config(trajectories=8000, t_end=16.0),
            {"c": lambda s: s[0]},
            spectra={"c": dict(omegas=omegas, max_lag=8.0, g=math.sqrt(2.0))},
        )
        spec = res.spectra["c"]
        target = 1.0 + 1.0 / (1.0 + omegas**2)
        for v, e, t in zip(spec.values, spec.stderr, target):
            assert v == pytest.approx(t, abs=3.5 * e)
        assert spec.values[0] == pytest.approx(2.0, rel=0.05)

    def test_white_noise_flat(self):
        var = 0.8
        n_lag = 40
        corr = sde.CorrelationEstimate(
            lags=np.arange(n_lag + 1) * 0.05,
            values=np.concatenate([[var], np.zeros(n_lag)]).astype(complex),
            stderr=np.full(n_lag + 1, 1e-12),
            stationary=True,
            n=1000,
        )
        spec = sde.spectrum_estimate(corr, np.linspace(0, 10, 7), g=1.0, truncate=False)
        assert np.ptp(spec.values) < 1e-12

    def test_truncation_reported(self):
        model = sde.OrnsteinUhlenbeck()
        corr = sde.two_time_correlation(model, ou_config(trajectories=2000), lambda s: s[0], 6.0)
        spec = sde.spectrum_estimate(corr, [0.0, 1.0], g=math.sqrt(2.0))
        assert spec.truncation_lag is not None
        assert spec.truncation_lag <= 6.0

    def test_windowed_mode_on_wiener_quadrature(self):
        # build a synthetic nonstationary correlation and integrate the window
        taus = np.linspace(0.0, 4.0, 80)
        c = np.minimum.outer(taus, taus) * 0.3
        tt = sde.TwoTimeCorrelation(taus=taus, values=c.astype(complex),
                                    stderr=np.zeros_like(c), n=1)
        spec = sde.spectrum_estimate(tt, [0.0], g=1.0, mode="windowed")
        span = taus[-1]
        # exact double integral of 0.3 min(t,t') over the square / span
        exact = 1.0 + (2.0 / span) * 0.3 * span**3 / 3.0
        assert spec.values[0] == pytest.approx(exact, rel=1e-3)

    def test_resolution_guard(self):
        model = sde.OrnsteinUhlenbeck()
        corr = sde.two_time_correlation(model, ou_config(trajectories=64), lambda s: s[0], 2.0)
        with pytest.raises(sde.ResolutionError):
            sde.spectrum_estimate(corr, [1e-6], g=1.0)
