import math

import numpy as np
import pytest

from volforge.errors import DataError
from volforge.garch import (GarchModel, garch_fit, garch_forecast,
                            garch_forecast_path, garch_loglik, garch_step,
                            variance_path, with_bucket_scale)
from volforge.synth import GarchSimSpec, simulate_garch

_LOG_2PI = math.log(2.0 * math.pi)


class TestVariancePath:
    def test_three_obs_hand_recursion(self):
        r = [0.01, -0.02, 0.015]
        omega, alpha, beta = 1e-5, 0.1, 0.8
        s2 = variance_path(r, omega, alpha, beta, 0.0, 0.0)
        v0 = np.var(r)
        v1 = omega + alpha * 0.01 ** 2 + beta * v0
        v2 = omega + alpha * 0.02 ** 2 + beta * v1
        np.testing.assert_allclose(s2, [v0, v1, v2], rtol=1e-10)

    def test_alpha_beta_zero_collapses_to_omega(self):
        r = np.random.default_rng(0).standard_normal(20) * 0.01
        s2 = variance_path(r, 4e-4, 0.0, 0.0, 0.0, 0.0)
        np.testing.assert_allclose(s2[1:], 4e-4)

    def test_gjr_asymmetric_response(self):
        # identical magnitude shocks: negative one raises variance more
        up = variance_path([0.0, 0.02, 0.0], 1e-5, 0.05, 0.8, 0.1, 0.0,
                           sigma2_0=1e-4)
        dn = variance_path([0.0, -0.02, 0.0], 1e-5, 0.05, 0.8, 0.1, 0.0,
                           sigma2_0=1e-4)
        assert dn[2] > up[2]
        assert dn[2] - up[2] == pytest.approx(0.1 * 0.02 ** 2, rel=1e-10)

    def test_explicit_initial_variance(self):
        s2 = variance_path([0.0, 0.0], 1e-5, 0.1, 0.8, 0.0, 0.0, sigma2_0=2e-4)
        assert s2[0] == 2e-4
        assert s2[1] == pytest.approx(1e-5 + 0.8 * 2e-4, rel=1e-12)

    def test_unconditional_fixed_point(self):
        omega, alpha, beta = 2e-5, 0.1, 0.85
        ubar = omega / (1 - alpha - beta)
        # zero shocks at mu keep the variance moving toward and holding at
        # omega + beta*sigma2; start exactly at the no-shock fixed point
        fp = omega / (1 - beta)
        s2 = variance_path(np.zeros(10), omega, alpha, beta, 0.0, 0.0, sigma2_0=fp)
        np.testing.assert_allclose(s2, fp, rtol=1e-12)
        assert fp < ubar


class TestLoglik:
    def test_matches_hand_formula(self):
        r = np.array([0.01, -0.02, 0.015, 0.0, 0.005, -0.01, 0.02, 0.0,
                      -0.005, 0.01])
        params = (1e-5, 0.1, 0.8, 0.0, 0.001)
        s2 = variance_path(r, *params)
        eps = r - 0.001
        expect = -0.5 * np.sum(_LOG_2PI + np.log(s2) + eps ** 2 / s2)
        assert garch_loglik(params, r) == pytest.approx(expect, rel=1e-12)

    def test_too_few_returns(self):
        with pytest.raises(DataError):
            garch_loglik((1e-5, 0.1, 0.8, 0.0, 0.0), np.zeros(5) + 0.01)


class TestStepAndForecast:
    def test_step_substitution(self):
        m = GarchModel(1e-5, 0.1, 0.8, 0.0, 0.0, 0.0)
        # 1e-5 + 0.1*0.0004 + 0.8*0.0001
        assert garch_step(m, 0.02, 1e-4) == pytest.approx(1.3e-4, rel=1e-12)

    def test_forecast_rv_units(self):
        m = GarchModel(1e-5, 0.1, 0.8, 0.0, 0.0, 0.0, returns_per_bucket=39)
        s2n = garch_step(m, 0.02, 1e-4)
        assert garch_forecast(m, 0.02, 1e-4) == pytest.approx(math.sqrt(39 * s2n))
        m1 = with_bucket_scale(m, 1)
        assert m1.returns_per_bucket == 1
        assert garch_forecast(m1, 0.02, 1e-4) == pytest.approx(math.sqrt(s2n))

    def test_forecast_requires_bucket_scale(self):
        m = GarchModel(1e-5, 0.1, 0.8, 0.0, 0.0, 0.0)
        with pytest.raises(DataError, match="returns_per_bucket"):
            garch_forecast(m, 0.01, 1e-4)

    def test_forecast_path_matches_manual_loop(self):
        r = simulate_garch(GarchSimSpec(1e-5, 0.1, 0.85, length=300, seed=3)).returns
        m = with_bucket_scale(garch_fit(r[:200]), 1)
        path = garch_forecast_path(m, r, 200, 300)
        s2 = variance_path(r, m.omega, m.alpha, m.beta, m.gamma, m.mu,
                           sigma2_0=float(np.var(r[:200])))
        for k, t in enumerate(range(200, 300)):
            assert path[k] == pytest.approx(
                math.sqrt(garch_step(m, r[t - 1], s2[t - 1])), rel=1e-12)


class TestFit:
    def test_parameter_recovery(self):
        r = simulate_garch(GarchSimSpec(1e-5, 0.1, 0.85, length=5000, seed=42)).returns
        m = garch_fit(r)
        assert m.alpha == pytest.approx(0.1, abs=0.05)
        assert m.beta == pytest.approx(0.85, abs=0.08)
        assert m.persistence < 1.0
        # fitted likelihood can never be below the generator's own params
        assert m.loglik >= garch_loglik((1e-5, 0.1, 0.85, 0.0, 0.0), r) - 1e-6

    def test_local_optimality_on_grid(self):
        r = simulate_garch(GarchSimSpec(1e-5, 0.1, 0.85, length=2000, seed=7)).returns
        m = garch_fit(r)
        best = m.loglik
        for do in np.linspace(-0.2, 0.2, 5):
            for da in np.linspace(-0.02, 0.02, 5):
                for db in np.linspace(-0.02, 0.02, 5):
                    omega = m.omega * math.exp(do)
                    alpha = m.alpha + da
                    beta = m.beta + db
                    if alpha < 0 or beta < 0 or alpha + beta >= 0.9995:
                        continue
                    ll = garch_loglik((omega, alpha, beta, 0.0, m.mu), r)
                    assert ll <= best + 1e-6

    def test_scale_equivariance(self):
        r = simulate_garch(GarchSimSpec(1e-5, 0.1, 0.85, length=1500, seed=9)).returns
        m1 = garch_fit(r)
        c = 3.0
        m2 = garch_fit(c * r)
        assert m2.omega == pytest.approx(c * c * m1.omega, rel=0.05)
        assert m2.alpha == pytest.approx(m1.alpha, abs=0.01)
        assert m2.beta == pytest.approx(m1.beta, abs=0.01)

    def test_iid_data_low_arch(self):
        r = np.random.default_rng(11).standard_normal(3000) * 0.01
        m = garch_fit(r)
        assert m.alpha + m.beta < 0.9995
        assert m.alpha < 0.15

    def test_gjr_gamma_near_zero_on_symmetric_data(self):
        r = simulate_garch(GarchSimSpec(1e-5, 0.1, 0.85, length=4000, seed=13)).returns
        m = garch_fit(r, flavor="gjr")
        assert m.flavor == "gjr"
        assert abs(m.gamma) < 0.1

    def test_gjr_recovers_asymmetry(self):
        r = simulate_garch(GarchSimSpec(1e-5, 0.03, 0.85, gamma=0.12,
                                        length=6000, seed=17)).returns
        m = garch_fit(r, flavor="gjr")
        assert m.gamma > 0.04

    def test_too_few_returns(self):
        with pytest.raises(DataError):
            garch_fit(np.ones(20) * 0.01)

    def test_deterministic_refit(self):
        r = simulate_garch(GarchSimSpec(1e-5, 0.1, 0.85, length=800, seed=21)).returns
        assert garch_fit(r) == garch_fit(r)


class TestModelValidation:
    def test_nonstationary_rejected(self):
        with pytest.raises(DataError, match="stationarity"):
            GarchModel(1e-5, 0.5, 0.6, 0.0, 0.0, 0.0)

    def test_negative_omega_rejected(self):
        with pytest.raises(DataError):
            GarchModel(-1e-5, 0.1, 0.8, 0.0, 0.0, 0.0)

    def test_gjr_persistence_counts_half_gamma(self):
        m = GarchModel(1e-5, 0.05, 0.8, 0.1, 0.0, 0.0, flavor="gjr")
        assert m.persistence == pytest.approx(0.9)

    def test_dump_contains_parameters(self):
        m = GarchModel(1e-5, 0.1, 0.8, 0.0, 0.0, -123.0)
        d = m.dump()
        assert "model=garch" in d and "omega=1e-05" in d and "beta=0.8" in d
