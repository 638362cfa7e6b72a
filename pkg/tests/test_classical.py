import math

import numpy as np
import pytest

from volforge.classical import (ArimaModel, HarModel, arima_fit, arima_forecast,
                                arima_order_select, default_har_lag_grid,
                                ewma_fit, ewma_forecasts, ewma_step, har_design,
                                har_fit, har_forecast, har_lag_search,
                                naive_forecast, rolling_forecasts)
from volforge.errors import DataError
from volforge.synth import simulate_log_vol_cascade


class TestNaive:
    def test_last_element(self):
        assert naive_forecast([0.1, 0.2, 0.3]) == 0.3

    def test_singleton(self):
        assert naive_forecast([0.5]) == 0.5

    def test_constant(self):
        assert naive_forecast([0.07] * 10) == 0.07

    def test_empty_errors(self):
        with pytest.raises(DataError):
            naive_forecast([])


class TestEwmaStep:
    def test_alpha_one_keeps_variance(self):
        assert ewma_step(0.04, 123.0, 1.0) == 0.04

    def test_alpha_near_zero_tracks_return(self):
        assert ewma_step(0.04, 0.1, 1e-12) == pytest.approx(0.01, rel=1e-9)

    def test_direct_substitution(self):
        # 0.5*0.04 + 0.5*0.01
        assert ewma_step(0.04, 0.1, 0.5) == pytest.approx(0.025, abs=1e-15)

    def test_alpha_out_of_range(self):
        with pytest.raises(DataError):
            ewma_step(0.04, 0.1, 0.0)
        with pytest.raises(DataError):
            ewma_step(0.04, 0.1, 1.5)

    def test_alpha_one_constant_forecast_path(self):
        fc = ewma_forecasts(np.array([0.1, 0.9, 0.3, 0.7]), 1.0, 0.04)
        np.testing.assert_allclose(fc, 0.2)


class TestEwmaFit:
    def test_constant_series_tie_breaks_to_smallest_alpha(self):
        train = np.full(50, 0.02)
        valid = np.full(20, 0.02)
        model = ewma_fit(train, valid, "MSE", grid=[0.3, 0.1, 0.7])
        assert model.alpha == 0.1

    def test_argmin_matches_exhaustive_oracle(self):
        rv = simulate_log_vol_cascade(-0.4, 0.35, 0.3, 0.25, noise_sd=0.3,
                                      length=400, seed=11).rv
        train, valid = rv[:300], rv[300:]
        grid = np.round(np.arange(0.01, 1.0, 0.01), 2)
        model = ewma_fit(train, valid, "MAE", grid=grid)
        # independent exhaustive loop
        sigma2_0 = np.mean(train ** 2)
        best_a, best_v = None, math.inf
        for a in grid:
            s2 = sigma2_0
            fc = []
            for v in rv:
                fc.append(math.sqrt(s2))
                s2 = a * s2 + (1 - a) * v * v
            val = float(np.mean(np.abs(valid - np.array(fc[300:]))))
            if val < best_v:
                best_a, best_v = float(a), val
        assert model.alpha == best_a
        logged = dict(model.search_log)
        assert logged[best_a] == pytest.approx(best_v, rel=1e-12)

    def test_empty_validation_errors(self):
        with pytest.raises(DataError):
            ewma_fit(np.full(10, 0.02), np.array([]), "MSE", grid=[0.5])


class TestHar:
    def test_constant_series_predicts_constant(self):
        rv = np.full(60, 0.015)
        model = har_fit(rv)
        assert har_forecast(model, rv) == pytest.approx(0.015, rel=1e-8)

    def test_zero_noise_recovery(self):
        rv = simulate_log_vol_cascade(-0.2, 0.4, 0.3, 0.28, noise_sd=0.0,
                                      length=80, seed=5, burn_in=0, init_sd=2.0).rv
        model = har_fit(rv)
        assert model.c == pytest.approx(-0.2, abs=1e-8)
        assert model.beta_d == pytest.approx(0.4, abs=1e-8)
        assert model.beta_w == pytest.approx(0.3, abs=1e-8)
        assert model.beta_m == pytest.approx(0.28, abs=1e-8)

    def test_zero_noise_forecasts_match_generator(self):
        rv = simulate_log_vol_cascade(-0.2, 0.4, 0.3, 0.28, noise_sd=0.0,
                                      length=90, seed=5, burn_in=0, init_sd=2.0).rv
        model = har_fit(rv[:80])
        for t in range(80, 90):
            assert har_forecast(model, rv[:t]) == pytest.approx(rv[t], rel=1e-6)

    def test_forecast_trivial_coefficients(self):
        model = HarModel((1, 5, 22), 0.0, 0.0, 0.0, 0.0)
        assert har_forecast(model, np.full(30, 0.5)) == pytest.approx(1.0)
        ident = HarModel((1, 5, 22), 0.0, 1.0, 0.0, 0.0)
        hist = np.linspace(0.01, 0.02, 30)
        assert har_forecast(ident, hist) == pytest.approx(hist[-1])

    def test_insufficient_history_errors(self):
        model = HarModel((1, 5, 22), 0.0, 1.0, 0.0, 0.0)
        with pytest.raises(DataError):
            har_forecast(model, np.full(10, 0.5))

    def test_too_few_rows_errors(self):
        with pytest.raises(DataError):
            har_fit(np.full(25, 0.01))

    def test_normal_equations_residual(self):
        rv = simulate_log_vol_cascade(-0.4, 0.35, 0.3, 0.25, noise_sd=0.3,
                                      length=300, seed=2).rv
        model = har_fit(rv)
        X, y = har_design(rv, model.lags)
        beta = np.array([model.c, model.beta_d, model.beta_w, model.beta_m])
        resid = np.linalg.norm(X.T @ (y - X @ beta)) / np.linalg.norm(X.T @ y)
        assert resid < 1e-8

    def test_scale_invariance_of_slopes(self):
        rv = simulate_log_vol_cascade(-0.4, 0.35, 0.3, 0.25, noise_sd=0.3,
                                      length=300, seed=4).rv
        m1 = har_fit(rv)
        m2 = har_fit(rv * 7.5)
        assert m2.beta_d == pytest.approx(m1.beta_d, abs=1e-8)
        assert m2.beta_w == pytest.approx(m1.beta_w, abs=1e-8)
        assert m2.beta_m == pytest.approx(m1.beta_m, abs=1e-8)


class TestHarLagSearch:
    def test_singleton_grid(self):
        rv = simulate_log_vol_cascade(-0.4, 0.35, 0.3, 0.25, noise_sd=0.3,
                                      length=300, seed=6).rv
        model = har_lag_search(rv[:250], rv[250:], "MSE", [(1, 5, 22)])
        assert model.lags == (1, 5, 22)

    def test_argmin_matches_logged_table(self):
        rv = simulate_log_vol_cascade(-0.4, 0.35, 0.3, 0.25, noise_sd=0.3,
                                      length=400, seed=8).rv
        grid = [(1, 5, 22), (1, 8, 30), (2, 10, 40), (3, 12, 60)]
        model = har_lag_search(rv[:320], rv[320:], "MSE", grid)
        log = dict(model.search_log)
        assert set(log) == set(grid)
        assert model.lags == min(grid, key=lambda l: (log[l], l))

    def test_empty_grid_errors(self):
        with pytest.raises(DataError):
            har_lag_search(np.full(100, 0.01), np.full(10, 0.01), "MSE", [])

    def test_default_grid_ordering(self):
        grid = default_har_lag_grid()
        assert all(d < w < m for d, w, m in grid)
        assert max(m for _, _, m in grid) >= 110


class TestArima:
    def test_random_walk_no_params(self):
        y = np.cumsum(np.random.default_rng(0).standard_normal(200))
        model = arima_fit(y, (0, 1, 0))
        assert model.phi == () and model.theta == ()
        assert arima_forecast(model, y) == pytest.approx(y[-1])

    def test_ar1_recovery(self):
        rng = np.random.default_rng(1)
        y = np.zeros(2000)
        for t in range(1, 2000):
            y[t] = 0.7 * y[t - 1] + 1e-4 * rng.standard_normal()
        model = arima_fit(y, (1, 0, 0))
        # sampling error for T=2000 is about 0.016 one sigma
        assert model.phi[0] == pytest.approx(0.7, abs=0.05)

    def test_ar1_hand_forecast(self):
        model = ArimaModel((1, 0, 0), (0.5,), (), 0.0, 1.0, 0.0)
        assert arima_forecast(model, [0.0, 1.0, 2.0]) == pytest.approx(1.0)

    def test_ma1_matches_reference_recursion(self):
        rng = np.random.default_rng(3)
        y = rng.standard_normal(50)
        theta = 0.4
        model = ArimaModel((0, 0, 1), (), (theta,), 0.0, 1.0, 0.0)
        # independent recursion: a_t = y_t + theta*a_{t-1}, a_0 pre-sample = 0
        a = 0.0
        for v in y:
            a = v + theta * a
        assert arima_forecast(model, y) == pytest.approx(-theta * a, abs=1e-10)

    def test_stationarity_of_fit(self):
        rng = np.random.default_rng(5)
        y = np.zeros(500)
        for t in range(1, 500):
            y[t] = 0.95 * y[t - 1] + rng.standard_normal()
        model = arima_fit(y, (2, 0, 1))
        roots = np.roots(np.concatenate(([1.0], -np.asarray(model.phi))))
        assert np.all(np.abs(roots) < 1.0)  # companion roots inside => AR roots outside

    def test_loglik_improves_over_start(self):
        rng = np.random.default_rng(6)
        y = np.zeros(400)
        for t in range(1, 400):
            y[t] = 0.6 * y[t - 1] + rng.standard_normal()
        from volforge.classical import _css_loglik
        model = arima_fit(y, (1, 0, 0))
        ll_start, _ = _css_loglik(y, float(np.mean(y)), np.zeros(1), np.zeros(0))
        assert model.loglik >= ll_start

    def test_insufficient_history_forecast_errors(self):
        model = ArimaModel((2, 1, 0), (0.1, 0.1), (), 0.0, 1.0, 0.0)
        with pytest.raises(DataError):
            arima_forecast(model, [1.0, 2.0])


class TestArimaOrderSelect:
    def test_singleton(self):
        y = np.random.default_rng(0).standard_normal(200)
        assert arima_order_select(y, [(0, 0, 1)]) == (0, 0, 1)

    def test_white_noise_matches_aic_oracle(self):
        y = np.random.default_rng(12).standard_normal(300)
        candidates = [(0, 0, 0), (1, 0, 0)]
        chosen = arima_order_select(y, candidates)
        # oracle: recompute AIC per candidate from the fitted logliks
        aics = {}
        for order in candidates:
            m = arima_fit(y, order)
            aics[order] = 2 * (order[0] + order[2] + 1) - 2 * m.loglik
        assert chosen == min(candidates, key=lambda o: (aics[o], o[0] + o[2], o))

    def test_ar1_beats_white_noise_on_ar1_data(self):
        rng = np.random.default_rng(9)
        y = np.zeros(500)
        for t in range(1, 500):
            y[t] = 0.7 * y[t - 1] + rng.standard_normal()
        assert arima_order_select(y, [(0, 0, 0), (1, 0, 0)]) == (1, 0, 0)

    def test_empty_candidates(self):
        with pytest.raises(DataError):
            arima_order_select(np.zeros(100), [])


class TestDeterminism:
    def test_repeatable_fits_and_forecasts(self):
        rv = simulate_log_vol_cascade(-0.4, 0.35, 0.3, 0.25, noise_sd=0.3,
                                      length=300, seed=10).rv
        m1, m2 = har_fit(rv), har_fit(rv)
        assert m1 == m2
        a1 = arima_fit(rv, (1, 0, 1))
        a2 = arima_fit(rv, (1, 0, 1))
        assert a1 == a2
        f1 = rolling_forecasts(lambda h: har_forecast(m1, h), rv, 250, 300)
        f2 = rolling_forecasts(lambda h: har_forecast(m2, h), rv, 250, 300)
        np.testing.assert_array_equal(f1, f2)


class TestDumps:
    def test_har_dump_format(self):
        model = HarModel((1, 5, 22), 0.1, 0.2, 0.3, 0.4)
        dump = model.dump()
        assert "model=har" in dump and "lags=1,5,22" in dump and "beta_d=0.2" in dump

    def test_arima_dump_format(self):
        model = ArimaModel((1, 0, 1), (0.5,), (0.2,), 0.01, 1.0, -12.0)
        dump = model.dump()
        assert "model=arima" in dump and "order=1,0,1" in dump
