"""Naive, EWMA, HAR and ARIMA forecasters.

Every model follows the same contract: a pure ``*_fit`` over the training
window returning an immutable model value, and a pure ``*_forecast`` mapping
a history to the next 1-step-ahead rv.  Search procedures (EWMA alpha grid,
HAR lag grid) keep a complete candidate/metric log so an exhaustive replay
can verify the returned argmin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, FitError
from .series import aggregate_log_rv
from .simplex import minimize_simplex


def _loss(metric: str, actual: np.ndarray, predicted: np.ndarray) -> float:
    err = np.asarray(actual, dtype=float) - np.asarray(predicted, dtype=float)
    if metric == "MSE":
        return float(np.mean(err * err))
    if metric == "MAE":
        return float(np.mean(np.abs(err)))
    raise DataError(f"unknown selection metric {metric!r}, expected MSE or MAE")


# ---------------------------------------------------------------------------
# Naive
# ---------------------------------------------------------------------------

def naive_forecast(history) -> float:
    """Last observed value carried forward."""
    history = np.asarray(history, dtype=float)
    if len(history) == 0:
        raise DataError("naive forecast needs a non-empty history")
    return float(history[-1])


# ---------------------------------------------------------------------------
# EWMA
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EwmaModel:
    alpha: float
    sigma2_0: float
    search_log: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not (0 < self.alpha <= 1):
            raise DataError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.sigma2_0 <= 0:
            raise DataError("sigma2_0 must be positive")

    def dump(self) -> str:
        return f"model=ewma\nalpha={self.alpha!r}\nsigma2_0={self.sigma2_0!r}\n"


def ewma_step(sigma2_prev: float, r_prev: float, alpha: float) -> float:
    """One variance update: alpha weights the previous variance, as printed."""
    if not (0 < alpha <= 1):
        raise DataError(f"alpha must be in (0, 1], got {alpha}")
    if sigma2_prev < 0:
        raise DataError("sigma2_prev must be non-negative")
    return alpha * sigma2_prev + (1.0 - alpha) * r_prev * r_prev

def ewma_forecasts(values, alpha: float, sigma2_0: float) -> np.ndarray:
    """1-step rv forecasts over a series driven by its own squared values.

    forecast[t] uses data up to t-1 only; forecast[0] = sqrt(sigma2_0).
    """
    values = np.asarray(values, dtype=float)
    out = np.empty(len(values))
    sigma2 = sigma2_0
    for t in range(len(values)):
        out[t] = math.sqrt(sigma2)
        sigma2 = ewma_step(sigma2, values[t], alpha)
    return out


def ewma_fit(train, valid, metric: str = "MSE", grid=None) -> EwmaModel:
    """Grid-search alpha against 1-step forecasts on the validation window.

    Ties break toward the smaller alpha; sigma2_0 is the mean squared
    training rv.
    """
    train = np.asarray(train, dtype=float)
    valid = np.asarray(valid, dtype=float)
    if len(valid) == 0:
        raise DataError("ewma_fit needs a non-empty validation window")
    if grid is None:
        grid = np.round(np.arange(0.01, 1.00, 0.01), 2)
    grid = sorted(float(a) for a in grid)
    if not grid:
        raise DataError("alpha grid is empty")
    for a in grid:
        if not (0 < a <= 1):
            raise DataError(f"grid alpha {a} outside (0, 1]")
    sigma2_0 = float(np.mean(train * train))
    if sigma2_0 <= 0:
        raise DataError("training rv is identically zero; EWMA undefined")
    full = np.concatenate([train, valid])
    log = []
    best_alpha, best_val = None, math.inf
    for a in grid:
        fc = ewma_forecasts(full, a, sigma2_0)[len(train):]
        val = _loss(metric, valid, fc)
        log.append((a, val))
        if val < best_val:
            best_alpha, best_val = a, val
    return EwmaModel(best_alpha, sigma2_0, search_log=tuple(log))


# ---------------------------------------------------------------------------
# HAR
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HarModel:
    lags: tuple          # (d, w, m), d < w < m
    c: float
    beta_d: float
    beta_w: float
    beta_m: float
    fit_residual_variance: float = 0.0
    search_log: tuple = field(default=(), compare=False)

    def __post_init__(self):
        d, w, m = self.lags
        if not (0 < d < w < m):
            raise DataError(f"lags must satisfy 0 < d < w < m, got {self.lags}")
        for v in (self.c, self.beta_d, self.beta_w, self.beta_m):
            if not math.isfinite(v):
                raise DataError("HAR coefficients must be finite")

    def dump(self) -> str:
        d, w, m = self.lags
        return (f"model=har\nlags={d},{w},{m}\nc={self.c!r}\n"
                f"beta_d={self.beta_d!r}\nbeta_w={self.beta_w!r}\nbeta_m={self.beta_m!r}\n"
                f"residual_variance={self.fit_residual_variance!r}\n")


def har_design(values, lags):
    """Regression rows [1, mean-log over d, w, m] and next-step log targets."""
    values = np.asarray(values, dtype=float)
    d, w, m = lags
    if not (0 < d < w < m):
        raise DataError(f"lags must satisfy 0 < d < w < m, got {lags}")
    n = len(values)
    if n < m + 2:
        raise DataError(f"need at least {m + 2} observations for lags {lags}, got {n}")
    agg_d = aggregate_log_rv(values, d)
    agg_w = aggregate_log_rv(values, w)
    agg_m = aggregate_log_rv(values, m)
    ts = np.arange(m - 1, n - 1)
    X = np.column_stack([
        np.ones(len(ts)),
        agg_d[ts - (d - 1)],
        agg_w[ts - (w - 1)],
        agg_m[ts - (m - 1)],
    ])
    y = np.log(values[ts + 1])
    return X, y


def har_fit(train, lags=(1, 5, 22)) -> HarModel:
    """OLS of next-step log rv on averaged log rv over the three horizons.

    Solved via the normal equations with a pseudo-inverse fallback when the
    design is rank deficient (e.g. a constant series).
    """
    X, y = har_design(train, lags)
    if len(y) < 8:
        raise DataError(f"only {len(y)} usable regression rows; need at least 8")
    A = X.T @ X
    b = X.T @ y
    try:
        beta = np.linalg.solve(A, b)
        # reject ill-conditioned solves, not just exact singularity
        if not np.all(np.isfinite(beta)) or np.linalg.cond(A) > 1e12:
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        beta = np.linalg.pinv(X) @ y
    resid = y - X @ beta
    return HarModel(tuple(lags), float(beta[0]), float(beta[1]), float(beta[2]),
                    float(beta[3]), fit_residual_variance=float(np.mean(resid * resid)))


def har_forecast(model: HarModel, history) -> float:
    """exp of the log-space regression prediction; no smearing correction."""
    history = np.asarray(history, dtype=float)
    d, w, m = model.lags
    if len(history) < m:
        raise DataError(f"history of length {len(history)} shorter than longest lag {m}")
    if np.any(history[-m:] <= 0):
        raise DataError("history contains non-positive rv; apply the zero-floor first")
    logs = np.log(history[-m:])
    pred = (model.c
            + model.beta_d * float(np.mean(logs[-d:]))
            + model.beta_w * float(np.mean(logs[-w:]))
            + model.beta_m * float(np.mean(logs[-m:])))
    return float(np.exp(pred))


def rolling_forecasts(forecast_fn, values, start: int, stop: int) -> np.ndarray:
    """1-step forecasts for indices [start, stop) using history up to each index."""
    values = np.asarray(values, dtype=float)
    return np.array([forecast_fn(values[:t]) for t in range(start, stop)])


def har_lag_search(train, valid, metric: str = "MSE", lag_grid=None) -> HarModel:
    """Refit per (d, w, m) candidate, pick the validation-metric argmin.

    Ties break toward the lexicographically smallest lag triple.  Candidates
    whose fit fails (too few rows) are skipped and logged with an inf metric.
    """
    train = np.asarray(train, dtype=float)
    valid = np.asarray(valid, dtype=float)
    if lag_grid is None:
        lag_grid = default_har_lag_grid()
    lag_grid = sorted(tuple(l) for l in lag_grid)
    if not lag_grid:
        raise DataError("empty HAR lag grid")
    full = np.concatenate([train, valid])
    log = []
    best, best_val = None, math.inf
    for lags in lag_grid:
        try:
            model = har_fit(train, lags)
            fc = rolling_forecasts(lambda h: har_forecast(model, h),
                                   full, len(train), len(full))
            val = _loss(metric, valid, fc)
        except (DataError, FitError):
            log.append((lags, math.inf))
            continue
        log.append((lags, val))
        if val < best_val:
            best, best_val = model, val
    if best is None:
        raise FitError("no HAR lag candidate could be fitted")
    return HarModel(best.lags, best.c, best.beta_d, best.beta_w, best.beta_m,
                    best.fit_residual_variance, search_log=tuple(log))


def default_har_lag_grid():
    """Coarse grid consistent with published optimized lags up to ~110."""
    grid = []
    for d in (1, 2, 3):
        for w in range(4, 21, 2):
            for m in range(22, 121, 8):
                if d < w < m:
                    grid.append((d, w, m))
    return grid


# ---------------------------------------------------------------------------
# ARIMA (conditional sum of squares)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArimaModel:
    order: tuple          # (p, d, q)
    phi: tuple
    theta: tuple
    intercept: float
    innovation_variance: float
    loglik: float

    def dump(self) -> str:
        p, d, q = self.order
        return (f"model=arima\norder={p},{d},{q}\n"
                f"phi={','.join(repr(v) for v in self.phi)}\n"
                f"theta={','.join(repr(v) for v in self.theta)}\n"
                f"intercept={self.intercept!r}\n"
                f"innovation_variance={self.innovation_variance!r}\n"
                f"loglik={self.loglik!r}\n")


def _pacf_to_coeffs(u: np.ndarray) -> np.ndarray:
    """Map unconstrained reals to a stationary AR coefficient vector.

    tanh squashes to partial autocorrelations, then the Durbin-Levinson
    recursion expands them; the image is exactly the stationary region.
    """
    r = np.tanh(u)
    k = len(r)
    phi = np.zeros(k)
    for j in range(k):
        prev = phi[:j].copy()
        phi[j] = r[j]
        phi[:j] = prev - r[j] * prev[::-1]
    return phi


def _css_residuals(z: np.ndarray, c: float, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Residual recursion conditioning on the first p observations.

    Pre-sample residuals are zero; returns residuals for t = p .. n-1.
    """
    p, q = len(phi), len(theta)
    n = len(z)
    a = np.zeros(n)
    for t in range(p, n):
        pred = c
        for i in range(1, p + 1):
            pred += phi[i - 1] * z[t - i]
        for j in range(1, min(q, t - p) + 1):
            pred -= theta[j - 1] * a[t - j]
        a[t] = z[t] - pred
    return a[p:]


def _css_loglik(z: np.ndarray, c: float, phi: np.ndarray, theta: np.ndarray):
    a = _css_residuals(z, c, phi, theta)
    n = len(a)
    sigma2 = float(np.sum(a * a)) / n
    if sigma2 <= 0:
        sigma2 = 1e-300
    ll = -0.5 * n * (math.log(2 * math.pi * sigma2) + 1.0)
    return ll, sigma2


def _difference(y: np.ndarray, d: int) -> np.ndarray:
    z = np.asarray(y, dtype=float)
    for _ in range(d):
        z = np.diff(z)
    return z


def arima_fit(train, order) -> ArimaModel:
    """CSS Gaussian likelihood maximized by the shared simplex optimizer.

    Stationarity and invertibility are enforced through the tanh /
    Durbin-Levinson reparameterization; the intercept is estimated only when
    d = 0 (differenced models carry no drift term).
    """
    p, d, q = order
    if p < 0 or d < 0 or q < 0:
        raise DataError(f"order components must be non-negative, got {order}")
    y = np.asarray(train, dtype=float)
    z = _difference(y, d)
    if len(z) <= 10 * (p + q + 1):
        raise DataError(
            f"need more than {10 * (p + q + 1)} observations after differencing for order {order}, "
            f"got {len(z)}")
    has_c = d == 0
    k = (1 if has_c else 0) + p + q

    def unpack(x):
        idx = 0
        c = x[0] if has_c else 0.0
        idx += 1 if has_c else 0
        phi = _pacf_to_coeffs(x[idx:idx + p])
        theta = _pacf_to_coeffs(x[idx + p:idx + p + q])
        return float(c), phi, theta

    if k == 0:
        ll, sigma2 = _css_loglik(z, 0.0, np.zeros(0), np.zeros(0))
        return ArimaModel(tuple(order), (), (), 0.0, sigma2, ll)

    x0 = np.zeros(k)
    if has_c:
        x0[0] = float(np.mean(z))

    def neg_ll(x):
        c, phi, theta = unpack(x)
        ll, _ = _css_loglik(z, c, phi, theta)
        return -ll

    x_best, f_best, _ = minimize_simplex(neg_ll, x0)
    c, phi, theta = unpack(x_best)
    ll, sigma2 = _css_loglik(z, c, phi, theta)
    if not math.isfinite(ll):
        raise FitError("ARIMA CSS fit did not converge",
                       diagnostics={"order": order, "x": x_best.tolist(), "neg_ll": f_best})
    return ArimaModel(tuple(order), tuple(float(v) for v in phi),
                      tuple(float(v) for v in theta), c, sigma2, ll)


def arima_forecast(model: ArimaModel, history) -> float:
    """1-step mean forecast with residuals rebuilt by the CSS recursion."""
    p, d, q = model.order
    y = np.asarray(history, dtype=float)
    if len(y) < p + d + 1:
        raise DataError(f"history of length {len(y)} too short for order {model.order}")
    z = _difference(y, d)
    phi = np.asarray(model.phi)
    theta = np.asarray(model.theta)
    n = len(z)
    a = np.zeros(n)
    if n > p:
        a[p:] = _css_residuals(z, model.intercept, phi, theta)
    pred = model.intercept
    for i in range(1, p + 1):
        pred += phi[i - 1] * z[n - i]
    for j in range(1, q + 1):
        if n - j >= 0:
            pred -= theta[j - 1] * a[n - j]
    # undo the d-fold differencing
    for k in range(1, d + 1):
        pred += (-1) ** (k + 1) * math.comb(d, k) * y[len(y) - k]
    return float(pred)


def arima_order_select(train, candidate_orders) -> tuple:
    """AIC-minimizing order; ties go to fewer parameters, then lexicographic."""
    candidates = list(candidate_orders)
    if not candidates:
        raise DataError("no candidate orders supplied")
    results = []
    for order in candidates:
        try:
            model = arima_fit(train, order)
        except (DataError, FitError):
            continue
        kk = order[0] + order[2] + 1
        aic = 2 * kk - 2 * model.loglik
        results.append((aic, kk, tuple(order)))
    if not results:
        raise FitError("every candidate order failed to fit")
    results.sort()
    return results[0][2]
