"""GARCH(1,1) and GJR-GARCH(1,1) by constrained Gaussian maximum likelihood.

The mean is the sample mean of the training returns, fixed before the
variance MLE (two-step).  Covariance stationarity is enforced through a
smooth reparameterization: total persistence is a squashed share below 1,
split between the ARCH, asymmetry and GARCH terms by a softmax, so the
simplex optimizer runs unconstrained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError, FitError
from .simplex import minimize_simplex

_LOG_2PI = math.log(2.0 * math.pi)
_MAX_PERSISTENCE = 0.9995


@dataclass(frozen=True)
class GarchModel:
    omega: float
    alpha: float
    beta: float
    gamma: float
    mu: float
    loglik: float
    flavor: str = "garch"                     # "garch" or "gjr"
    returns_per_bucket: Optional[int] = None  # M used to bridge to rv units

    def __post_init__(self):
        if self.omega <= 0 or self.alpha < 0 or self.beta < 0:
            raise DataError("require omega > 0, alpha >= 0, beta >= 0")
        if self.flavor not in ("garch", "gjr"):
            raise DataError(f"unknown flavor {self.flavor!r}")
        if self.persistence >= 1:
            raise DataError(f"persistence {self.persistence} violates stationarity")

    @property
    def persistence(self) -> float:
        return self.alpha + self.beta + 0.5 * self.gamma

    def dump(self) -> str:
        return (f"model={self.flavor}\nomega={self.omega!r}\nalpha={self.alpha!r}\n"
                f"beta={self.beta!r}\ngamma={self.gamma!r}\nmu={self.mu!r}\n"
                f"loglik={self.loglik!r}\n")


def variance_path(returns, omega, alpha, beta, gamma, mu, sigma2_0=None) -> np.ndarray:
    """Conditional-variance recursion; sigma2[0] defaults to the sample variance."""
    r = np.asarray(returns, dtype=float)
    eps = r - mu
    sigma2 = np.empty(len(r))
    sigma2[0] = float(np.var(r)) if sigma2_0 is None else float(sigma2_0)
    if sigma2[0] <= 0:
        raise DataError("zero-variance returns; GARCH undefined")
    for t in range(1, len(r)):
        shock = alpha + (gamma if eps[t - 1] < 0 else 0.0)
        sigma2[t] = omega + shock * eps[t - 1] ** 2 + beta * sigma2[t - 1]
    if np.any(sigma2 <= 0):
        raise FitError("non-positive conditional variance in recursion")
    return sigma2


def garch_loglik(params, returns) -> float:
    """Gaussian log-likelihood of (omega, alpha, beta, gamma, mu) on returns."""
    omega, alpha, beta, gamma, mu = params
    r = np.asarray(returns, dtype=float)
    if len(r) < 10:
        raise DataError("need at least 10 returns for the likelihood")
    sigma2 = variance_path(r, omega, alpha, beta, gamma, mu)
    eps = r - mu
    return float(-0.5 * np.sum(_LOG_2PI + np.log(sigma2) + eps * eps / sigma2))


def _sigmoid(v):
    # stable on both tails; plain 1/(1+exp(-v)) overflows below about -709
    if v >= 0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


def _softmax3(a, b):
    m = max(a, b, 0.0)
    ea, eb, ec = math.exp(a - m), math.exp(b - m), math.exp(-m)
    s = ea + eb + ec
    return ea / s, eb / s


def _unpack(x, flavor, include_gamma):
    # x = [log omega, persistence logit, share logits...]
    omega = math.exp(x[0])
    s = _MAX_PERSISTENCE * _sigmoid(x[1])
    if include_gamma:
        wa, wg = _softmax3(x[2], x[3])
        alpha = s * wa
        gamma = 2.0 * s * wg
        beta = s * (1.0 - wa - wg)
    else:
        wa = _sigmoid(x[2])
        alpha = s * wa
        gamma = 0.0
        beta = s * (1.0 - wa)
    return omega, alpha, beta, gamma


def garch_fit(returns, flavor: str = "garch") -> GarchModel:
    """Two-step MLE: mu = sample mean, then simplex over transformed params."""
    r = np.asarray(returns, dtype=float)
    if flavor not in ("garch", "gjr"):
        raise DataError(f"unknown flavor {flavor!r}")
    if len(r) < 30:
        raise DataError(f"need at least 30 returns to fit, got {len(r)}")
    var = float(np.var(r))
    if var <= 0:
        raise FitError("degenerate data: zero return variance")
    mu = float(np.mean(r))
    include_gamma = flavor == "gjr"

    def neg_ll(x):
        omega, alpha, beta, gamma = _unpack(x, flavor, include_gamma)
        try:
            return -garch_loglik((omega, alpha, beta, gamma, mu), r)
        except (FitError, OverflowError):
            return 1e12

    # start at alpha=0.05, beta=0.85 persistence and omega matching the
    # unconditional variance
    s0 = 0.90
    x0 = [math.log(var * (1 - s0)),
          math.log(s0 / _MAX_PERSISTENCE / (1 - s0 / _MAX_PERSISTENCE)),
          math.log((0.05 / s0) / (1 - 0.05 / s0))]
    if include_gamma:
        x0 = x0[:2] + [math.log(0.05 / 0.85), math.log(0.025 / 0.85)]
    x_best, f_best, _ = minimize_simplex(neg_ll, np.array(x0))
    # one polish restart from the incumbent guards against premature collapse
    x_best, f_best, _ = minimize_simplex(neg_ll, x_best)
    if f_best >= 1e12:
        raise FitError("GARCH fit failed to reach a finite likelihood",
                       diagnostics={"x": list(x_best), "neg_ll": f_best})
    omega, alpha, beta, gamma = _unpack(x_best, flavor, include_gamma)
    ll = garch_loglik((omega, alpha, beta, gamma, mu), r)
    return GarchModel(omega, alpha, beta, gamma, mu, ll, flavor)


def garch_step(model: GarchModel, r_prev: float, sigma2_prev: float) -> float:
    """Next conditional variance from the last return and variance."""
    eps = r_prev - model.mu
    shock = model.alpha + (model.gamma if eps < 0 else 0.0)
    return model.omega + shock * eps * eps + model.beta * sigma2_prev


def garch_forecast(model: GarchModel, r_prev: float, sigma2_prev: float) -> float:
    """1-step rv forecast: sqrt(per-return variance x returns per bucket)."""
    if model.returns_per_bucket is None:
        raise DataError("returns_per_bucket (M) not set on the model; "
                        "set it to 1 for per-bucket return fitting")
    if sigma2_prev <= 0:
        raise DataError("sigma2_prev must be positive")
    sigma2_next = garch_step(model, r_prev, sigma2_prev)
    return math.sqrt(sigma2_next * model.returns_per_bucket)


def with_bucket_scale(model: GarchModel, m: int) -> GarchModel:
    return GarchModel(model.omega, model.alpha, model.beta, model.gamma,
                      model.mu, model.loglik, model.flavor, returns_per_bucket=m)


def garch_forecast_path(model: GarchModel, returns, start: int, stop: int) -> np.ndarray:
    """Rolling 1-step rv forecasts for indices [start, stop).

    forecast[t] uses returns up to t-1 via the full variance recursion; the
    recursion is seeded with the variance of the pre-start returns so no
    future observation leaks into the initialization.
    """
    r = np.asarray(returns, dtype=float)
    sigma2_0 = float(np.var(r[:start])) if start > 1 else None
    sigma2 = variance_path(r, model.omega, model.alpha, model.beta, model.gamma,
                           model.mu, sigma2_0=sigma2_0)
    out = np.empty(stop - start)
    for t in range(start, stop):
        out[t - start] = garch_forecast(model, r[t - 1], sigma2[t - 1])
    return out
