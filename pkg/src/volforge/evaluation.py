"""Forecast accuracy metrics, the Diebold-Mariano test and parametric VaR.

Report rows follow the result-table conventions: MSE scaled by 1e5, RMSE and
MAE by 1e3, MAPE in percent, pairwise DM statistics against a reference
model for both squared and absolute loss, and a 10-day 95% normal VaR from
each model's last forecast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm
from scipy.stats import t as student_t

from .errors import DataError

LOSSES = ("squared", "absolute")
ALTERNATIVES = ("two_sided", "greater", "less")


@dataclass(frozen=True)
class ForecastRecord:
    model_id: str
    actual: np.ndarray
    predicted: np.ndarray
    horizon: int = 1

    def __post_init__(self):
        a = np.asarray(self.actual, dtype=float)
        p = np.asarray(self.predicted, dtype=float)
        if a.shape != p.shape or a.ndim != 1:
            raise DataError("actual and predicted must be 1-d arrays of equal length")
        if len(a) < 2:
            raise DataError("forecast record needs at least 2 observations")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(p))):
            raise DataError("forecast record contains NaN or inf")
        object.__setattr__(self, "actual", a)
        object.__setattr__(self, "predicted", p)
        a.setflags(write=False)
        p.setflags(write=False)

    def __len__(self) -> int:
        return len(self.actual)


def point_metrics(rec: ForecastRecord, want_mape: bool = True) -> dict:
    """MSE, RMSE, MAE and (when all actuals are nonzero) MAPE."""
    e = rec.actual - rec.predicted
    mse = float(np.mean(e * e))
    out = {"MSE": mse, "RMSE": math.sqrt(mse), "MAE": float(np.mean(np.abs(e)))}
    if want_mape:
        if np.any(rec.actual == 0):
            raise DataError("MAPE undefined: actual contains zeros "
                            "(other metrics available with want_mape=False)")
        out["MAPE"] = float(100.0 * np.mean(np.abs(e) / np.abs(rec.actual)))
    return out


@dataclass(frozen=True)
class DmResult:
    statistic: float
    p_value: float
    loss: str
    harvey_adjusted: bool
    alternative: str


def dm_test(rec1: ForecastRecord, rec2: ForecastRecord, loss: str = "squared",
            alternative: str = "two_sided", harvey: bool = True) -> DmResult:
    """Diebold-Mariano test on d_t = L(e1_t) - L(e2_t) at horizon 1.

    The long-run variance truncates at lag h-1 = 0 (plain sample variance of
    d with 1/T normalization); the Harvey small-sample factor multiplies the
    statistic and the p-value comes from Student-t with T-1 dof.
    """
    if loss not in LOSSES:
        raise DataError(f"loss must be one of {LOSSES}")
    if alternative not in ALTERNATIVES:
        raise DataError(f"alternative must be one of {ALTERNATIVES}")
    if len(rec1) != len(rec2):
        raise DataError("records have mismatched lengths")
    if not np.array_equal(rec1.actual, rec2.actual):
        raise DataError("records do not share the same evaluation window")
    t_len = len(rec1)
    if t_len < 10:
        raise DataError(f"need at least 10 observations, got {t_len}")
    e1 = rec1.actual - rec1.predicted
    e2 = rec2.actual - rec2.predicted
    if loss == "squared":
        d = e1 * e1 - e2 * e2
    else:
        d = np.abs(e1) - np.abs(e2)
    d_bar = float(np.mean(d))
    gamma0 = float(np.mean((d - d_bar) ** 2))
    if gamma0 == 0:
        raise DataError("indistinguishable forecasts: zero variance of the loss differential")
    stat = d_bar / math.sqrt(gamma0 / t_len)
    h = 1
    if harvey:
        stat *= math.sqrt((t_len + 1 - 2 * h + h * (h - 1) / t_len) / t_len)
    dof = t_len - 1
    if alternative == "two_sided":
        p = 2.0 * float(student_t.sf(abs(stat), dof))
    elif alternative == "greater":
        p = float(student_t.sf(stat, dof))
    else:
        p = float(student_t.cdf(stat, dof))
    return DmResult(stat, p, loss, harvey, alternative)


def var_estimate(sigma_forecast: float, horizon_periods: int = 10,
                 confidence: float = 0.95) -> float:
    """Parametric-normal VaR on unit notional, scaled by sqrt horizon."""
    if sigma_forecast < 0:
        raise DataError("sigma_forecast must be non-negative")
    if not (0.5 < confidence < 1.0):
        raise DataError(f"confidence {confidence} outside (0.5, 1)")
    if horizon_periods < 1:
        raise DataError("horizon_periods must be >= 1")
    z = float(norm.ppf(confidence))
    return z * sigma_forecast * math.sqrt(horizon_periods)


@dataclass(frozen=True)
class ReportRow:
    model_id: str
    mse: float
    rmse: float
    mae: float
    mape: float            # nan when actuals contain zeros
    dm_squared: object     # DmResult or None for the reference model
    dm_absolute: object
    var_10d: float
    best_mse: bool = False
    best_mae: bool = False


@dataclass(frozen=True)
class EvalReport:
    rows: tuple
    reference: str
    failures: tuple = ()

    def model_ids(self):
        return [r.model_id for r in self.rows]


def build_report(records, reference: str, var_horizon: int = 10,
                 var_confidence: float = 0.95, failures=()) -> EvalReport:
    """One row per model, DM columns against the reference model.

    All records must share an identical evaluation window (same actuals).
    """
    records = list(records)
    if not records:
        raise DataError("no forecast records")
    by_id = {r.model_id: r for r in records}
    if reference not in by_id:
        raise DataError(f"reference model {reference!r} not among records")
    base = records[0].actual
    for r in records[1:]:
        if len(r.actual) != len(base) or not np.array_equal(r.actual, base):
            raise DataError(f"record {r.model_id!r} does not share the evaluation window")
    ref = by_id[reference]
    rows = []
    for rec in records:
        m = point_metrics(rec, want_mape=not np.any(rec.actual == 0))
        if rec.model_id == reference:
            dm_sq = dm_abs = None
        else:
            try:
                dm_sq = dm_test(rec, ref, loss="squared")
            except DataError:
                dm_sq = None
            try:
                dm_abs = dm_test(rec, ref, loss="absolute")
            except DataError:
                dm_abs = None
        rows.append(ReportRow(rec.model_id, m["MSE"], m["RMSE"], m["MAE"],
                              m.get("MAPE", math.nan), dm_sq, dm_abs,
                              var_estimate(float(rec.predicted[-1]), var_horizon,
                                           var_confidence)))
    best_mse = min(r.mse for r in rows)
    best_mae = min(r.mae for r in rows)
    rows = [ReportRow(r.model_id, r.mse, r.rmse, r.mae, r.mape, r.dm_squared,
                      r.dm_absolute, r.var_10d,
                      best_mse=r.mse == best_mse, best_mae=r.mae == best_mae)
            for r in rows]
    return EvalReport(tuple(rows), reference, tuple(failures))


def _fmt_dm(dm) -> tuple:
    if dm is None:
        return "***", "***"
    return f"{dm.statistic:.6f}", f"{dm.p_value:.6f}"


def report_csv(report: EvalReport) -> str:
    """Machine-readable report with the table scaling conventions applied."""
    lines = ["model,mse_e05,rmse_e03,mae_e03,mape,dm_stat_squared,dm_p_squared,"
             "dm_stat_absolute,dm_p_absolute,var_10d,best_mse,best_mae"]
    for r in report.rows:
        sq_s, sq_p = _fmt_dm(r.dm_squared)
        ab_s, ab_p = _fmt_dm(r.dm_absolute)
        mape = "" if math.isnan(r.mape) else f"{r.mape:.6f}"
        lines.append(
            f"{r.model_id},{r.mse * 1e5:.6f},{r.rmse * 1e3:.6f},{r.mae * 1e3:.6f},"
            f"{mape},{sq_s},{sq_p},{ab_s},{ab_p},{r.var_10d:.6f},"
            f"{int(r.best_mse)},{int(r.best_mae)}")
    for model_id, reason in report.failures:
        lines.append(f"{model_id},FAILED: {reason},,,,,,,,,,")
    return "\n".join(lines) + "\n"


def report_text(report: EvalReport) -> str:
    """Aligned plain-text rendering of the same rows."""
    header = ["Model", "MSE(e-05)", "RMSE(e-03)", "MAE(e-03)", "MAPE",
              "DM(sq)", "p(sq)", "DM(abs)", "p(abs)", "VaR 10d"]
    table = [header]
    for r in report.rows:
        sq_s, sq_p = _fmt_dm(r.dm_squared)
        ab_s, ab_p = _fmt_dm(r.dm_absolute)
        flag = "*" if r.best_mse or r.best_mae else ""
        mape = "--" if math.isnan(r.mape) else f"{r.mape:.4f}"
        table.append([r.model_id + flag, f"{r.mse * 1e5:.4f}", f"{r.rmse * 1e3:.4f}",
                      f"{r.mae * 1e3:.4f}", mape, sq_s, sq_p, ab_s, ab_p,
                      f"{r.var_10d:.4f}"])
    for model_id, reason in report.failures:
        table.append([model_id, f"FAILED: {reason}"] + [""] * 8)
    widths = [max(len(row[i]) if i < len(row) else 0 for row in table)
              for i in range(len(header))]
    out = []
    for row in table:
        out.append("  ".join(c.ljust(widths[i]) for i, c in enumerate(row)).rstrip())
    return "\n".join(out) + "\n"
