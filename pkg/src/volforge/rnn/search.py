"""Window-size and hyperparameter searches over the validation window.

Candidates are trained independently with the same seed and ranked by their
rolling 1-step validation metric.  The complete (candidate, metric) log is
kept on the returned model so the argmin can be replayed exhaustively.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from ..classical import _loss
from ..errors import DataError, FitError
from .config import RnnConfig
from .training import TrainedRnn, rnn_forecast_path, rnn_train


def validation_metric(model: TrainedRnn, train, valid, metric: str) -> float:
    full = np.concatenate([np.asarray(train, dtype=float), np.asarray(valid, dtype=float)])
    fc = rnn_forecast_path(model, full, len(train), len(full))
    return _loss(metric, valid, fc)


def window_search(train, valid, base_config: RnnConfig, window_grid=None,
                  metric: str = "MSE") -> TrainedRnn:
    """Train one model per window size, return the validation argmin.

    Ties break toward the smaller window; the full (window -> metric) curve
    is recorded in ``search_log``.
    """
    if window_grid is None:
        window_grid = range(1, 51)
    grid = sorted(int(w) for w in window_grid)
    if not grid:
        raise DataError("empty window grid")
    log = []
    best, best_val = None, math.inf
    for w in grid:
        try:
            model = rnn_train(train, replace(base_config, window=w))
            val = validation_metric(model, train, valid, metric)
        except (DataError, FitError):
            log.append((w, math.inf))
            continue
        log.append((w, val))
        if val < best_val:
            best, best_val = model, val
    if best is None:
        raise FitError("every window candidate failed to train")
    return TrainedRnn(best.config, best.weights, best.scaler,
                      best.training_loss_curve, search_log=tuple(log))


def hyperparameter_search(train, valid, candidates, metric: str = "MSE",
                          budget: int | None = None) -> TrainedRnn:
    """Evaluate candidate configs in deterministic order, return the argmin.

    ``budget`` caps the number of candidates trained; the log keeps one
    (config, metric) row per evaluated candidate, failures included as inf.
    """
    candidates = list(candidates)
    if budget is None:
        budget = len(candidates)
    if budget <= 0:
        raise DataError("search budget must be >= 1")
    candidates = candidates[:budget]
    if not candidates:
        raise DataError("no candidate configurations")
    log = []
    best, best_val = None, math.inf
    for cfg in candidates:
        try:
            model = rnn_train(train, cfg)
            val = validation_metric(model, train, valid, metric)
        except (DataError, FitError):
            log.append((cfg, math.inf))
            continue
        log.append((cfg, val))
        if val < best_val:
            best, best_val = model, val
    if best is None:
        raise FitError("every hyperparameter candidate failed to train")
    return TrainedRnn(best.config, best.weights, best.scaler,
                      best.training_loss_curve, search_log=tuple(log))


def search_log_csv(log) -> str:
    """`config_id,window,units,layers,loss,optimizer,metric_value` rows."""
    lines = ["config_id,window,units,layers,loss,optimizer,metric_value"]
    for idx, (entry, val) in enumerate(log):
        if isinstance(entry, RnnConfig):
            lines.append(f"{idx},{entry.window},{entry.units},{entry.layers},"
                         f"{entry.loss},{entry.optimizer},{val!r}")
        else:
            lines.append(f"{idx},{entry},,,,,{val!r}")
    return "\n".join(lines) + "\n"
