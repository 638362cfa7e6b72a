"""Experiment orchestration: config parsing, model fitting, rolling
out-of-sample forecasts and report emission.

Refit policy (frozen by default): classical models select their
hyperparameters on the validation window with parameters fit on train, are
refit once on train+validation, and then roll through the test window with
parameters held fixed.  RNN weights are trained once on train, selected on
validation and frozen for test.  ``refit_per_step=true`` switches classical
models to per-step refitting.

GARCH-family models fit per-bucket close-to-close log returns and compare
their conditional standard deviation against rv directly (M = 1 convention,
flagged in the manifest).  For synthetic rv-only sources the bucket returns
are generated as rv_t * z_t with seeded standard normal z.
"""

from __future__ import annotations

import hashlib
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import classical, garch, synth
from .errors import ConfigError, DataError, FitError, VolforgeError
from .evaluation import ForecastRecord, build_report, report_csv, report_text
from .rnn import RnnConfig, rnn_forecast_path, window_search
from .rnn.search import search_log_csv
from .series import (SplitSpec, apply_zero_floor, log_returns,
                     read_price_csv, realized_volatility, split)

CLASSICAL_MODELS = ("naive", "ewma", "har", "har_opt", "arima", "garch", "gjr")
RNN_MODELS = ("lstm", "gru")
ALL_MODELS = CLASSICAL_MODELS + RNN_MODELS


@dataclass(frozen=True)
class ExperimentConfig:
    source: str = "synth"                 # synth | csv
    csv_path: str = ""
    aggregation: str = "day"
    synth_kind: str = "gbm"               # gbm | cascade
    synth_params: tuple = ()              # sorted (key, value) pairs
    validation_len: int = 252
    test_len: int = 252
    models: tuple = ("naive", "har")
    metric: str = "MSE"
    seed: int = 0
    reference: str = ""                   # default: last enabled model
    ewma_grid: tuple = tuple(np.round(np.arange(0.01, 1.00, 0.01), 2))
    har_lags: tuple = (1, 5, 22)
    har_grid: tuple = ()                  # empty -> default grid
    arima_orders: tuple = tuple((p, d, q) for p in range(4) for d in range(2)
                                for q in range(4))
    rnn_windows: tuple = tuple(range(1, 51))
    rnn_units: int = 10
    rnn_layers: int = 1
    rnn_epochs: int = 50
    rnn_batch: int = 32
    rnn_optimizer: str = "adam"
    rnn_lr: float = 0.01
    rnn_loss: str = "MSE"
    rnn_dropout: float = 0.0
    rnn_activation: str = "linear"
    refit_per_step: bool = False

    def __post_init__(self):
        if not self.models:
            raise ConfigError("at least one model must be enabled")
        for m in self.models:
            if m not in ALL_MODELS:
                raise ConfigError(f"unknown model {m!r}, expected one of {ALL_MODELS}")
        if self.source not in ("synth", "csv"):
            raise ConfigError(f"unknown data source {self.source!r}")
        if self.source == "csv" and not self.csv_path:
            raise ConfigError("data.source=csv requires data.csv=<path>")
        if self.metric not in ("MSE", "MAE"):
            raise ConfigError("selection.metric must be MSE or MAE")

    @property
    def reference_model(self) -> str:
        ref = self.reference or self.models[-1]
        if ref not in self.models:
            raise ConfigError(f"reference model {ref!r} not enabled")
        return ref

    def semantic_items(self):
        skip = ()
        for f in sorted(self.__dataclass_fields__):
            if f in skip:
                continue
            yield f, getattr(self, f)

    def hash(self) -> str:
        payload = "\n".join(f"{k}={v!r}" for k, v in self.semantic_items())
        return hashlib.sha256(payload.encode()).hexdigest()


def _parse_scalar(v: str):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    if v.lower() in ("true", "false"):
        return v.lower() == "true"
    return v


def _parse_int_list(v: str):
    out = []
    for part in v.split(","):
        part = part.strip()
        if "-" in part and not part.startswith("-"):
            a, b = part.split("-")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def parse_config(path) -> ExperimentConfig:
    """Flat key=value config with dotted section prefixes; '#' comments."""
    kv = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        kv[k.strip()] = v.strip()
    return config_from_mapping(kv)


def config_from_mapping(kv: dict) -> ExperimentConfig:
    args = {}
    synth_params = {}
    try:
        for k, v in kv.items():
            if k == "data.source":
                args["source"] = v
            elif k == "data.csv":
                args["csv_path"] = v
            elif k == "data.aggregation":
                args["aggregation"] = v
            elif k == "synth.kind":
                args["synth_kind"] = v
            elif k.startswith("synth."):
                synth_params[k[len("synth."):]] = _parse_scalar(v)
            elif k == "split.validation":
                args["validation_len"] = int(v)
            elif k == "split.test":
                args["test_len"] = int(v)
            elif k == "models":
                args["models"] = tuple(m.strip() for m in v.split(",") if m.strip())
            elif k == "selection.metric":
                args["metric"] = v
            elif k == "seed":
                args["seed"] = int(v)
            elif k == "reference":
                args["reference"] = v
            elif k == "ewma.grid":
                lo, hi, step = (float(x) for x in v.split(":"))
                n = int(round((hi - lo) / step)) + 1
                args["ewma_grid"] = tuple(round(lo + i * step, 10) for i in range(n))
            elif k == "har.lags":
                args["har_lags"] = tuple(int(x) for x in v.split(","))
            elif k == "har.grid":
                if v != "default":
                    triples = [tuple(int(x) for x in t.split(",")) for t in v.split(";")]
                    args["har_grid"] = tuple(triples)
            elif k == "arima.orders":
                triples = [tuple(int(x) for x in t.split(",")) for t in v.split(";")]
                args["arima_orders"] = tuple(triples)
            elif k == "rnn.windows":
                args["rnn_windows"] = _parse_int_list(v)
            elif k == "rnn.units":
                args["rnn_units"] = int(v)
            elif k == "rnn.layers":
                args["rnn_layers"] = int(v)
            elif k == "rnn.epochs":
                args["rnn_epochs"] = int(v)
            elif k == "rnn.batch":
                args["rnn_batch"] = int(v)
            elif k == "rnn.optimizer":
                args["rnn_optimizer"] = v
            elif k == "rnn.lr":
                args["rnn_lr"] = float(v)
            elif k == "rnn.loss":
                args["rnn_loss"] = v
            elif k == "rnn.dropout":
                args["rnn_dropout"] = float(v)
            elif k == "rnn.activation":
                args["rnn_activation"] = v
            elif k == "refit_per_step":
                args["refit_per_step"] = v.lower() == "true"
            else:
                raise ConfigError(f"unknown config key {k!r}")
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    if synth_params:
        args["synth_params"] = tuple(sorted(synth_params.items()))
    return ExperimentConfig(**args)


# ---------------------------------------------------------------------------
# Data acquisition
# ---------------------------------------------------------------------------

def _load_data(config: ExperimentConfig):
    """Returns (rv_series, bucket_returns) with bucket_returns[k] the
    close-to-close log return of bucket k+1 (length len(rv) - 1)."""
    if config.source == "csv":
        prices = read_price_csv(config.csv_path)
        rv = realized_volatility(log_returns(prices), config.aggregation)
        closes = _bucket_closes(prices, config.aggregation, rv.period_labels)
        return rv, np.diff(np.log(closes))
    params = dict(config.synth_params)
    if config.synth_kind == "gbm":
        spec = synth.GbmSpec(
            s0=params.get("s0", 100.0), mu=params.get("mu", 0.0),
            sigma=params.get("sigma", 0.2), dt=params.get("dt", 1.0 / (252 * 390)),
            steps_per_bucket=int(params.get("steps_per_bucket", 390)),
            buckets=int(params.get("buckets", 1000)),
            seed=int(params.get("seed", config.seed)))
        prices, _ = synth.simulate_gbm(spec)
        rv = realized_volatility(log_returns(prices), config.aggregation)
        closes = _bucket_closes(prices, config.aggregation, rv.period_labels)
        return rv, np.diff(np.log(closes))
    if config.synth_kind == "cascade":
        rv = synth.simulate_log_vol_cascade(
            c=params.get("c", -0.4), beta_d=params.get("beta_d", 0.35),
            beta_w=params.get("beta_w", 0.3), beta_m=params.get("beta_m", 0.25),
            noise_sd=params.get("noise_sd", 0.3),
            length=int(params.get("length", 3000)),
            seed=int(params.get("seed", config.seed)))
        rng = np.random.default_rng(int(params.get("seed", config.seed)) + 7)
        r = rv.rv[1:] * rng.standard_normal(len(rv) - 1)
        return rv, r
    raise ConfigError(f"unknown synth kind {config.synth_kind!r}")


def _bucket_closes(prices, aggregation, labels):
    from .series import bucket_label
    closes = {}
    for t, p in zip(prices.timestamps, prices.prices):
        closes[bucket_label(int(t), aggregation)] = p
    missing = [l for l in labels if l not in closes]
    if missing:
        raise DataError(f"no closing price for buckets {missing[:3]}")
    return np.array([closes[l] for l in labels])


# ---------------------------------------------------------------------------
# Rolling forecasts
# ---------------------------------------------------------------------------

def _rolling(values, start, stop, forecast_fn):
    """Generic leakage-checked rolling loop: the forecast for index t is
    computed from values[:t] before values[t] is ever touched."""
    out = np.empty(stop - start)
    for t in range(start, stop):
        history = values[:t]
        assert len(history) == t, "leakage: history extends past the forecast point"
        out[t - start] = forecast_fn(history)
    return out


def _fit_and_forecast(model_id, config, values, r_full, v_start, v_stop, t_stop):
    """Returns (validation forecasts, test forecasts, fitted-description)."""
    metric = config.metric
    train = values[:v_start]
    valid = values[v_start:v_stop]
    trainval = values[:v_stop]

    if model_id == "naive":
        fc_v = _rolling(values, v_start, v_stop, classical.naive_forecast)
        fc_t = _rolling(values, v_stop, t_stop, classical.naive_forecast)
        return fc_v, fc_t, "model=naive\n"

    if model_id == "ewma":
        model = classical.ewma_fit(train, valid, metric, config.ewma_grid)
        fc_v = classical.ewma_forecasts(trainval, model.alpha, model.sigma2_0)[v_start:v_stop]
        sigma2_0 = float(np.mean(trainval ** 2))
        fc_t = classical.ewma_forecasts(values, model.alpha, sigma2_0)[v_stop:t_stop]
        return fc_v, fc_t, model.dump()

    if model_id in ("har", "har_opt"):
        if model_id == "har":
            model = classical.har_fit(train, config.har_lags)
        else:
            grid = config.har_grid or classical.default_har_lag_grid()
            model = classical.har_lag_search(train, valid, metric, grid)
        fc_v = _rolling(values, v_start, v_stop,
                        lambda h: classical.har_forecast(model, h))
        refit = (classical.har_fit(trainval, model.lags)
                 if not config.refit_per_step else None)
        if config.refit_per_step:
            fc_t = _rolling(values, v_stop, t_stop,
                            lambda h: classical.har_forecast(
                                classical.har_fit(h, model.lags), h))
            dump = model.dump()
        else:
            fc_t = _rolling(values, v_stop, t_stop,
                            lambda h: classical.har_forecast(refit, h))
            dump = refit.dump()
        return fc_v, fc_t, dump

    if model_id == "arima":
        order = classical.arima_order_select(train, config.arima_orders)
        model = classical.arima_fit(train, order)
        fc_v = _rolling(values, v_start, v_stop,
                        lambda h: classical.arima_forecast(model, h))
        refit = classical.arima_fit(trainval, order)
        fc_t = _rolling(values, v_stop, t_stop,
                        lambda h: classical.arima_forecast(refit, h))
        return fc_v, fc_t, refit.dump()

    if model_id in ("garch", "gjr"):
        flavor = "garch" if model_id == "garch" else "gjr"
        model = garch.with_bucket_scale(garch.garch_fit(r_full[:v_start - 1], flavor), 1)
        fc_v = _garch_path(model, r_full, v_start, v_stop)
        refit = garch.with_bucket_scale(garch.garch_fit(r_full[:v_stop - 1], flavor), 1)
        fc_t = _garch_path(refit, r_full, v_stop, t_stop)
        return fc_v, fc_t, refit.dump() + "returns_per_bucket=1\n"

    if model_id in ("lstm", "gru"):
        base = RnnConfig(cell=model_id, window=config.rnn_windows[0],
                         layers=config.rnn_layers, units=config.rnn_units,
                         dropout=config.rnn_dropout, activation=config.rnn_activation,
                         loss=config.rnn_loss, epochs=config.rnn_epochs,
                         batch_size=config.rnn_batch, optimizer=config.rnn_optimizer,
                         learning_rate=config.rnn_lr, seed=config.seed)
        model = window_search(train, valid, base, config.rnn_windows, metric)
        fc_v = rnn_forecast_path(model, values[:v_stop], v_start, v_stop)
        fc_t = rnn_forecast_path(model, values, v_stop, t_stop)
        dump = (f"model={model_id}\nwindow={model.config.window}\n"
                f"units={model.config.units}\nlayers={model.config.layers}\n")
        return fc_v, fc_t, dump, model
    raise ConfigError(f"unknown model {model_id!r}")


def _garch_path(model, r_full, start, stop):
    """rv forecast for bucket t from the variance recursion through t-1.

    r_full[k] is the return of bucket k+1, so sigma2[t-1] is the conditional
    variance of bucket t.
    """
    sigma2_0 = float(np.var(r_full[:start - 1])) if start > 2 else None
    sigma2 = garch.variance_path(r_full, model.omega, model.alpha, model.beta,
                                 model.gamma, model.mu, sigma2_0=sigma2_0)
    m = model.returns_per_bucket
    return np.sqrt(sigma2[start - 1:stop - 1] * m)


@dataclass(frozen=True)
class RunManifest:
    config_hash: str
    model_params: tuple          # (model_id, dump-text) pairs
    timings: tuple               # (model_id, seconds) pairs
    versions: tuple

    def render(self) -> str:
        lines = [f"config_hash={self.config_hash}"]
        for k, v in self.versions:
            lines.append(f"version.{k}={v}")
        for mid, secs in self.timings:
            lines.append(f"timing.{mid}={secs:.3f}s")
        for mid, dump in self.model_params:
            for line in dump.strip().splitlines():
                lines.append(f"param.{mid}.{line}")
        return "\n".join(lines) + "\n"


def _atomic_write(path: Path, text: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def run_experiment(config: ExperimentConfig, out_dir=None):
    """Fit all enabled models and emit validation/test reports.

    Model failures are isolated: the run continues and the failed model is
    listed in the report's failure section.  Data errors abort the run.
    Returns (validation EvalReport, test EvalReport, RunManifest).
    """
    rv, r_full = _load_data(config)
    spec = SplitSpec(config.validation_len, config.test_len)
    lookback = max([1] + [max(config.har_lags)]
                   + ([max(config.rnn_windows)] if set(config.models) & set(RNN_MODELS) else []))
    train_rv, valid_rv, test_rv = split(rv, spec, min_train=lookback + 10)
    rv = apply_zero_floor(rv, len(train_rv))
    values = rv.rv
    v_start, v_stop, t_stop = len(train_rv), len(train_rv) + len(valid_rv), len(rv)

    results, failures, timings, dumps = {}, [], [], []
    rnn_logs = {}

    def run_one(model_id):
        t0 = time.perf_counter()
        out = _fit_and_forecast(model_id, config, values, r_full, v_start, v_stop, t_stop)
        return model_id, out, time.perf_counter() - t0

    threads = max(1, int(os.environ.get("VOLFORGE_THREADS", "1")))
    if threads > 1 and len(config.models) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {m: pool.submit(run_one, m) for m in config.models}
            raw = {}
            for m, fut in futures.items():
                try:
                    raw[m] = fut.result()
                except VolforgeError as exc:
                    failures.append((m, str(exc)))
    else:
        raw = {}
        for m in config.models:
            try:
                raw[m] = run_one(m)
            except VolforgeError as exc:
                failures.append((m, str(exc)))

    for model_id in config.models:         # registry order, deterministic join
        if model_id not in raw:
            continue
        _, out, secs = raw[model_id]
        fc_v, fc_t, dump = out[0], out[1], out[2]
        if len(out) > 3:
            rnn_logs[model_id] = out[3].search_log
        results[model_id] = (fc_v, fc_t)
        timings.append((model_id, secs))
        dumps.append((model_id, dump))

    if not results:
        raise FitError("all enabled models failed",
                       diagnostics={"failures": failures})

    reference = config.reference_model if config.reference_model in results \
        else next(reversed(results))
    recs_v = [ForecastRecord(m, valid_rv_actual(values, v_start, v_stop), fc[0])
              for m, fc in results.items()]
    recs_t = [ForecastRecord(m, valid_rv_actual(values, v_stop, t_stop), fc[1])
              for m, fc in results.items()]
    report_v = build_report(recs_v, reference, failures=failures)
    report_t = build_report(recs_t, reference, failures=failures)

    versions = _versions()
    manifest = RunManifest(config.hash(), tuple(dumps), tuple(timings), versions)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _atomic_write(out / "validation_report.csv", report_csv(report_v))
        _atomic_write(out / "validation_report.txt", report_text(report_v))
        _atomic_write(out / "test_report.csv", report_csv(report_t))
        _atomic_write(out / "test_report.txt", report_text(report_t))
        _atomic_write(out / "manifest.txt", manifest.render())
        plots = out / "plots"
        plots.mkdir(exist_ok=True)
        emit_plot_data(recs_v, rv.period_labels[v_start:v_stop], plots, suffix="validation")
        emit_plot_data(recs_t, rv.period_labels[v_stop:t_stop], plots, suffix="test")
        for model_id, log in rnn_logs.items():
            entries = tuple((w, v) for w, v in log)
            _atomic_write(out / f"{model_id}_window_search.csv", search_log_csv(entries))
    return report_v, report_t, manifest


def valid_rv_actual(values, start, stop):
    return values[start:stop]


def _versions():
    import platform
    import scipy
    return (("volforge", "0.1.0"), ("python", platform.python_version()),
            ("numpy", np.__version__), ("scipy", scipy.__version__))


def emit_plot_data(records, periods, out_dir, suffix=""):
    """Per-model CSV of (period, actual, predicted) for external plotting."""
    records = list(records)
    if not records:
        raise DataError("no records to emit")
    out_dir = Path(out_dir)
    paths = []
    for rec in records:
        if len(periods) != len(rec):
            raise DataError(f"{rec.model_id}: period labels do not match record length")
        name = f"{rec.model_id}_{suffix}.csv" if suffix else f"{rec.model_id}.csv"
        path = out_dir / name
        lines = ["period,actual,predicted"]
        for lbl, a, p in zip(periods, rec.actual, rec.predicted):
            lines.append(f"{lbl},{float(a)!r},{float(p)!r}")
        _atomic_write(path, "\n".join(lines) + "\n")
        paths.append(path)
    return paths
