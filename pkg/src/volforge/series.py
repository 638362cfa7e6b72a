"""Time-series containers and transforms shared by every forecaster.

Covers price ingestion, log-returns, realized-volatility aggregation into
calendar buckets (hour / day / month, UTC), chronological splitting and
min-max scaling.  All containers are immutable after construction and all
operations are pure functions, so values can be shared freely across
concurrent model fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import DataError

AGGREGATIONS = ("hour", "day", "month")


def _as_float_array(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class PriceSeries:
    """Strictly positive prices on strictly increasing timestamps.

    ``timestamps`` are epoch seconds (UTC); ``base_frequency`` is the declared
    bar interval in seconds (metadata only, buckets are calendar based).
    """

    timestamps: np.ndarray
    prices: np.ndarray
    base_frequency: float = 60.0

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        px = _as_float_array(self.prices)
        if ts.shape != px.shape or ts.ndim != 1:
            raise DataError("timestamps and prices must be 1-d arrays of equal length")
        if len(ts) < 2:
            raise DataError("price series needs at least 2 observations")
        if np.any(np.diff(ts) <= 0):
            bad = int(np.argmax(np.diff(ts) <= 0)) + 1
            raise DataError(f"timestamps must be strictly increasing (violated at index {bad})")
        if not np.all(np.isfinite(px)):
            raise DataError("prices contain NaN or inf")
        if np.any(px <= 0):
            bad = int(np.argmax(px <= 0))
            raise DataError(f"non-positive price at index {bad}: {px[bad]}")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "prices", px)
        ts.setflags(write=False)
        px.setflags(write=False)

    def __len__(self) -> int:
        return len(self.prices)


@dataclass(frozen=True)
class ReturnSeries:
    """Log-returns; timestamps mark the end of each return interval."""

    timestamps: np.ndarray
    returns: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        r = _as_float_array(self.returns)
        if ts.shape != r.shape or ts.ndim != 1:
            raise DataError("timestamps and returns must be 1-d arrays of equal length")
        if len(ts) == 0:
            raise DataError("empty return series")
        if not np.all(np.isfinite(r)):
            raise DataError("returns contain NaN or inf")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "returns", r)
        ts.setflags(write=False)
        r.setflags(write=False)

    def __len__(self) -> int:
        return len(self.returns)


@dataclass(frozen=True)
class RVSeries:
    """Realized volatility per aggregation bucket, one value per bucket."""

    period_labels: tuple
    rv: np.ndarray
    aggregation: str = "day"

    def __post_init__(self):
        labels = tuple(self.period_labels)
        rv = _as_float_array(self.rv)
        if len(labels) != len(rv):
            raise DataError("period_labels and rv must have equal length")
        if self.aggregation not in AGGREGATIONS:
            raise DataError(f"unknown aggregation {self.aggregation!r}, expected one of {AGGREGATIONS}")
        if np.any(rv < 0) or not np.all(np.isfinite(rv)):
            raise DataError("rv values must be finite and non-negative")
        if any(labels[i] >= labels[i + 1] for i in range(len(labels) - 1)):
            raise DataError("period labels must be strictly increasing")
        object.__setattr__(self, "period_labels", labels)
        object.__setattr__(self, "rv", rv)
        rv.setflags(write=False)

    def __len__(self) -> int:
        return len(self.rv)

    def slice(self, start: int, stop: int) -> "RVSeries":
        return RVSeries(self.period_labels[start:stop], self.rv[start:stop].copy(), self.aggregation)

    def with_values(self, rv: np.ndarray) -> "RVSeries":
        return RVSeries(self.period_labels, rv, self.aggregation)


@dataclass(frozen=True)
class SplitSpec:
    """Trailing validation/test window sizes; 252 points = one trading year."""

    validation_len: int = 252
    test_len: int = 252

    def __post_init__(self):
        if self.validation_len < 1 or self.test_len < 1:
            raise DataError("validation_len and test_len must be >= 1")


@dataclass
class MinMaxScaler:
    """Affine map of the training range onto [0, 1]; no clipping outside it."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (self.hi > self.lo):
            raise DataError(f"scaler needs hi > lo, got lo={self.lo}, hi={self.hi}")

    @classmethod
    def fit(cls, train: np.ndarray) -> "MinMaxScaler":
        train = _as_float_array(train)
        lo, hi = float(np.min(train)), float(np.max(train))
        if hi == lo:
            raise DataError("cannot fit min-max scaler on a constant series")
        return cls(lo, hi)

    def transform(self, x):
        return (_as_float_array(x) - self.lo) / (self.hi - self.lo)

    def invert(self, y):
        return _as_float_array(y) * (self.hi - self.lo) + self.lo


def log_returns(prices: PriceSeries) -> ReturnSeries:
    """Log-return between consecutive bars; result has length n-1."""
    r = np.diff(np.log(prices.prices))
    return ReturnSeries(prices.timestamps[1:], r)


def bucket_label(epoch_seconds: int, aggregation: str) -> str:
    """Calendar bucket identifier (UTC) for a timestamp."""
    dt = datetime.fromtimestamp(int(epoch_seconds), tz=timezone.utc)
    if aggregation == "day":
        return dt.strftime("%Y-%m-%d")
    if aggregation == "hour":
        return dt.strftime("%Y-%m-%dT%H")
    if aggregation == "month":
        return dt.strftime("%Y-%m")
    raise DataError(f"unknown aggregation {aggregation!r}, expected one of {AGGREGATIONS}")


def realized_volatility(returns: ReturnSeries, aggregation: str,
                        min_returns: int = 1) -> RVSeries:
    """Per-bucket sqrt of summed squared returns.

    Buckets with fewer than ``min_returns`` observations are dropped (the
    dropped labels are retrievable via :func:`bucket_counts`); partial leading
    or trailing buckets that meet the threshold are kept.
    """
    if len(returns) == 0:
        raise DataError("cannot aggregate an empty return series")
    labels = [bucket_label(t, aggregation) for t in returns.timestamps]
    out_labels, out_rv = [], []
    i = 0
    n = len(labels)
    while i < n:
        j = i
        while j < n and labels[j] == labels[i]:
            j += 1
        if j - i >= min_returns:
            seg = returns.returns[i:j]
            out_labels.append(labels[i])
            out_rv.append(math.sqrt(float(np.sum(seg * seg))))
        i = j
    if not out_labels:
        raise DataError("all buckets dropped by min_returns filter")
    return RVSeries(tuple(out_labels), np.array(out_rv), aggregation)


def bucket_counts(returns: ReturnSeries, aggregation: str) -> dict:
    """Number of returns per bucket, in chronological order."""
    counts: dict = {}
    for t in returns.timestamps:
        lbl = bucket_label(t, aggregation)
        counts[lbl] = counts.get(lbl, 0) + 1
    return counts


def aggregate_log_rv(rv: np.ndarray, n: int) -> np.ndarray:
    """Mean of log rv over the ``n`` most recent periods ending at each t.

    Output index k corresponds to t = n-1+k of the input.  Zero rv values are
    rejected; callers must apply :func:`apply_zero_floor` first.
    """
    rv = _as_float_array(rv)
    if n < 1:
        raise DataError("horizon n must be >= 1")
    if len(rv) < n:
        raise DataError(f"series of length {len(rv)} too short for horizon {n}")
    if np.any(rv <= 0):
        raise DataError("rv contains non-positive values; apply the zero-floor before log aggregation")
    logs = np.log(rv)
    c = np.concatenate(([0.0], np.cumsum(logs)))
    return (c[n:] - c[:-n]) / n


def apply_zero_floor(rv: RVSeries, train_len: int, factor: float = 1e-3) -> RVSeries:
    """Replace zero buckets by (smallest positive training rv) * factor.

    Keeps log transforms defined; the floor is learned from the training
    partition only so the mapping is leakage-safe.
    """
    vals = rv.rv.copy()
    if not np.any(vals == 0):
        return rv
    train = vals[:train_len]
    positive = train[train > 0]
    if len(positive) == 0:
        raise DataError("training partition has no positive rv; cannot derive zero-floor")
    floor = float(np.min(positive)) * factor
    vals[vals == 0] = floor
    return rv.with_values(vals)


def split(rv: RVSeries, spec: SplitSpec, min_train: int = 1):
    """Chronological (train, validation, test) partition with trailing windows."""
    need = spec.validation_len + spec.test_len + min_train
    if len(rv) < need:
        raise DataError(
            f"series of length {len(rv)} too short: need at least {need} "
            f"(validation {spec.validation_len} + test {spec.test_len} + train {min_train})")
    t_end = len(rv) - spec.test_len
    v_end = t_end - spec.validation_len
    return rv.slice(0, v_end), rv.slice(v_end, t_end), rv.slice(t_end, len(rv))


# ---------------------------------------------------------------------------
# CSV interfaces: `timestamp,price` in, `period,rv` out.
# ---------------------------------------------------------------------------

def _parse_timestamp(tok: str) -> int:
    tok = tok.strip()
    if not tok:
        raise DataError("empty timestamp field")
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        dt = datetime.fromisoformat(tok.replace("Z", "+00:00"))
    except ValueError as exc:
        raise DataError(f"unparseable timestamp {tok!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def read_price_csv(path) -> PriceSeries:
    """Read a `timestamp,price` CSV; timestamps ISO-8601 or epoch seconds.

    The timestamp style must be uniform within one file; NaN/inf prices are
    rejected by the PriceSeries invariants.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip().lower() != "timestamp,price":
        raise DataError(f"{path}: expected header 'timestamp,price'")
    ts, px = [], []
    epoch_style = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected 2 fields, got {len(parts)}")
        tok = parts[0].strip()
        is_epoch = tok.lstrip("-").isdigit()
        if epoch_style is None:
            epoch_style = is_epoch
        elif epoch_style != is_epoch:
            raise DataError(f"{path}:{lineno}: mixed timestamp styles in one file")
        ts.append(_parse_timestamp(tok))
        try:
            p = float(parts[1])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: unparseable price {parts[1]!r}") from exc
        if not math.isfinite(p):
            raise DataError(f"{path}:{lineno}: price must be finite")
        px.append(p)
    return PriceSeries(np.array(ts, dtype=np.int64), np.array(px))


def write_price_csv(prices: PriceSeries, path) -> None:
    with open(path, "w") as fh:
        fh.write("timestamp,price\n")
        for t, p in zip(prices.timestamps, prices.prices):
            fh.write(f"{int(t)},{float(p)!r}\n")


def write_rv_csv(rv: RVSeries, path) -> None:
    with open(path, "w") as fh:
        fh.write("period,rv\n")
        for lbl, v in zip(rv.period_labels, rv.rv):
            fh.write(f"{lbl},{float(v)!r}\n")


def read_rv_csv(path, aggregation: str = "day") -> RVSeries:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip().lower() != "period,rv":
        raise DataError(f"{path}: expected header 'period,rv'")
    labels, vals = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected 2 fields")
        labels.append(parts[0].strip())
        vals.append(float(parts[1]))
    return RVSeries(tuple(labels), np.array(vals), aggregation)
