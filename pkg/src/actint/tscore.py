"""Signal primitives: smoothing, gradient, rate-of-change, normalization, windowing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DEGENERATE_EPS = 1e-12


class DataQualityError(ValueError):
    """Input samples violate a series invariant (non-finite values, too short)."""


class DegenerateSeriesError(ValueError):
    """Series variance is too small to normalize."""

    def __init__(self, std: float, eps: float = DEGENERATE_EPS):
        super().__init__(f"degenerate series: std {std:.3g} <= {eps:.3g}")
        self.std = std


class CoverageError(ValueError):
    """Stream does not cover a requested time span."""

    def __init__(self, missing_start: float, missing_end: float, message: str = ""):
        msg = message or f"stream does not cover [{missing_start:.3f}, {missing_end:.3f})"
        super().__init__(msg)
        self.missing_start = missing_start
        self.missing_end = missing_end


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """One uniformly sampled channel.

    ``start_time`` is the unix timestamp of the first sample; it only matters
    for window extraction and is 0 for series that are not anchored in time.
    """

    values: np.ndarray
    sample_rate_hz: float = 1.0
    channel_name: str = ""
    start_time: float = 0.0

    def __post_init__(self):
        arr = _frozen_array(self.values)
        if arr.ndim != 1:
            raise DataQualityError(f"{self.channel_name!r}: values must be one-dimensional")
        if arr.size < 2:
            raise DataQualityError(
                f"{self.channel_name!r}: need at least 2 samples, got {arr.size}"
            )
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise DataQualityError(f"{self.channel_name!r}: non-finite value at index {bad}")
        if not (self.sample_rate_hz > 0 and math.isfinite(self.sample_rate_hz)):
            raise DataQualityError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.channel_name == other.channel_name
            and self.sample_rate_hz == other.sample_rate_hz
            and self.start_time == other.start_time
            and np.array_equal(self.values, other.values)
        )

    def replace_values(self, values) -> "TimeSeries":
        return TimeSeries(values, self.sample_rate_hz, self.channel_name, self.start_time)

    @property
    def end_time(self) -> float:
        """Timestamp one sample period past the last sample."""
        return self.start_time + len(self) / self.sample_rate_hz


@dataclass(frozen=True)
class SmoothingConfig:
    sigma_samples: float = 5.0
    truncate_radius_samples: int = 15

    def __post_init__(self):
        if not self.sigma_samples > 0:
            raise ValueError("sigma_samples must be positive")
        if self.truncate_radius_samples < math.ceil(3 * self.sigma_samples):
            raise ValueError(
                f"truncate_radius_samples ({self.truncate_radius_samples}) must be >= "
                f"ceil(3*sigma) = {math.ceil(3 * self.sigma_samples)}"
            )

    def to_dict(self) -> dict:
        return {"sigma_samples": self.sigma_samples, "truncate_radius_samples": self.truncate_radius_samples}

    @classmethod
    def from_dict(cls, d: dict) -> "SmoothingConfig":
        return cls(float(d["sigma_samples"]), int(d["truncate_radius_samples"]))


@dataclass(frozen=True)
class ChannelStats:
    channel_name: str
    mean: float
    std_dev: float
    sample_count: int

    def __post_init__(self):
        if self.std_dev < 0:
            raise ValueError("std_dev must be non-negative")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")

    def to_dict(self) -> dict:
        return {
            "channel_name": self.channel_name,
            "mean": self.mean,
            "std_dev": self.std_dev,
            "sample_count": self.sample_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelStats":
        return cls(str(d["channel_name"]), float(d["mean"]), float(d["std_dev"]), int(d["sample_count"]))


def gaussian_kernel(cfg: SmoothingConfig) -> np.ndarray:
    r = cfg.truncate_radius_samples
    k = np.arange(-r, r + 1, dtype=np.float64)
    w = np.exp(-0.5 * (k / cfg.sigma_samples) ** 2)
    return w / w.sum()


def gaussian_smooth(series: TimeSeries, cfg: SmoothingConfig) -> TimeSeries:
    """Truncated Gaussian smoothing with edge-replication padding; length preserved."""
    kernel = gaussian_kernel(cfg)
    r = cfg.truncate_radius_samples
    padded = np.pad(series.values, r, mode="edge")
    return series.replace_values(np.convolve(padded, kernel, mode="valid"))


def gradient(series: TimeSeries) -> TimeSeries:
    """One-sided differences at the endpoints, central differences inside."""
    x = series.values
    out = np.empty_like(x)
    out[0] = x[1] - x[0]
    out[-1] = x[-1] - x[-2]
    out[1:-1] = (x[2:] - x[:-2]) / 2.0
    return series.replace_values(out)


def rate_of_change(series: TimeSeries, cfg: SmoothingConfig | None = None) -> TimeSeries:
    """Absolute gradient, optionally of the Gaussian-smoothed series."""
    base = gaussian_smooth(series, cfg) if cfg is not None else series
    return base.replace_values(np.abs(gradient(base).values))


def zscore(values: np.ndarray, eps: float = DEGENERATE_EPS) -> tuple[np.ndarray, float, float]:
    """Population z-score of a raw array; raises DegenerateSeriesError for flat input."""
    values = np.asarray(values, dtype=np.float64)
    mean = float(values.mean())
    std = float(values.std())
    if std <= eps:
        raise DegenerateSeriesError(std, eps)
    return (values - mean) / std, mean, std


def zscore_normalize(series: TimeSeries, eps: float = DEGENERATE_EPS) -> tuple[TimeSeries, float, float]:
    z, mean, std = zscore(series.values, eps)
    return series.replace_values(z), mean, std


def downsample_mean(series: TimeSeries, factor: int) -> TimeSeries:
    """Average non-overlapping blocks of ``factor`` samples; a trailing partial block is dropped."""
    if int(factor) != factor or factor < 1:
        raise ValueError(f"factor must be a positive integer, got {factor!r}")
    factor = int(factor)
    n_blocks = len(series) // factor
    if n_blocks < 1:
        raise ValueError(f"series of length {len(series)} is shorter than factor {factor}")
    if factor == 1:
        return series
    blocks = series.values[: n_blocks * factor].reshape(n_blocks, factor)
    return TimeSeries(
        blocks.mean(axis=1),
        series.sample_rate_hz / factor,
        series.channel_name,
        series.start_time,
    )


def compute_channel_stats(training_windows: Iterable) -> list[ChannelStats]:
    """Per-channel population mean/std over every sample of every training window.

    Accepts Observations (anything with a ``channels`` mapping) or plain
    ``{name: TimeSeries}`` mappings.
    """
    pooled: dict[str, list[np.ndarray]] = {}
    names: set[str] | None = None
    count = 0
    for window in training_windows:
        channels = getattr(window, "channels", window)
        keys = set(channels)
        if names is None:
            names = keys
        elif keys != names:
            raise ValueError(f"inconsistent channel sets: {sorted(names)} vs {sorted(keys)}")
        for name, ts in channels.items():
            pooled.setdefault(name, []).append(ts.values)
        count += 1
    if count == 0:
        raise ValueError("training set is empty")
    stats = []
    for name in sorted(pooled):
        allv = np.concatenate(pooled[name])
        stats.append(ChannelStats(name, float(allv.mean()), float(allv.std()), int(allv.size)))
    return stats


def extract_window(
    stream: TimeSeries,
    event_time: float,
    lead_start_min: float = 72.0,
    lead_end_min: float = 12.0,
) -> TimeSeries:
    """Samples whose timestamps fall in ``[event - lead_start, event - lead_end)``."""
    if lead_start_min <= lead_end_min:
        raise ValueError("lead_start_min must exceed lead_end_min")
    rate = stream.sample_rate_hz
    t0 = event_time - lead_start_min * 60.0
    t1 = event_time - lead_end_min * 60.0
    # round away float noise before ceil so exact grid hits are kept
    first = math.ceil(round((t0 - stream.start_time) * rate, 6))
    count = int(round((lead_start_min - lead_end_min) * 60.0 * rate))
    last = first + count
    if first < 0 or last > len(stream):
        have0, have1 = stream.start_time, stream.end_time
        miss0 = t0 if first < 0 else max(t0, have1)
        miss1 = min(t1, have0) if first < 0 else t1
        raise CoverageError(
            miss0,
            miss1,
            f"{stream.channel_name!r}: window [{t0:.3f}, {t1:.3f}) not covered by stream "
            f"[{have0:.3f}, {have1:.3f}); missing [{miss0:.3f}, {miss1:.3f})",
        )
    return TimeSeries(
        stream.values[first:last],
        rate,
        stream.channel_name,
        stream.start_time + first / rate,
    )


def as_series(values: Sequence[float], rate: float = 1.0, name: str = "") -> TimeSeries:
    return TimeSeries(np.asarray(values, dtype=np.float64), rate, name)
