"""Classifier boundary: observations, predictor ids, the logistic baseline.

Any object exposing ``probability(obs) -> float`` and ``decision_threshold``
can stand in for the model; :func:`predict_proba` wraps it into a
:class:`Prediction`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from .tscore import ChannelStats, SmoothingConfig, TimeSeries, compute_channel_stats, rate_of_change

MODEL_FORMAT_VERSION = 1

# sliding-mean width (samples) for the order-sensitive ROC feature
PEAK_WINDOW = 60


class ModelError(RuntimeError):
    """The model itself misbehaved or cannot be used."""


class Label(str, Enum):
    POSITIVE = "Positive"
    NEGATIVE = "Negative"


@dataclass(frozen=True, order=True)
class PredictorId:
    """``kind`` is ``"raw"``, ``"roc"`` or ``"time_of_day"``; channel is None for time-of-day."""

    kind: str
    channel: str | None = None

    def __post_init__(self):
        if self.kind not in ("raw", "roc", "time_of_day"):
            raise ValueError(f"unknown predictor kind {self.kind!r}")
        if (self.kind == "time_of_day") != (self.channel is None):
            raise ValueError("time_of_day takes no channel; raw/roc require one")

    @classmethod
    def raw(cls, channel: str) -> "PredictorId":
        return cls("raw", channel)

    @classmethod
    def roc(cls, channel: str) -> "PredictorId":
        return cls("roc", channel)

    @classmethod
    def time_of_day(cls) -> "PredictorId":
        return cls("time_of_day")

    def __str__(self) -> str:
        return "time_of_day" if self.channel is None else f"{self.kind}:{self.channel}"

    @classmethod
    def parse(cls, text: str) -> "PredictorId":
        if text == "time_of_day":
            return cls.time_of_day()
        kind, sep, channel = text.partition(":")
        if not sep or not channel:
            raise ValueError(f"bad predictor id {text!r}")
        return cls(kind, channel)

    @property
    def is_series(self) -> bool:
        return self.channel is not None


@dataclass(frozen=True, eq=False)
class Observation:
    """One window: raw channels, their ROC, and the time-of-day scalar (hours)."""

    id: str
    channels: Mapping[str, TimeSeries]
    channel_roc: Mapping[str, TimeSeries]
    time_of_day: float

    def __post_init__(self):
        if not self.channels:
            raise ValueError("observation needs at least one channel")
        if set(self.channels) != set(self.channel_roc):
            raise ValueError("channel_roc keys must equal channels keys")
        lengths = {len(ts) for ts in self.channels.values()}
        lengths |= {len(ts) for ts in self.channel_roc.values()}
        if len(lengths) != 1:
            raise ValueError(f"all series must share one length, got {sorted(lengths)}")
        rates = {ts.sample_rate_hz for ts in self.channels.values()}
        if len(rates) != 1:
            raise ValueError(f"all channels must share one sample rate, got {sorted(rates)}")
        if not (0.0 <= self.time_of_day < 24.0):
            raise ValueError(f"time_of_day must be in [0, 24), got {self.time_of_day}")
        object.__setattr__(self, "channels", dict(self.channels))
        object.__setattr__(self, "channel_roc", dict(self.channel_roc))

    @classmethod
    def from_raw(
        cls,
        id: str,
        channels: Mapping[str, TimeSeries],
        time_of_day: float,
        smoothing: SmoothingConfig | None = SmoothingConfig(),
    ) -> "Observation":
        roc = {name: rate_of_change(ts, smoothing) for name, ts in channels.items()}
        return cls(id, dict(channels), roc, float(time_of_day))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Observation):
            return NotImplemented
        return (
            self.id == other.id
            and self.time_of_day == other.time_of_day
            and self.channels == other.channels
            and self.channel_roc == other.channel_roc
        )

    @property
    def channel_names(self) -> list[str]:
        return sorted(self.channels)

    @property
    def length(self) -> int:
        return len(next(iter(self.channels.values())))

    @property
    def sample_rate_hz(self) -> float:
        return next(iter(self.channels.values())).sample_rate_hz

    def predictors(self) -> list[PredictorId]:
        out = []
        for name in self.channel_names:
            out += [PredictorId.raw(name), PredictorId.roc(name)]
        out.append(PredictorId.time_of_day())
        return out

    def series(self, p: PredictorId) -> TimeSeries:
        if p.kind == "raw":
            return self.channels[p.channel]
        if p.kind == "roc":
            return self.channel_roc[p.channel]
        raise KeyError("time_of_day is a scalar predictor")

    def to_wire(self) -> dict:
        """The observation object of the external-model protocol."""

        def enc(ts: TimeSeries) -> dict:
            return {"rate_hz": ts.sample_rate_hz, "values": ts.values.tolist()}

        return {
            "time_of_day": self.time_of_day,
            "channels": {k: enc(self.channels[k]) for k in self.channel_names},
            "roc": {k: enc(self.channel_roc[k]) for k in self.channel_names},
        }

    @classmethod
    def from_wire(cls, d: dict, id: str = "obs", smoothing: SmoothingConfig | None = SmoothingConfig()) -> "Observation":
        """Inverse of :meth:`to_wire`; missing ``roc`` is recomputed with ``smoothing``."""
        channels = {
            k: TimeSeries(v["values"], v["rate_hz"], k) for k, v in d["channels"].items()
        }
        if "roc" in d:
            roc = {k: TimeSeries(v["values"], v["rate_hz"], k) for k, v in d["roc"].items()}
            return cls(d.get("id", id), channels, roc, float(d["time_of_day"]))
        return cls.from_raw(d.get("id", id), channels, float(d["time_of_day"]), smoothing)


@dataclass(frozen=True)
class Prediction:
    label: Label
    probability: float

    def to_dict(self) -> dict:
        return {"label": self.label.value, "probability": self.probability}

    @classmethod
    def from_dict(cls, d: dict) -> "Prediction":
        return cls(Label(d["label"]), float(d["probability"]))


class ModelAdapter(Protocol):
    decision_threshold: float

    def probability(self, obs: Observation) -> float: ...


def predict_proba(model: ModelAdapter, obs: Observation) -> Prediction:
    p = float(model.probability(obs))
    if not (0.0 <= p <= 1.0):
        raise ModelError(f"probability out of range: {p}")
    label = Label.POSITIVE if p >= model.decision_threshold else Label.NEGATIVE
    return Prediction(label, p)


# --------------------------------------------------------------------------- features

RAW_STATS = ("mean", "std", "min", "max")
ROC_STATS = ("mean", "max")


def _peak_local_mean(values: np.ndarray, width: int = PEAK_WINDOW) -> float:
    w = min(width, values.size)
    c = np.concatenate(([0.0], np.cumsum(values)))
    return float(((c[w:] - c[:-w]) / w).max())


def feature_names(channels: Sequence[str], temporal: bool = True) -> list[str]:
    names = []
    for ch in sorted(channels):
        names += [f"{ch}.raw.{s}" for s in RAW_STATS]
        names += [f"{ch}.roc.{s}" for s in ROC_STATS]
        if temporal:
            names.append(f"{ch}.roc.peak_local_mean")
    return names + ["time_of_day.sin", "time_of_day.cos"]


def pooled_features(obs: Observation, temporal: bool = False) -> np.ndarray:
    """Summary vector of an observation, channels in sorted name order.

    Per channel: raw mean/std/min/max and ROC mean/max (6 values). With
    ``temporal=True`` each channel also gets the peak of a 60-sample sliding
    mean of its ROC, the one entry that is sensitive to sample order.
    Time of day is appended as a sin/cos pair.
    """
    parts: list[float] = []
    for name in obs.channel_names:
        raw = obs.channels[name].values
        roc = obs.channel_roc[name].values
        parts += [raw.mean(), raw.std(), raw.min(), raw.max(), roc.mean(), roc.max()]
        if temporal:
            parts.append(_peak_local_mean(roc))
    angle = 2.0 * math.pi * obs.time_of_day / 24.0
    parts += [math.sin(angle), math.cos(angle)]
    return np.array(parts, dtype=np.float64)


# --------------------------------------------------------------------------- baseline


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 3000
    learning_rate: float = 0.5
    l2: float = 1e-3
    positive_weight: float = 4.0
    negative_weight: float = 1.0
    decision_threshold: float = 0.5
    temporal_features: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.learning_rate <= 0 or self.l2 < 0:
            raise ValueError("epochs >= 1, learning_rate > 0, l2 >= 0 required")
        if self.positive_weight <= 0 or self.negative_weight <= 0:
            raise ValueError("class weights must be positive")
        if not 0.0 < self.decision_threshold < 1.0:
            raise ValueError("decision_threshold must be in (0, 1)")


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray | None = None,
    epochs: int = 3000,
    learning_rate: float = 0.5,
    l2: float = 1e-3,
) -> tuple[np.ndarray, float]:
    """Weighted logistic regression by full-batch gradient descent.

    Features are standardized internally; the returned weights and bias act
    on the original (unstandardized) features.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    sw = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    sw = sw / sw.sum()
    mu = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = (X - mu) / scale
    w = np.zeros(d)
    b = 0.0
    for _ in range(epochs):
        r = (_sigmoid(Z @ w + b) - y) * sw
        w -= learning_rate * (Z.T @ r + l2 * w)
        b -= learning_rate * r.sum()
    w_orig = w / scale
    b_orig = b - float(np.dot(w_orig, mu))
    return w_orig, float(b_orig)


@dataclass(frozen=True, eq=False)
class BaselineModel:
    weights: np.ndarray
    bias: float
    feature_spec: tuple[str, ...]
    training_stats: tuple[ChannelStats, ...] = ()
    decision_threshold: float = 0.5
    name: str = "baseline-logistic"

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "feature_spec", tuple(self.feature_spec))
        object.__setattr__(self, "training_stats", tuple(self.training_stats))
        if w.shape != (len(self.feature_spec),):
            raise ValueError(f"{w.size} weights for {len(self.feature_spec)} features")
        if not 0.0 < self.decision_threshold < 1.0:
            raise ValueError("decision_threshold must be in (0, 1)")

    def __eq__(self, other) -> bool:
        if not isinstance(other, BaselineModel):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    @property
    def temporal(self) -> bool:
        return any(f.endswith(".peak_local_mean") for f in self.feature_spec)

    @property
    def channels(self) -> list[str]:
        return sorted({f.split(".")[0] for f in self.feature_spec if not f.startswith("time_of_day.")})

    def features(self, obs: Observation) -> np.ndarray:
        expected = feature_names(obs.channel_names, self.temporal)
        if tuple(expected) != self.feature_spec:
            raise ModelError(
                f"observation channels {obs.channel_names} do not match model channels {self.channels}"
            )
        return pooled_features(obs, self.temporal)

    def probability(self, obs: Observation) -> float:
        z = float(np.dot(self.weights, self.features(obs))) + self.bias
        return float(_sigmoid(z))

    def stats_for(self, channel: str) -> ChannelStats:
        for s in self.training_stats:
            if s.channel_name == channel:
                return s
        raise KeyError(f"no training statistics for channel {channel!r}")

    def to_dict(self) -> dict:
        return {
            "version": MODEL_FORMAT_VERSION,
            "name": self.name,
            "feature_spec": list(self.feature_spec),
            "weights": [float(v) for v in self.weights],
            "bias": float(self.bias),
            "threshold": float(self.decision_threshold),
            "training_stats": [s.to_dict() for s in self.training_stats],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BaselineModel":
        if d.get("version") != MODEL_FORMAT_VERSION:
            raise ModelError(f"unsupported model file version {d.get('version')!r}")
        return cls(
            weights=np.array(d["weights"], dtype=np.float64),
            bias=float(d["bias"]),
            feature_spec=tuple(d["feature_spec"]),
            training_stats=tuple(ChannelStats.from_dict(s) for s in d["training_stats"]),
            decision_threshold=float(d["threshold"]),
            name=d.get("name", "baseline-logistic"),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "BaselineModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def train_baseline(
    dataset: Sequence[tuple[Observation, int]],
    config: TrainConfig = TrainConfig(),
) -> BaselineModel:
    """Train the pooled-feature logistic baseline. Labels are 1 (positive) / 0."""
    if not dataset:
        raise ValueError("empty training set")
    y = np.array([int(lbl) for _, lbl in dataset], dtype=np.float64)
    if y.min() == y.max():
        raise ValueError(f"training set has a single class ({int(y[0])}); need both labels")
    channels = dataset[0][0].channel_names
    X = np.stack([pooled_features(obs, config.temporal_features) for obs, _ in dataset])
    sw = np.where(y == 1, config.positive_weight, config.negative_weight)
    w, b = fit_logistic(X, y, sw, config.epochs, config.learning_rate, config.l2)
    stats = compute_channel_stats(obs for obs, _ in dataset)
    return BaselineModel(
        weights=w,
        bias=b,
        feature_spec=tuple(feature_names(channels, config.temporal_features)),
        training_stats=tuple(stats),
        decision_threshold=config.decision_threshold,
    )
