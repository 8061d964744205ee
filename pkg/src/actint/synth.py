"""Synthetic multichannel deployments with planted triggers and their ground truth."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import Label, Observation, PredictorId
from .tscore import SmoothingConfig, TimeSeries

TRIGGER_BEHAVIORS = (
    "Increasing",
    "Decreasing",
    "SuddenChangeUp",
    "SuddenChangeDown",
    "AbnormallyHigh",
    "AbnormallyLow",
    "TimeOfDay",
)
NOISE_MODELS = ("white", "random-walk", "none")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelSpec:
    name: str
    baseline_mean: float
    baseline_std: float
    noise_model: str = "white"
    diurnal_amplitude: float = 0.0


@dataclass(frozen=True)
class TriggerSpec:
    channel: str | None
    behavior: str
    magnitude_sigma: float = 3.0
    weight: float = 1.0


@dataclass(frozen=True)
class ScenarioSpec:
    channels: tuple[ChannelSpec, ...]
    trigger_mix: tuple[TriggerSpec, ...]
    window_length_samples: int = 3600
    positive_count: int = 48
    negative_count: int = 192
    sample_rate_hz: float = 1.0
    tod_band: tuple[float, float] = (17.0, 21.0)
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "trigger_mix", tuple(self.trigger_mix))
        object.__setattr__(self, "tod_band", tuple(self.tod_band))
        self.validate()

    def validate(self):
        if not self.channels:
            raise ScenarioError("scenario needs at least one channel")
        names = [c.name for c in self.channels]
        if len(set(names)) != len(names):
            raise ScenarioError(f"duplicate channel names in {names}")
        for c in self.channels:
            if c.noise_model not in NOISE_MODELS:
                raise ScenarioError(f"channel {c.name!r}: unknown noise model {c.noise_model!r}")
            if c.baseline_std < 0:
                raise ScenarioError(f"channel {c.name!r}: baseline_std must be >= 0")
        if self.positive_count < 1 or self.negative_count < 1:
            raise ScenarioError("positive_count and negative_count must be >= 1")
        if self.window_length_samples < 4:
            raise ScenarioError("window_length_samples must be >= 4")
        if not self.sample_rate_hz > 0:
            raise ScenarioError("sample_rate_hz must be positive")
        lo, hi = self.tod_band
        if not 0.0 <= lo < hi <= 24.0:
            raise ScenarioError(f"tod_band must satisfy 0 <= lo < hi <= 24, got {self.tod_band}")
        if not self.trigger_mix:
            raise ScenarioError("trigger_mix is empty")
        weights = [t.weight for t in self.trigger_mix]
        if min(weights) < 0 or sum(weights) <= 0:
            raise ScenarioError("trigger weights must be >= 0 with a positive sum")
        by_name = {c.name: c for c in self.channels}
        for t in self.trigger_mix:
            if t.behavior not in TRIGGER_BEHAVIORS:
                raise ScenarioError(f"unknown trigger behavior {t.behavior!r}")
            if t.behavior == "TimeOfDay":
                continue
            if t.channel not in by_name:
                raise ScenarioError(f"trigger channel {t.channel!r} is not a scenario channel")
            if not t.magnitude_sigma > 0:
                raise ScenarioError("magnitude_sigma must be positive")
            if by_name[t.channel].baseline_std <= 0:
                raise ScenarioError(f"channel {t.channel!r}: baseline_std must be > 0 to scale a trigger")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tod_band"] = list(self.tod_band)
        d["smoothing"] = self.smoothing.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        try:
            kw = dict(d)
            kw["channels"] = tuple(ChannelSpec(**c) for c in d["channels"])
            kw["trigger_mix"] = tuple(TriggerSpec(**t) for t in d["trigger_mix"])
            if "smoothing" in d:
                kw["smoothing"] = SmoothingConfig.from_dict(d["smoothing"])
            if "tod_band" in d:
                kw["tod_band"] = tuple(d["tod_band"])
            return cls(**kw)
        except (KeyError, TypeError) as exc:
            raise ScenarioError(f"invalid scenario spec: {exc}") from exc

    @classmethod
    def load(cls, path) -> "ScenarioSpec":
        try:
            d = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: {exc}") from exc
        return cls.from_dict(d)


def default_scenario(seed: int = 0, **overrides) -> ScenarioSpec:
    """Five 1 Hz channels (light, temperature, humidity, pressure, noise), 48/192 windows.

    Positives come from three causes: light steps, noise steps and an evening
    time-of-day band.
    """
    channels = (
        ChannelSpec("light", 150.0, 30.0, "white", 40.0),
        ChannelSpec("temperature", 22.0, 0.5, "random-walk", 1.0),
        ChannelSpec("humidity", 45.0, 3.0, "random-walk", 2.0),
        ChannelSpec("pressure", 101.3, 0.1, "random-walk", 0.0),
        ChannelSpec("noise", 40.0, 5.0, "white", 5.0),
    )
    mix = (
        TriggerSpec("light", "SuddenChangeUp", 3.0, 2.0),
        TriggerSpec("noise", "SuddenChangeUp", 4.0, 1.0),
        TriggerSpec(None, "TimeOfDay", 1.0, 1.0),
    )
    kw = dict(channels=channels, trigger_mix=mix, seed=seed)
    kw.update(overrides)
    return ScenarioSpec(**kw)


@dataclass(frozen=True)
class TruthRecord:
    trigger_channel: str | None
    trigger_behavior: str
    injection_lag: int

    @property
    def predictor_kind(self) -> str:
        """Which predictor kind should surface the trigger under the two-path scheme."""
        if self.trigger_behavior == "TimeOfDay":
            return "time_of_day"
        if self.trigger_behavior in ("AbnormallyHigh", "AbnormallyLow"):
            return "raw"
        return "roc"


@dataclass(frozen=True)
class GroundTruth:
    records: dict[str, TruthRecord]
    observation_ids: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "observation_ids": list(self.observation_ids),
            "records": {k: asdict(v) for k, v in sorted(self.records.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        return cls(
            {k: TruthRecord(**v) for k, v in d["records"].items()},
            tuple(d.get("observation_ids", ())),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "GroundTruth":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _noise(rng: np.random.Generator, ch: ChannelSpec, n: int) -> np.ndarray:
    if ch.noise_model == "none" or ch.baseline_std == 0:
        return np.zeros(n)
    if ch.noise_model == "white":
        return rng.normal(0.0, ch.baseline_std, n)
    steps = rng.normal(0.0, ch.baseline_std / math.sqrt(n), n)
    return np.cumsum(steps)


def _inject(values: np.ndarray, behavior: str, magnitude: float, rng: np.random.Generator) -> int:
    n = values.size
    if behavior in ("Increasing", "Decreasing"):
        sign = 1.0 if behavior == "Increasing" else -1.0
        values += sign * magnitude * np.linspace(0.0, 1.0, n)
        return 0
    if behavior in ("SuddenChangeUp", "SuddenChangeDown"):
        sign = 1.0 if behavior == "SuddenChangeUp" else -1.0
        lag = int(rng.integers(math.ceil(0.2 * n), math.floor(0.8 * n), endpoint=True))
        values[lag:] += sign * magnitude
        return lag
    if behavior in ("AbnormallyHigh", "AbnormallyLow"):
        values += (1.0 if behavior == "AbnormallyHigh" else -1.0) * magnitude
        return 0
    raise ScenarioError(f"cannot inject {behavior!r}")


def generate_dataset(spec: ScenarioSpec) -> tuple[list[tuple[Observation, int]], GroundTruth]:
    """Draw negatives and planted positives; output order is shuffled, ids are zero-padded."""
    spec.validate()
    n = spec.window_length_samples
    total = spec.positive_count + spec.negative_count
    root = np.random.SeedSequence(spec.seed)
    order_rng, *obs_seeds = [np.random.default_rng(s) for s in root.spawn(total + 1)]
    labels = np.array([1] * spec.positive_count + [0] * spec.negative_count)
    labels = labels[order_rng.permutation(total)]
    weights = np.array([t.weight for t in spec.trigger_mix], dtype=np.float64)
    weights = weights / weights.sum()
    width = len(str(total - 1))
    hours = n / spec.sample_rate_hz / 3600.0
    data: list[tuple[Observation, int]] = []
    records: dict[str, TruthRecord] = {}
    for k in range(total):
        rng = obs_seeds[k]
        oid = f"obs-{k:0{width}d}"
        label = int(labels[k])
        trigger = spec.trigger_mix[int(rng.choice(len(weights), p=weights))] if label else None
        if trigger is not None and trigger.behavior == "TimeOfDay":
            tod = float(rng.uniform(*spec.tod_band)) % 24.0
        else:
            tod = float(rng.uniform(0.0, 24.0))
        # hour of day at each sample; the window ends at ``tod``
        sample_hours = tod - hours + np.arange(n) / spec.sample_rate_hz / 3600.0
        channels = {}
        lag = 0
        for ch in spec.channels:
            v = ch.baseline_mean + _noise(rng, ch, n)
            if ch.diurnal_amplitude:
                v += ch.diurnal_amplitude * np.sin(2.0 * math.pi * (sample_hours - 6.0) / 24.0)
            if trigger is not None and trigger.channel == ch.name and trigger.behavior != "TimeOfDay":
                lag = _inject(v, trigger.behavior, trigger.magnitude_sigma * ch.baseline_std, rng)
            channels[ch.name] = TimeSeries(v, spec.sample_rate_hz, ch.name)
        if trigger is not None:
            tch = None if trigger.behavior == "TimeOfDay" else trigger.channel
            records[oid] = TruthRecord(tch, trigger.behavior, lag)
        data.append((Observation.from_raw(oid, channels, tod, spec.smoothing), label))
    return data, GroundTruth(records, tuple(o.id for o, _ in data))


# --------------------------------------------------------------------------- recovery


@dataclass(frozen=True)
class RecoveryMetrics:
    true_positive_count: int
    positive_report_count: int
    channel_recovery: float | None
    behavior_recovery: float | None
    cause_frequencies: dict[str, float]
    item_frequencies: dict[str, float]

    def to_dict(self) -> dict:
        return asdict(self)


def cause_name(p: PredictorId) -> str:
    """Table-style name of a top predictor: 'Light ROC', 'Noise level', 'Time-of-day'."""
    if p.kind == "time_of_day":
        return "Time-of-day"
    base = p.channel.capitalize()
    return f"{base} ROC" if p.kind == "roc" else f"{base} level"


def score_recovery(reports: Sequence, truth: GroundTruth) -> RecoveryMetrics:
    """Compare report top predictors and behaviors with the planted triggers."""
    known = set(truth.observation_ids) | set(truth.records)
    unknown = [r.observation_id for r in reports if r.observation_id not in known]
    if unknown:
        raise ValueError(f"reports reference unknown observation ids: {unknown[:5]}")
    positive = [r for r in reports if r.prediction.label == Label.POSITIVE and r.top_predictor is not None]
    tp = [r for r in positive if r.observation_id in truth.records]
    channel_hits = behavior_hits = 0
    for r in tp:
        rec = truth.records[r.observation_id]
        top = r.top_predictor
        if rec.trigger_behavior == "TimeOfDay":
            hit = top.kind == "time_of_day"
            channel_hits += hit
            behavior_hits += hit
            continue
        if top.channel == rec.trigger_channel:
            channel_hits += 1
            if r.evidence is not None and r.evidence.label.value == rec.trigger_behavior:
                behavior_hits += 1
    causes = Counter(cause_name(r.top_predictor) for r in positive)
    items = Counter(
        f"{r.top_predictor.channel or 'time_of_day'}/{r.evidence.label.value if r.evidence else 'n/a'}"
        for r in positive
    )
    npos = len(positive)
    return RecoveryMetrics(
        true_positive_count=len(tp),
        positive_report_count=npos,
        channel_recovery=channel_hits / len(tp) if tp else None,
        behavior_recovery=behavior_hits / len(tp) if tp else None,
        cause_frequencies={k: v / npos for k, v in sorted(causes.items(), key=lambda kv: (-kv[1], kv[0]))},
        item_frequencies={k: v / npos for k, v in sorted(items.items(), key=lambda kv: (-kv[1], kv[0]))},
    )


def format_recovery(m: RecoveryMetrics) -> str:
    def pct(x):
        return "n/a" if x is None else f"{100 * x:.0f}%"

    lines = [
        f"channel recovery: {pct(m.channel_recovery)} (true positives: {m.true_positive_count})",
        f"behavior recovery: {pct(m.behavior_recovery)}",
        "common cause: " + (" ".join(f"{k}: {100 * v:.0f}%" for k, v in m.cause_frequencies.items()) or "n/a"),
    ]
    return "\n".join(lines)
