"""Seeded experiments shared by the acceptance suite and the scripts in ``scripts/``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .behavior import DIFFERENCING_LABELS, BehaviorLabel, classify_differencing, make_filter_bank
from .config import RunConfig
from .interpret import interpret_observation
from .model import Label, PredictorId, TrainConfig, predict_proba, train_baseline
from .actions import load_rules
from .dataset import from_pairs
from .synth import ChannelSpec, ScenarioSpec, TriggerSpec, default_scenario, generate_dataset


def planted_template(behavior: BehaviorLabel, n: int, rng: np.random.Generator, noise_ratio: float | None):
    """One planted window: ramp over the whole window or a step in the middle 60%.

    ``noise_ratio`` is the magnitude-to-noise-sd ratio; ``None`` means noise-free.
    Magnitude is drawn log-uniformly from [0.1, 100].
    """
    magnitude = float(10 ** rng.uniform(-1, 2))
    offset = float(rng.uniform(-50, 50))
    sign = 1.0 if behavior in (BehaviorLabel.INCREASING, BehaviorLabel.SUDDEN_CHANGE_UP) else -1.0
    if behavior in (BehaviorLabel.INCREASING, BehaviorLabel.DECREASING):
        x = sign * magnitude * np.linspace(0.0, 1.0, n)
        lag = 0
    else:
        lag = int(rng.integers(math.ceil(0.2 * n), math.floor(0.8 * n), endpoint=True))
        x = np.zeros(n)
        x[lag:] = sign * magnitude
    if noise_ratio is not None:
        x = x + rng.normal(0.0, magnitude / noise_ratio, n)
    return x + offset, lag


@dataclass(frozen=True)
class TemplateTrial:
    behavior: str
    noise_ratio: float | None
    cases: int
    correct: int
    rejected: int

    @property
    def rate(self) -> float:
        return self.correct / self.cases


def template_monte_carlo(
    n: int = 3600,
    seeds: int = 100,
    noise_ratio: float | None = None,
    min_similarity: float = 0.35,
    base_seed: int = 0,
) -> list[TemplateTrial]:
    """Plant each of the four differencing behaviors ``seeds`` times and classify."""
    bank = make_filter_bank(n)
    out = []
    for k, behavior in enumerate(DIFFERENCING_LABELS):
        correct = rejected = 0
        for s in range(seeds):
            rng = np.random.default_rng([base_seed, k, s])
            x, _ = planted_template(behavior, n, rng, noise_ratio)
            label = classify_differencing(x, bank, min_similarity).label
            correct += label == behavior
            rejected += label == BehaviorLabel.NO_DOMINANT_CHANGE
        out.append(TemplateTrial(behavior.value, noise_ratio, seeds, correct, rejected))
    return out


def noise_rejection_rate(n: int = 3600, seeds: int = 100, min_similarity: float = 0.35, base_seed: int = 0) -> float:
    """Fraction of pure white-noise windows that the gate turns into NoDominantChange."""
    bank = make_filter_bank(n)
    hits = 0
    for s in range(seeds):
        x = np.random.default_rng([base_seed, 99, s]).normal(size=n)
        hits += classify_differencing(x, bank, min_similarity).label == BehaviorLabel.NO_DOMINANT_CHANGE
    return hits / seeds


def roc_signal_scenario(seed: int, window: int = 3600, positives: int = 48, negatives: int = 192) -> ScenarioSpec:
    """Five nuisance-rich channels; positives differ only by a light step (a light ROC peak)."""
    base = default_scenario(seed)
    return ScenarioSpec(
        channels=base.channels,
        trigger_mix=(TriggerSpec("light", "SuddenChangeUp", 3.0, 1.0),),
        window_length_samples=window,
        positive_count=positives,
        negative_count=negatives,
        seed=seed,
    )


def light_change_scenario(seed: int = 0, window: int = 3600) -> ScenarioSpec:
    """Quiet room where agitation follows a sudden jump in light level."""
    channels = (
        ChannelSpec("light", 120.0, 15.0, "white", 20.0),
        ChannelSpec("temperature", 22.0, 0.3, "random-walk", 0.5),
        ChannelSpec("humidity", 45.0, 2.0, "random-walk", 1.0),
        ChannelSpec("pressure", 101.3, 0.05, "random-walk", 0.0),
        ChannelSpec("noise", 38.0, 4.0, "white", 3.0),
    )
    return ScenarioSpec(
        channels=channels,
        trigger_mix=(TriggerSpec("light", "SuddenChangeUp", 4.0, 1.0), TriggerSpec("light", "SuddenChangeDown", 4.0, 1.0)),
        window_length_samples=window,
        positive_count=48,
        negative_count=192,
        seed=seed,
    )


@dataclass(frozen=True)
class DominanceTrial:
    seed: int
    true_positives: int
    roc_signal_top: int
    top_counts: dict

    @property
    def rate(self) -> float:
        return self.roc_signal_top / self.true_positives if self.true_positives else float("nan")


def signal_dominance_trial(seed: int, window: int = 3600, repeats: int = 8, epochs: int = 3000) -> DominanceTrial:
    """Train the baseline on the train split and rank every true positive of the test split."""
    pairs, _ = generate_dataset(roc_signal_scenario(seed, window))
    ds = from_pairs(pairs, None, seed=seed)
    model = train_baseline(ds.pairs("train"), TrainConfig(epochs=epochs))
    cfg = RunConfig(repeats=repeats, seed=seed)
    rules = load_rules()
    tp = hits = 0
    counts: dict[str, int] = {}
    target = PredictorId.roc("light")
    for obs, label in ds.pairs("test"):
        if label != 1 or predict_proba(model, obs).label != Label.POSITIVE:
            continue
        report = interpret_observation(model, obs, model.training_stats, rules, cfg)
        tp += 1
        hits += report.top_predictor == target
        key = str(report.top_predictor)
        counts[key] = counts.get(key, 0) + 1
    return DominanceTrial(seed, tp, hits, dict(sorted(counts.items())))
