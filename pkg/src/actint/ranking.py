"""Per-observation permutation importance.

Each predictor is disarranged on its own and the model is asked again; the
score is the original probability minus the mean disarranged probability.
Only the observation and the model are used, never other test windows.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .model import ModelAdapter, Observation, PredictorId, predict_proba

TIE_BREAK = "score desc, then channel name asc (time_of_day last), then raw < roc < time_of_day"
_KIND_ORDER = {"raw": 0, "roc": 1, "time_of_day": 2}


def _rank_key(item: tuple[PredictorId, float]):
    p, score = item
    return (-score, p.channel is None, p.channel or "", _KIND_ORDER[p.kind])


def _stream(seed: int, p: PredictorId, k: int) -> np.random.Generator:
    # keyed by predictor identity so scores do not depend on evaluation order
    return np.random.default_rng([seed & 0xFFFFFFFF, zlib.crc32(str(p).encode()), k])


def permute_samples(values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform random permutation (numpy's Fisher-Yates shuffle on a copy)."""
    out = np.array(values, dtype=np.float64, copy=True)
    rng.shuffle(out)
    return out


def disarrange(obs: Observation, p: PredictorId, rng: np.random.Generator) -> Observation:
    """Copy of ``obs`` with only predictor ``p`` scrambled.

    Raw and ROC series are shuffled independently; shuffling a raw channel
    does not recompute its ROC. Time of day is redrawn uniformly in [0, 24).
    """
    if p.kind == "time_of_day":
        return Observation(obs.id, obs.channels, obs.channel_roc, float(rng.uniform(0.0, 24.0)))
    if p.channel not in obs.channels:
        raise KeyError(f"predictor {p} not in observation {obs.id!r}")
    target = obs.channels if p.kind == "raw" else obs.channel_roc
    ts = target[p.channel]
    replaced = dict(target)
    replaced[p.channel] = ts.replace_values(permute_samples(ts.values, rng))
    if p.kind == "raw":
        return Observation(obs.id, replaced, obs.channel_roc, obs.time_of_day)
    return Observation(obs.id, obs.channels, replaced, obs.time_of_day)


@dataclass(frozen=True)
class ImportanceRanking:
    observation_id: str
    original_probability: float
    scores: dict[PredictorId, float]
    repeats: int
    seed: int
    top: tuple[PredictorId, ...] = field(default=())
    absolute: bool = False

    def __post_init__(self):
        if not self.top:
            object.__setattr__(self, "top", tuple(p for p, _ in sorted(self.scores.items(), key=_rank_key)))

    def to_dict(self) -> dict:
        return {
            "observation_id": self.observation_id,
            "original_probability": self.original_probability,
            "scores": {str(p): s for p, s in sorted(self.scores.items(), key=_rank_key)},
            "repeats": self.repeats,
            "seed": self.seed,
            "top": [str(p) for p in self.top],
            "absolute": self.absolute,
            "tie_break": TIE_BREAK,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ImportanceRanking":
        return cls(
            observation_id=d["observation_id"],
            original_probability=float(d["original_probability"]),
            scores={PredictorId.parse(k): float(v) for k, v in d["scores"].items()},
            repeats=int(d["repeats"]),
            seed=int(d["seed"]),
            top=tuple(PredictorId.parse(t) for t in d["top"]),
            absolute=bool(d.get("absolute", False)),
        )


def permutation_importance(
    model: ModelAdapter,
    obs: Observation,
    repeats: int = 8,
    seed: int = 0,
    absolute: bool = False,
    predictors=None,
) -> ImportanceRanking:
    """Score every predictor of ``obs`` by the probability drop its disarrangement causes.

    Scores are signed by default: a shuffle that raises the probability gives
    a negative score. ``absolute=True`` ranks by magnitude instead.
    ``predictors`` only changes the evaluation order; all predictors are scored.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    order = list(predictors) if predictors is not None else obs.predictors()
    if set(order) != set(obs.predictors()):
        raise ValueError("predictors must be a permutation of the observation's predictor set")
    p_orig = predict_proba(model, obs).probability
    scores = {}
    for p in order:
        probs = np.array(
            [predict_proba(model, disarrange(obs, p, _stream(seed, p, k))).probability for k in range(repeats)]
        )
        # mean of differences keeps an untouched predictor at exactly 0
        score = float(np.mean(p_orig - probs))
        scores[p] = abs(score) if absolute else score
    return ImportanceRanking(obs.id, p_orig, scores, repeats, seed, absolute=absolute)


def top_predictor(r: ImportanceRanking) -> PredictorId:
    if not r.top:
        raise ValueError("empty ranking")
    return r.top[0]
