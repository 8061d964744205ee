"""predict -> rank -> extract behavior -> recommend, for one observation."""

from __future__ import annotations

from typing import Mapping, Sequence

from . import __version__
from .actions import ActionRule, InterpretationReport, recommend
from .behavior import extract_actionable_item, make_filter_bank
from .config import RunConfig
from .model import Label, ModelAdapter, Observation, predict_proba
from .ranking import permutation_importance
from .tscore import ChannelStats


def interpret_observation(
    model: ModelAdapter,
    obs: Observation,
    stats: Mapping[str, ChannelStats] | Sequence[ChannelStats],
    rules: Sequence[ActionRule],
    config: RunConfig = RunConfig(),
    fingerprint: str | None = None,
) -> InterpretationReport:
    """Full interpretation of one window.

    Ranking and behavior extraction run for every observation passed in;
    suggestions are attached only when the prediction is positive.
    """
    prediction = predict_proba(model, obs)
    ranking = permutation_importance(model, obs, config.repeats, config.seed, config.absolute_scores)
    top, evidence = extract_actionable_item(
        obs,
        ranking,
        stats,
        make_filter_bank(obs.length),
        z_threshold=config.z_threshold,
        min_similarity=config.min_similarity,
    )
    suggestions = recommend(top, evidence, rules) if prediction.label == Label.POSITIVE else []
    return InterpretationReport(
        observation_id=obs.id,
        prediction=prediction,
        ranking=ranking,
        top_predictor=top,
        evidence=evidence,
        suggestions=tuple(suggestions),
        config_fingerprint=fingerprint or config.fingerprint(),
        tool_version=__version__,
    )
