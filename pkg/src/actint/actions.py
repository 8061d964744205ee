"""Rule table mapping (channel, behavior) findings to caregiver suggestions."""

from __future__ import annotations

import fnmatch
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from .behavior import BehaviorEvidence, BehaviorLabel
from .model import PredictorId, Prediction
from .ranking import ImportanceRanking

REPORT_FORMAT_VERSION = 1
TIME_OF_DAY_CHANNEL = "time_of_day"
_WILDCARD_CHARS = set("*?[")


class RuleError(ValueError):
    pass


@dataclass(frozen=True)
class ActionRule:
    channel_pattern: str
    behavior: BehaviorLabel
    suggestion: str
    priority: int = 0
    line: int | None = None

    @property
    def is_wildcard(self) -> bool:
        return bool(_WILDCARD_CHARS & set(self.channel_pattern))

    def matches(self, channel: str, behavior: BehaviorLabel) -> bool:
        if behavior != self.behavior:
            return False
        if self.is_wildcard:
            return fnmatch.fnmatchcase(channel, self.channel_pattern)
        return channel == self.channel_pattern

    def to_dict(self) -> dict:
        return {
            "channel": self.channel_pattern,
            "behavior": self.behavior.value,
            "suggestion": self.suggestion,
            "priority": self.priority,
        }


def _iter_array_items(text: str):
    """Yield (line_number, item) for each element of a top-level JSON array."""
    dec = json.JSONDecoder()
    ws = " \t\r\n"
    i = len(text) - len(text.lstrip(ws))
    if i == len(text):
        return
    if text[i] != "[":
        raise RuleError("rule file must be a JSON array")
    i += 1
    first = True
    while True:
        while i < len(text) and text[i] in ws:
            i += 1
        if i < len(text) and text[i] == "]":
            rest = text[i + 1 :].strip()
            if rest:
                raise RuleError(f"trailing content after rule array: {rest[:40]!r}")
            return
        if not first:
            if i >= len(text) or text[i] != ",":
                raise RuleError(f"expected ',' at line {text.count(chr(10), 0, i) + 1}")
            i += 1
            while i < len(text) and text[i] in ws:
                i += 1
        try:
            item, end = dec.raw_decode(text, i)
        except json.JSONDecodeError as exc:
            raise RuleError(f"invalid JSON in rule file: {exc}") from exc
        yield text.count("\n", 0, i) + 1, item
        i = end
        first = False


def parse_rules(text: str, source: str = "<rules>") -> tuple[ActionRule, ...]:
    rules: list[ActionRule] = []
    seen: dict[tuple[str, BehaviorLabel], int] = {}
    for line, item in _iter_array_items(text):
        if not isinstance(item, dict):
            raise RuleError(f"{source}:{line}: rule must be an object")
        missing = {"channel", "behavior", "suggestion"} - set(item)
        if missing:
            raise RuleError(f"{source}:{line}: missing field(s) {sorted(missing)}")
        extra = set(item) - {"channel", "behavior", "suggestion", "priority"}
        if extra:
            raise RuleError(f"{source}:{line}: unknown field(s) {sorted(extra)}")
        try:
            behavior = BehaviorLabel(item["behavior"])
        except ValueError:
            raise RuleError(f"{source}:{line}: unknown behavior label {item['behavior']!r}") from None
        channel, suggestion = item["channel"], item["suggestion"]
        priority = item.get("priority", 0)
        if not isinstance(channel, str) or not channel:
            raise RuleError(f"{source}:{line}: channel must be a non-empty string")
        if not isinstance(suggestion, str):
            raise RuleError(f"{source}:{line}: suggestion must be a string")
        if isinstance(priority, bool) or not isinstance(priority, int):
            raise RuleError(f"{source}:{line}: priority must be an integer")
        key = (channel, behavior)
        if key in seen:
            raise RuleError(
                f"{source}: duplicate rule ({channel}, {behavior.value}) at lines {seen[key]} and {line}"
            )
        seen[key] = line
        rules.append(ActionRule(channel, behavior, suggestion, priority, line))
    return tuple(rules)


def load_rules(path=None) -> tuple[ActionRule, ...]:
    """Load a rule file; ``None`` loads the bundled default table."""
    if path is None:
        text = resources.files("actint.data").joinpath("default_rules.json").read_text()
        return parse_rules(text, "default_rules.json")
    return parse_rules(Path(path).read_text(), str(path))


def dump_rules(rules: Sequence[ActionRule]) -> str:
    return json.dumps([r.to_dict() for r in rules], indent=2) + "\n"


def recommend(top: PredictorId, evidence: BehaviorEvidence, rules: Sequence[ActionRule]) -> list[str]:
    """Suggestions for the finding: exact channel matches first, then by ascending priority."""
    channel = top.channel if top.channel is not None else TIME_OF_DAY_CHANNEL
    hits = [(r.is_wildcard, r.priority, i, r) for i, r in enumerate(rules) if r.matches(channel, evidence.label)]
    hits.sort(key=lambda h: h[:3])
    return [h[3].suggestion for h in hits]


@dataclass(frozen=True)
class InterpretationReport:
    observation_id: str
    prediction: Prediction
    ranking: ImportanceRanking | None
    top_predictor: PredictorId | None
    evidence: BehaviorEvidence | None
    suggestions: tuple[str, ...]
    config_fingerprint: str
    tool_version: str

    def to_dict(self) -> dict:
        return {
            "version": REPORT_FORMAT_VERSION,
            "observation_id": self.observation_id,
            "prediction": self.prediction.to_dict(),
            "ranking": None if self.ranking is None else self.ranking.to_dict(),
            "top_predictor": None if self.top_predictor is None else str(self.top_predictor),
            "evidence": None if self.evidence is None else self.evidence.to_dict(),
            "suggestions": list(self.suggestions),
            "config_fingerprint": self.config_fingerprint,
            "tool_version": self.tool_version,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=False)

    @classmethod
    def from_dict(cls, d: dict) -> "InterpretationReport":
        if d.get("version") != REPORT_FORMAT_VERSION:
            raise ValueError(f"unsupported report version {d.get('version')!r}")
        return cls(
            observation_id=d["observation_id"],
            prediction=Prediction.from_dict(d["prediction"]),
            ranking=None if d["ranking"] is None else ImportanceRanking.from_dict(d["ranking"]),
            top_predictor=None if d["top_predictor"] is None else PredictorId.parse(d["top_predictor"]),
            evidence=None if d["evidence"] is None else BehaviorEvidence.from_dict(d["evidence"]),
            suggestions=tuple(d["suggestions"]),
            config_fingerprint=d["config_fingerprint"],
            tool_version=d["tool_version"],
        )

    @classmethod
    def from_json(cls, text: str) -> "InterpretationReport":
        return cls.from_dict(json.loads(text))


def report_schema() -> dict:
    return json.loads(resources.files("actint.data").joinpath("report.schema.json").read_text())
