"""Run configuration shared by the CLI commands."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .tscore import SmoothingConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExternalModelConfig:
    executable: str
    args: tuple[str, ...] = ()
    handshake_timeout: float = 10.0


@dataclass(frozen=True)
class RunConfig:
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    repeats: int = 8
    seed: int = 0
    z_threshold: float = 2.0
    min_similarity: float = 0.35
    decision_threshold: float = 0.5
    rules_path: str | None = None
    baseline_path: str | None = None
    external: ExternalModelConfig | None = None
    positives_only: bool = True
    absolute_scores: bool = False

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.z_threshold <= 0:
            raise ConfigError("z_threshold must be positive")
        if not -1.0 <= self.min_similarity <= 1.0:
            raise ConfigError("min_similarity must lie in [-1, 1]")
        if not 0.0 < self.decision_threshold < 1.0:
            raise ConfigError("decision_threshold must lie in (0, 1)")

    def check_model_source(self):
        if (self.baseline_path is None) == (self.external is None):
            raise ConfigError("configure exactly one model source: a baseline model file or an external command")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["smoothing"] = self.smoothing.to_dict()
        if self.external is not None:
            d["external"]["args"] = list(self.external.args)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        kw = dict(d)
        unknown = set(kw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        try:
            if "smoothing" in kw and kw["smoothing"] is not None:
                kw["smoothing"] = SmoothingConfig.from_dict(kw["smoothing"])
            if kw.get("external") is not None:
                ext = dict(kw["external"])
                ext["args"] = tuple(ext.get("args", ()))
                kw["external"] = ExternalModelConfig(**ext)
            return cls(**kw)
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def fingerprint(self) -> str:
        """First 16 hex digits of the SHA-256 of the behavior-affecting settings."""
        d = self.to_dict()
        # file locations are not behavior; the model content is pinned elsewhere
        for k in ("rules_path", "baseline_path"):
            d[k] = None if d[k] is None else Path(d[k]).name
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        try:
            return replace(self, **kw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
