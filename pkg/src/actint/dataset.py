"""Canonical dataset file: versioned JSON, optionally gzip-compressed (``.gz`` suffix).

Raw windows are stored as base64 little-endian float64 so a 240 x 5 x 3600
deployment stays a manageable size and round-trips bit-exactly. ROC series are
not stored; they are recomputed on load from the recorded smoothing config.
"""

from __future__ import annotations

import base64
import gzip
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .model import Observation
from .tscore import SmoothingConfig, TimeSeries

DATASET_FORMAT_VERSION = 1


class DatasetError(ValueError):
    pass


def encode_array(a: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def decode_array(s: str) -> np.ndarray:
    return np.frombuffer(base64.b64decode(s), dtype="<f8").astype(np.float64)


@dataclass
class Example:
    observation: Observation
    label: int
    split: str = "train"
    meta: dict = field(default_factory=dict)


@dataclass
class Dataset:
    examples: list[Example]
    smoothing: SmoothingConfig | None = field(default_factory=SmoothingConfig)
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[Example]:
        return iter(self.examples)

    def pairs(self, split: str = "all") -> list[tuple[Observation, int]]:
        return [(e.observation, e.label) for e in self.examples if split == "all" or e.split == split]

    def subset(self, split: str) -> list[Example]:
        return [e for e in self.examples if split == "all" or e.split == split]

    def to_dict(self) -> dict:
        obs = []
        for e in self.examples:
            o = e.observation
            obs.append(
                {
                    "id": o.id,
                    "label": e.label,
                    "split": e.split,
                    "time_of_day": o.time_of_day,
                    "meta": e.meta,
                    "channels": {
                        k: {
                            "rate_hz": o.channels[k].sample_rate_hz,
                            "start_time": o.channels[k].start_time,
                            "values_f64": encode_array(o.channels[k].values),
                        }
                        for k in o.channel_names
                    },
                }
            )
        return {
            "version": DATASET_FORMAT_VERSION,
            "smoothing": None if self.smoothing is None else self.smoothing.to_dict(),
            "meta": self.meta,
            "observations": obs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Dataset":
        if d.get("version") != DATASET_FORMAT_VERSION:
            raise DatasetError(f"unsupported dataset version {d.get('version')!r}")
        smoothing = None if d.get("smoothing") is None else SmoothingConfig.from_dict(d["smoothing"])
        examples = []
        for o in d["observations"]:
            channels = {
                k: TimeSeries(decode_array(v["values_f64"]), v["rate_hz"], k, v.get("start_time", 0.0))
                for k, v in o["channels"].items()
            }
            obs = Observation.from_raw(o["id"], channels, o["time_of_day"], smoothing)
            examples.append(Example(obs, int(o["label"]), o.get("split", "train"), o.get("meta", {})))
        return cls(examples, smoothing, d.get("meta", {}))

    def save(self, path) -> None:
        text = json.dumps(self.to_dict(), sort_keys=True) + "\n"
        path = Path(path)
        if path.suffix == ".gz":
            # mtime=0 keeps the compressed bytes reproducible
            with open(path, "wb") as fh, gzip.GzipFile(filename="", mode="wb", fileobj=fh, mtime=0) as gz:
                gz.write(text.encode())
        else:
            path.write_text(text)

    @classmethod
    def load(cls, path) -> "Dataset":
        path = Path(path)
        if not path.exists():
            raise DatasetError(f"dataset file not found: {path}")
        raw = path.read_bytes()
        if raw[:2] == b"\x1f\x8b":
            raw = gzip.decompress(raw)
        try:
            return cls.from_dict(json.loads(raw))
        except (json.JSONDecodeError, KeyError) as exc:
            raise DatasetError(f"{path}: malformed dataset file ({exc})") from exc


def stratified_split(labels: Sequence[int], train_fraction: float = 0.7, seed: int = 0) -> list[str]:
    """Per-class shuffled split; ``round(train_fraction * class_count)`` of each class go to train."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    split = np.array(["test"] * labels.size, dtype=object)
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(idx.size)]
        split[idx[: int(round(train_fraction * idx.size))]] = "train"
    return [str(s) for s in split]


def from_pairs(
    pairs: Sequence[tuple[Observation, int]],
    smoothing: SmoothingConfig | None,
    train_fraction: float = 0.7,
    seed: int = 0,
    meta: dict | None = None,
) -> Dataset:
    splits = stratified_split([lbl for _, lbl in pairs], train_fraction, seed)
    return Dataset([Example(o, int(l), s) for (o, l), s in zip(pairs, splits)], smoothing, meta or {})
