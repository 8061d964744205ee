"""CSV stream ingestion.

Layout: one ``<channel>.csv`` per channel with rows ``unix_timestamp,value``
and a label file with one ``unix_timestamp`` per agitation event. Channels
sampled faster than the target rate are block-averaged down first. Each
event yields the window ``[event - 72 min, event - 12 min)``; negatives are
drawn from spans that stay clear of ``[event - 72 min, event + 12 min]``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import Dataset, Example, stratified_split
from .model import Observation
from .tscore import CoverageError, SmoothingConfig, TimeSeries, downsample_mean, extract_window

log = logging.getLogger(__name__)


class IngestError(ValueError):
    def __init__(self, message: str, diagnostics: Sequence[str] = ()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


@dataclass(frozen=True)
class WindowSpec:
    lead_start_min: float = 72.0
    lead_end_min: float = 12.0
    target_rate_hz: float = 1.0
    negative_ratio: int = 4
    train_fraction: float = 0.7

    @property
    def duration_s(self) -> float:
        return (self.lead_start_min - self.lead_end_min) * 60.0


@dataclass
class IngestResult:
    dataset: Dataset
    warnings: list[str] = field(default_factory=list)
    skipped_events: list[float] = field(default_factory=list)


def _parse_rows(path: Path, ncols: int) -> tuple[np.ndarray, list[str]]:
    rows, diags = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            try:
                if len(parts) != ncols:
                    raise ValueError(f"expected {ncols} column(s), got {len(parts)}")
                vals = [float(p) for p in parts]
                if not all(math.isfinite(v) for v in vals):
                    raise ValueError("non-finite value")
            except ValueError as exc:
                if lineno == 1 and not diags and not rows:
                    continue  # header row
                diags.append(f"{path.name}:{lineno}: {exc}: {line[:60]!r}")
                continue
            rows.append(vals)
    return np.array(rows, dtype=np.float64).reshape(-1, ncols), diags


def read_channel_csv(path) -> tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    data, diags = _parse_rows(path, 2)
    if diags:
        raise IngestError(f"{path.name}: {len(diags)} malformed row(s)", diags)
    if data.shape[0] < 2:
        raise IngestError(f"{path.name}: fewer than 2 samples")
    order = np.argsort(data[:, 0], kind="stable")
    return data[order, 0], data[order, 1]


def read_labels(path) -> list[float]:
    path = Path(path)
    data, diags = _parse_rows(path, 1)
    if diags:
        raise IngestError(f"{path.name}: {len(diags)} malformed row(s)", diags)
    return sorted(float(v) for v in data[:, 0])


def build_runs(name: str, t: np.ndarray, v: np.ndarray, target_rate_hz: float = 1.0) -> list[TimeSeries]:
    """Split a channel into gap-free runs and bring each to ``target_rate_hz``."""
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise IngestError(f"{name}: duplicate timestamps")
    period = float(np.median(dt))
    rate = 1.0 / period
    factor = rate / target_rate_hz
    k = int(round(factor))
    if k < 1 or abs(factor - k) > 0.01 * k:
        raise IngestError(f"{name}: sample rate {rate:.4g} Hz is not an integer multiple of {target_rate_hz} Hz")
    breaks = np.flatnonzero(dt > 1.5 * period) + 1
    runs = []
    for seg in np.split(np.arange(t.size), breaks):
        if seg.size < max(2, k):
            continue
        ts = TimeSeries(v[seg], rate, name, float(t[seg[0]]))
        if k > 1:
            ts = downsample_mean(ts, k)
            ts = TimeSeries(ts.values, target_rate_hz, name, ts.start_time)
        runs.append(ts)
    return runs


def _window_from_runs(runs: list[TimeSeries], event_time: float, spec: WindowSpec) -> TimeSeries:
    t0 = event_time - spec.lead_start_min * 60.0
    t1 = event_time - spec.lead_end_min * 60.0
    for run in runs:
        if run.start_time <= t0 + 1e-6 and run.end_time >= t1 - 1e-6:
            return extract_window(run, event_time, spec.lead_start_min, spec.lead_end_min)
    raise CoverageError(t0, t1, f"{runs[0].channel_name if runs else '?'}: window [{t0:.0f}, {t1:.0f}) not covered")


def _intersect(a: list[tuple[float, float]], b: list[tuple[float, float]]) -> list[tuple[float, float]]:
    out = []
    for s1, e1 in a:
        for s2, e2 in b:
            s, e = max(s1, s2), min(e1, e2)
            if e > s:
                out.append((s, e))
    return sorted(out)


def time_of_day_hours(unix_time: float) -> float:
    return (unix_time % 86400.0) / 3600.0


def ingest_streams(
    streams: dict[str, list[TimeSeries]],
    events: Sequence[float],
    spec: WindowSpec = WindowSpec(),
    smoothing: SmoothingConfig | None = SmoothingConfig(),
    seed: int = 0,
) -> IngestResult:
    warnings: list[str] = []
    skipped: list[float] = []
    names = sorted(streams)
    lead0, lead1 = spec.lead_start_min * 60.0, spec.lead_end_min * 60.0

    def build(oid: str, event_time: float) -> Observation:
        chans = {n: _window_from_runs(streams[n], event_time, spec) for n in names}
        return Observation.from_raw(oid, chans, time_of_day_hours(event_time - lead1), smoothing)

    positives: list[Example] = []
    for i, e in enumerate(events):
        try:
            obs = build(f"evt-{i:04d}", e)
        except CoverageError as exc:
            warnings.append(f"event at {e:.0f} skipped: {exc}")
            skipped.append(e)
            continue
        positives.append(Example(obs, 1, meta={"event_time": e, "window_start": e - lead0}))
    ev = np.array(sorted(events))
    for a, b in zip(ev[:-1], ev[1:]):
        if b - a < spec.duration_s:
            warnings.append(f"events at {a:.0f} and {b:.0f} have overlapping windows")

    cover = [(r.start_time, r.end_time) for r in streams[names[0]]]
    for n in names[1:]:
        cover = _intersect(cover, [(r.start_time, r.end_time) for r in streams[n]])
    exclusions = [(e - lead0, e + lead1) for e in events]
    candidates = []
    for s, end in cover:
        w0 = s
        while w0 + spec.duration_s <= end + 1e-6:
            w1 = w0 + spec.duration_s
            if not any(w0 <= x1 and x0 < w1 for x0, x1 in exclusions):
                candidates.append(w0)
            w0 = w1
    want = spec.negative_ratio * len(positives)
    rng = np.random.default_rng(seed)
    if len(candidates) < want:
        warnings.append(f"only {len(candidates)} clean negative windows available, wanted {want}")
        chosen = candidates
    else:
        chosen = sorted(candidates[i] for i in rng.choice(len(candidates), size=want, replace=False))
    negatives = []
    for j, w0 in enumerate(chosen):
        pseudo_event = w0 + lead0
        negatives.append(Example(build(f"neg-{j:04d}", pseudo_event), 0, meta={"window_start": w0}))

    examples = positives + negatives
    if examples:
        splits = stratified_split([x.label for x in examples], spec.train_fraction, seed)
        for x, s in zip(examples, splits):
            x.split = s
    for w in warnings:
        log.warning(w)
    meta = {
        "source": "ingest",
        "lead_start_min": spec.lead_start_min,
        "lead_end_min": spec.lead_end_min,
        "sample_rate_hz": spec.target_rate_hz,
        "train_fraction": spec.train_fraction,
        "seed": seed,
        "warnings": warnings,
    }
    return IngestResult(Dataset(examples, smoothing, meta), warnings, skipped)


def ingest_csv_dir(
    csv_dir,
    labels_path=None,
    spec: WindowSpec = WindowSpec(),
    smoothing: SmoothingConfig | None = SmoothingConfig(),
    seed: int = 0,
) -> IngestResult:
    csv_dir = Path(csv_dir)
    labels_path = Path(labels_path) if labels_path else csv_dir / "labels.csv"
    if not labels_path.exists():
        raise IngestError(f"label file not found: {labels_path}")
    files = sorted(p for p in csv_dir.glob("*.csv") if p.resolve() != labels_path.resolve())
    if not files:
        raise IngestError(f"no channel CSV files in {csv_dir}")
    diagnostics: list[str] = []
    streams = {}
    for f in files:
        try:
            t, v = read_channel_csv(f)
            streams[f.stem] = build_runs(f.stem, t, v, spec.target_rate_hz)
        except IngestError as exc:
            diagnostics += exc.diagnostics or [str(exc)]
    try:
        events = read_labels(labels_path)
    except IngestError as exc:
        diagnostics += exc.diagnostics
    if diagnostics:
        raise IngestError(f"{len(diagnostics)} problem(s) reading {csv_dir}", diagnostics)
    return ingest_streams(streams, events, spec, smoothing, seed)


def write_stream_csv(dataset: Dataset, out_dir, base_time: float = 1_600_000_000.0) -> list[float]:
    """Lay out each window on its own (every other) day as CSV streams plus a label file.

    Window ends land at the observation's time of day, so re-ingesting with
    the default window spec recovers the positives exactly. Returns the
    event timestamps written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    base_day = math.floor(base_time / 86400.0) * 86400.0
    files = {}
    events = []
    try:
        for k, ex in enumerate(dataset.examples):
            o = ex.observation
            rate = o.sample_rate_hz
            end = base_day + 2 * (k + 1) * 86400.0 + round(o.time_of_day * 3600.0 * rate) / rate
            start = end - o.length / rate
            for name in o.channel_names:
                fh = files.get(name)
                if fh is None:
                    fh = files[name] = open(out_dir / f"{name}.csv", "w")
                    fh.write("unix_timestamp,value\n")
                t = start + np.arange(o.length) / rate
                fh.writelines(f"{ti!r},{vi!r}\n" for ti, vi in zip(t.tolist(), o.channels[name].values.tolist()))
            if ex.label == 1:
                events.append(end + 12 * 60.0)
    finally:
        for fh in files.values():
            fh.close()
    (out_dir / "labels.csv").write_text("unix_timestamp\n" + "".join(f"{e!r}\n" for e in events))
    return events
