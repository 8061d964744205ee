"""Behavior of the top predictor.

Raw predictors get a level check against training statistics. ROC predictors
get template matching of the original series against four z-normalized
templates (ramp up/down, step up/down).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Mapping

import numpy as np
from scipy.signal import correlate

from .tscore import DEGENERATE_EPS, ChannelStats, DegenerateSeriesError, TimeSeries, zscore


class BehaviorLabel(str, Enum):
    ABNORMALLY_LOW = "AbnormallyLow"
    ABNORMALLY_HIGH = "AbnormallyHigh"
    NOMINAL_LEVEL = "NominalLevel"
    INCREASING = "Increasing"
    DECREASING = "Decreasing"
    SUDDEN_CHANGE_UP = "SuddenChangeUp"
    SUDDEN_CHANGE_DOWN = "SuddenChangeDown"
    NO_DOMINANT_CHANGE = "NoDominantChange"

    @property
    def mirror(self) -> "BehaviorLabel":
        return _MIRROR.get(self, self)


_MIRROR = {
    BehaviorLabel.INCREASING: BehaviorLabel.DECREASING,
    BehaviorLabel.DECREASING: BehaviorLabel.INCREASING,
    BehaviorLabel.SUDDEN_CHANGE_UP: BehaviorLabel.SUDDEN_CHANGE_DOWN,
    BehaviorLabel.SUDDEN_CHANGE_DOWN: BehaviorLabel.SUDDEN_CHANGE_UP,
    BehaviorLabel.ABNORMALLY_HIGH: BehaviorLabel.ABNORMALLY_LOW,
    BehaviorLabel.ABNORMALLY_LOW: BehaviorLabel.ABNORMALLY_HIGH,
}

STATIONARY_LABELS = frozenset(
    {BehaviorLabel.ABNORMALLY_LOW, BehaviorLabel.ABNORMALLY_HIGH, BehaviorLabel.NOMINAL_LEVEL}
)
DIFFERENCING_LABELS = (
    BehaviorLabel.INCREASING,
    BehaviorLabel.DECREASING,
    BehaviorLabel.SUDDEN_CHANGE_UP,
    BehaviorLabel.SUDDEN_CHANGE_DOWN,
)


@dataclass(frozen=True, eq=False)
class FilterBank:
    length: int
    filters: Mapping[BehaviorLabel, np.ndarray]

    def __getitem__(self, label: BehaviorLabel) -> np.ndarray:
        return self.filters[label]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=16)
def make_filter_bank(n: int) -> FilterBank:
    """Four z-normalized templates of length ``n``; steps switch at ``n // 2``."""
    if n < 4:
        raise ValueError(f"filter length must be >= 4, got {n}")
    ramp, _, _ = zscore(np.linspace(0.0, 1.0, n))
    step, _, _ = zscore((np.arange(n) >= n // 2).astype(np.float64))
    filters = {
        BehaviorLabel.INCREASING: _readonly(ramp),
        BehaviorLabel.DECREASING: _readonly(-ramp),
        BehaviorLabel.SUDDEN_CHANGE_UP: _readonly(step),
        BehaviorLabel.SUDDEN_CHANGE_DOWN: _readonly(-step),
    }
    return FilterBank(n, filters)


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, TimeSeries) else np.asarray(x, dtype=np.float64)


def xcorr_normalized(x, g, eps: float = DEGENERATE_EPS) -> np.ndarray:
    """Zero-padded full normalized cross-correlation.

    Entry ``i + n - 1`` holds ``(1/n) * sum_m xz[m - i] * gz[m]`` for lag
    ``i`` in ``[-(n-1), n-1]``, with both inputs z-normalized. A series
    correlated with itself gives exactly 1 at lag 0. Raises
    :class:`DegenerateSeriesError` when ``x`` is flat.
    """
    xv = _values(x)
    gv = np.asarray(g, dtype=np.float64)
    if xv.size != gv.size:
        raise ValueError(f"length mismatch: series {xv.size} vs filter {gv.size}")
    xz, _, _ = zscore(xv, eps)
    gz, _, _ = zscore(gv, eps)
    n = xv.size
    return correlate(gz, xz, mode="full") / n


def lags(n: int) -> np.ndarray:
    return np.arange(-(n - 1), n)


def shifted_template_similarity(xz: np.ndarray, g: np.ndarray, max_shift: int) -> np.ndarray:
    """Pearson correlation of ``xz`` with ``g`` translated by each lag in ``[-max_shift, max_shift]``.

    The translated template is extended with its own edge values instead of
    zeros and is re-normalized over the window, so an off-center step still
    matches the step template exactly. ``xz`` must already be z-normalized.
    Lags where the translated template is flat score 0.
    """
    n = xz.size
    lag = np.arange(-max_shift, max_shift + 1)
    core = correlate(g, xz, mode="full")[lag + n - 1]  # sum over the overlap
    px = np.concatenate(([0.0], np.cumsum(xz)))
    total = px[-1]
    head = np.clip(-lag, 0, n)  # samples before the template starts (filled with g[0])
    tail = np.clip(lag, 0, n)  # samples after it ends (filled with g[-1])
    dot = core + g[0] * px[head] + g[-1] * (total - px[n - tail])
    pg = np.concatenate(([0.0], np.cumsum(g)))
    pg2 = np.concatenate(([0.0], np.cumsum(g * g)))
    lo = np.clip(lag, 0, n)
    hi = np.clip(n + lag, 0, n)
    s1 = head * g[0] + (pg[hi] - pg[lo]) + tail * g[-1]
    s2 = head * g[0] ** 2 + (pg2[hi] - pg2[lo]) + tail * g[-1] ** 2
    var = np.maximum(s2 / n - (s1 / n) ** 2, 0.0)
    std = np.sqrt(var)
    with np.errstate(divide="ignore", invalid="ignore"):
        sim = np.where(std > 1e-9, dot / (n * std), 0.0)
    return sim


@dataclass(frozen=True)
class BehaviorEvidence:
    label: BehaviorLabel
    similarity_scores: dict[BehaviorLabel, float] | None = None
    xcorr_peaks: dict[BehaviorLabel, float] | None = None
    z_score: float | None = None
    best_lag: int | None = None
    notes: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        def enc(m):
            return None if m is None else {k.value: v for k, v in m.items()}

        return {
            "label": self.label.value,
            "similarity_scores": enc(self.similarity_scores),
            "xcorr_peaks": enc(self.xcorr_peaks),
            "z_score": self.z_score,
            "best_lag": self.best_lag,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BehaviorEvidence":
        def dec(m):
            return None if m is None else {BehaviorLabel(k): float(v) for k, v in m.items()}

        return cls(
            label=BehaviorLabel(d["label"]),
            similarity_scores=dec(d.get("similarity_scores")),
            xcorr_peaks=dec(d.get("xcorr_peaks")),
            z_score=None if d.get("z_score") is None else float(d["z_score"]),
            best_lag=None if d.get("best_lag") is None else int(d["best_lag"]),
            notes=tuple(d.get("notes", ())),
        )


NO_CHANGE_NOTE = "NoDominantChange is a reject outcome added by this toolkit"


def classify_differencing(
    raw_channel,
    bank: FilterBank,
    min_similarity: float = 0.35,
    max_shift_fraction: float = 0.4,
) -> BehaviorEvidence:
    """Pick the template that best matches the original (not ROC) series.

    Each template is scored by its best shift-renormalized correlation over
    lags up to ``max_shift_fraction * n``; the zero-padded correlation peak is
    kept alongside as ``xcorr_peaks``.
    """
    xv = _values(raw_channel)
    n = bank.length
    if xv.size != n:
        raise ValueError(f"length mismatch: series {xv.size} vs filter bank {n}")
    try:
        xz, _, _ = zscore(xv)
    except DegenerateSeriesError:
        return BehaviorEvidence(
            BehaviorLabel.NO_DOMINANT_CHANGE, notes=("degenerate (flat) series", NO_CHANGE_NOTE)
        )
    max_shift = min(n - 1, int(math.floor(max_shift_fraction * n)))
    sims: dict[BehaviorLabel, float] = {}
    peaks: dict[BehaviorLabel, float] = {}
    best_lags: dict[BehaviorLabel, int] = {}
    for label in DIFFERENCING_LABELS:
        g = bank[label]
        s = shifted_template_similarity(xz, g, max_shift)
        # prefer the smallest |lag| among exact ties
        order = np.argsort(np.abs(np.arange(-max_shift, max_shift + 1)), kind="stable")
        i = order[np.argmax(s[order])]
        sims[label] = float(s[i])
        best_lags[label] = int(i - max_shift)
        peaks[label] = float((correlate(g, xz, mode="full") / n).max())
    winner = max(DIFFERENCING_LABELS, key=lambda lb: sims[lb])
    if sims[winner] < min_similarity:
        return BehaviorEvidence(
            BehaviorLabel.NO_DOMINANT_CHANGE, sims, peaks, best_lag=None,
            notes=(f"best similarity {sims[winner]:.3f} < {min_similarity}", NO_CHANGE_NOTE),
        )
    return BehaviorEvidence(winner, sims, peaks, best_lag=best_lags[winner])


def classify_stationary(raw_channel, stats: ChannelStats | None, z_threshold: float = 2.0) -> BehaviorEvidence:
    if stats is None:
        raise KeyError("missing training statistics for channel")
    if stats.std_dev <= 0:
        return BehaviorEvidence(
            BehaviorLabel.NOMINAL_LEVEL, notes=(f"degenerate training statistics for {stats.channel_name!r}",)
        )
    z = (float(np.mean(_values(raw_channel))) - stats.mean) / stats.std_dev
    if z >= z_threshold:
        label = BehaviorLabel.ABNORMALLY_HIGH
    elif z <= -z_threshold:
        label = BehaviorLabel.ABNORMALLY_LOW
    else:
        label = BehaviorLabel.NOMINAL_LEVEL
    return BehaviorEvidence(label, z_score=z)


TIME_DRIVEN_NOTE = "time-driven prediction: time of day is the top predictor"


def extract_actionable_item(
    obs,
    ranking,
    stats: Mapping[str, ChannelStats] | list[ChannelStats],
    bank: FilterBank | None = None,
    z_threshold: float = 2.0,
    min_similarity: float = 0.35,
):
    """Route the top predictor to the stationary or differencing classifier."""
    from .ranking import top_predictor

    if not isinstance(stats, Mapping):
        stats = {s.channel_name: s for s in stats}
    p = top_predictor(ranking)
    if p.kind == "time_of_day":
        return p, BehaviorEvidence(BehaviorLabel.NOMINAL_LEVEL, notes=(TIME_DRIVEN_NOTE,))
    raw = obs.channels[p.channel]
    if p.kind == "raw":
        if p.channel not in stats:
            raise KeyError(f"missing training statistics for channel {p.channel!r}")
        return p, classify_stationary(raw, stats[p.channel], z_threshold)
    bank = bank if bank is not None and bank.length == len(raw) else make_filter_bank(len(raw))
    return p, classify_differencing(raw, bank, min_similarity)
