"""Per-observation figure: window traces, predictor importance, behavior evidence."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .actions import InterpretationReport  # noqa: E402
from .model import Observation  # noqa: E402


def plot_report(obs: Observation, report: InterpretationReport, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, axes = plt.subplots(1, 3, figsize=(15, 4.2))

    ax = axes[0]
    minutes = np.arange(obs.length) / obs.sample_rate_hz / 60.0
    for i, name in enumerate(obs.channel_names):
        v = obs.channels[name].values
        span = v.max() - v.min()
        scaled = (v - v.min()) / span if span > 0 else np.zeros_like(v)
        ax.plot(minutes, scaled + 1.2 * i, lw=0.8, label=name)
    ax.set_yticks([1.2 * i + 0.5 for i in range(len(obs.channel_names))], obs.channel_names)
    ax.set_xlabel("minutes into window")
    ax.set_title(f"(a) {obs.id}  p={report.prediction.probability:.3f}")

    ax = axes[1]
    if report.ranking is not None:
        items = [(p, report.ranking.scores[p]) for p in report.ranking.top]
        names = [str(p) for p, _ in items]
        vals = [s for _, s in items]
        colors = ["tab:red" if p == report.top_predictor else "tab:gray" for p, _ in items]
        ax.barh(names, vals, color=colors)
        ax.invert_yaxis()
    ax.axvline(0.0, color="k", lw=0.5)
    ax.set_xlabel("importance (probability drop)")
    ax.set_title("(b) predictor ranking")

    ax = axes[2]
    ev = report.evidence
    if ev is not None and ev.similarity_scores:
        labels = [k.value for k in ev.similarity_scores]
        vals = list(ev.similarity_scores.values())
        colors = ["tab:red" if k == ev.label else "tab:gray" for k in ev.similarity_scores]
        ax.bar(labels, vals, color=colors)
        ax.tick_params(axis="x", rotation=20)
        ax.set_ylabel("similarity")
    elif ev is not None and ev.z_score is not None:
        ax.bar(["z-score"], [ev.z_score], color="tab:red")
        ax.axhline(0.0, color="k", lw=0.5)
    ax.set_title(f"(c) behavior: {ev.label.value if ev else 'n/a'}")

    fig.tight_layout()
    path = out_dir / f"{obs.id}.png"
    fig.savefig(path, dpi=80, metadata={"Software": None})
    plt.close(fig)
    return path
