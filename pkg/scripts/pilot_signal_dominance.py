"""Pilot for the signal-dominance criterion.

Five-channel synthetic deployments where positives differ from negatives
only by a step in light (so only light's ROC peak carries the label). For
each seed the baseline is trained on the train split and every true
positive of the test split is ranked. The per-seed share of Roc(light) top
predictors is written to results/signal_dominance_pilot.json; the
acceptance threshold (90%) was fixed after this run.
"""

import argparse
import json
from pathlib import Path

from actint.experiments import signal_dominance_trial

ap = argparse.ArgumentParser()
ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
ap.add_argument("--window", type=int, default=3600)
ap.add_argument("--out", default=str(Path(__file__).parent / "results" / "signal_dominance_pilot.json"))
args = ap.parse_args()

trials = []
for s in args.seeds:
    t = signal_dominance_trial(s, args.window)
    print(f"seed {s}: Roc(light) top in {t.roc_signal_top}/{t.true_positives}  {t.top_counts}")
    trials.append({"seed": s, "true_positives": t.true_positives, "roc_light_top": t.roc_signal_top,
                   "top_counts": t.top_counts})

tp = sum(t["true_positives"] for t in trials)
hits = sum(t["roc_light_top"] for t in trials)
print(f"overall {hits}/{tp} = {hits / tp:.3f}")
Path(args.out).parent.mkdir(parents=True, exist_ok=True)
Path(args.out).write_text(json.dumps({"window": args.window, "trials": trials, "overall": hits / tp}, indent=1) + "\n")
