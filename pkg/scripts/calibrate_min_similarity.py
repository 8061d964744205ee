"""Monte-Carlo check of the NoDominantChange gate.

Sweeps candidate min_similarity values and reports, for each, the planted
behavior recovery at several magnitude-to-noise ratios and the rejection
rate on pure white noise. Writes a JSON summary next to this script.
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

from actint.experiments import noise_rejection_rate, template_monte_carlo


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=3600, help="window length in samples")
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--thresholds", type=float, nargs="+", default=[0.2, 0.25, 0.3, 0.35, 0.4, 0.5, 0.6])
    ap.add_argument("--ratios", type=float, nargs="+", default=[1.0, 2.0, 5.0])
    ap.add_argument("--out", default=str(Path(__file__).parent / "results" / "min_similarity_calibration.json"))
    args = ap.parse_args()

    t0 = time.perf_counter()
    rows = []
    for thr in args.thresholds:
        row = {"min_similarity": thr, "noise_rejection": noise_rejection_rate(args.n, args.seeds, thr)}
        for r in [None, *args.ratios]:
            trials = template_monte_carlo(args.n, args.seeds, r, thr)
            key = "noise_free" if r is None else f"snr_{r:g}"
            row[key] = sum(t.correct for t in trials) / sum(t.cases for t in trials)
        rows.append(row)
        cols = " ".join(f"{k}={v:.3f}" for k, v in row.items() if k != "min_similarity")
        print(f"min_similarity={thr:.2f}  {cols}")
    doc = {"n": args.n, "seeds_per_behavior": args.seeds, "rows": rows, "seconds": round(time.perf_counter() - t0, 1)}
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
