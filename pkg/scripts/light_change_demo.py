"""End-to-end demo on a planted sudden-change-in-light deployment.

simulate -> train -> interpret --plots, all through the CLI, then prints the
report of the most confident positive. Figures land in OUT/plots.
"""

import argparse
import json
import sys
from pathlib import Path

from actint.cli import main as actint
from actint.experiments import light_change_scenario

ap = argparse.ArgumentParser()
ap.add_argument("--out", default="light_change_out")
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

out = Path(args.out)
out.mkdir(parents=True, exist_ok=True)
(out / "scenario.json").write_text(json.dumps(light_change_scenario(args.seed).to_dict(), indent=1))

steps = [
    ["simulate", "--scenario", str(out / "scenario.json"), "-o", str(out / "deployment.json.gz")],
    ["train", str(out / "deployment.json.gz"), "-o", str(out / "model.json")],
    ["interpret", str(out / "deployment.json.gz"), "--model", str(out / "model.json"),
     "--plots", str(out / "plots"), "-o", str(out / "reports.ndjson")],
]
for argv in steps:
    print("$ actint", " ".join(argv))
    code = actint(argv)
    if code:
        sys.exit(code)

reports = [json.loads(line) for line in (out / "reports.ndjson").read_text().splitlines()]
if not reports:
    sys.exit("no positive predictions")
best = max(reports, key=lambda r: r["prediction"]["probability"])
print(f"\n{best['observation_id']}: p={best['prediction']['probability']:.3f}")
scores = best["ranking"]["scores"]
for p in best["ranking"]["top"][:4]:
    print(f"  {p:<18} {scores[p]:+.4f}")
print(f"behavior: {best['evidence']['label']}")
for s in best["suggestions"]:
    print(f"suggestion: {s}")
print(f"figure: {out / 'plots' / (best['observation_id'] + '.png')}")
