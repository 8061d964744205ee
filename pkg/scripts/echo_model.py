#!/usr/bin/env python3
"""Minimal external model for the line-delimited JSON protocol.

Scores a window by the largest one-minute mean of light's ROC. Use it as a
template for wrapping a real classifier:

    actint interpret data.json --external-cmd "python3 scripts/echo_model.py" --stats-from data.json
"""

import json
import math
import sys


def score(obs):
    roc = obs["roc"].get("light", {}).get("values", [])
    if len(roc) < 60:
        return 0.5
    run = sum(roc[:60])
    best = run
    for i in range(60, len(roc)):
        run += roc[i] - roc[i - 60]
        best = max(best, run)
    return 1.0 / (1.0 + math.exp(-(best / 60.0 - 2.0) * 3.0))


for line in sys.stdin:
    msg = json.loads(line)
    if msg["type"] == "hello":
        reply = {"type": "ready", "name": "light-roc-peak"}
    elif msg["type"] == "predict":
        reply = {"type": "prediction", "id": msg["id"], "probability": score(msg["observation"])}
    else:
        break
    sys.stdout.write(json.dumps(reply) + "\n")
    sys.stdout.flush()
