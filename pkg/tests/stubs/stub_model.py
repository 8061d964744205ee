"""Scripted external model for protocol tests. Usage: stub_model.py MODE [VALUE]."""

import json
import sys
import time

mode = sys.argv[1]
value = float(sys.argv[2]) if len(sys.argv) > 2 else 0.5


def send(msg):
    sys.stdout.write(json.dumps(msg) + "\n")
    sys.stdout.flush()


if mode == "silent":
    time.sleep(30)
    sys.exit(0)

for n, line in enumerate(sys.stdin):
    msg = json.loads(line)
    if msg["type"] == "hello":
        send({"type": "ready", "name": f"stub-{mode}"})
    elif msg["type"] == "close":
        break
    elif mode == "const":
        send({"type": "prediction", "id": msg["id"], "probability": value})
    elif mode == "echo_tod":
        send({"type": "prediction", "id": msg["id"], "probability": msg["observation"]["time_of_day"] / 24})
    elif mode == "exit_after":
        if n > value:
            sys.exit(3)
        send({"type": "prediction", "id": msg["id"], "probability": 0.5})
    elif mode == "garbage":
        sys.stdout.write("not json\n")
        sys.stdout.flush()
    elif mode == "wrong_id":
        send({"type": "prediction", "id": "nope", "probability": 0.5})
    elif mode == "unknown_type":
        send({"type": "banana", "id": msg["id"]})
    elif mode == "slow":
        time.sleep(value)
        send({"type": "prediction", "id": msg["id"], "probability": 0.5})
