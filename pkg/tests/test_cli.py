import hashlib
import json
import sys
from pathlib import Path

import pytest

from actint.cli import main

STUB = str(Path(__file__).parent / "stubs" / "stub_model.py")


def sha(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    ds = d / "sim.json"
    assert main(["simulate", "-o", str(ds), "--positives", "10", "--negatives", "40", "--window", "600", "--seed", "1"]) == 0
    model = d / "model.json"
    assert main(["train", str(ds), "-o", str(model), "--epochs", "300"]) == 0
    return d, ds, model


def test_simulate_writes_truth(small):
    d, ds, _ = small
    truth = json.loads((d / "sim.truth.json").read_text())
    assert len(truth["records"]) == 10 and len(truth["observation_ids"]) == 50


def test_simulate_default_size(tmp_path):
    out = tmp_path / "d.json.gz"
    assert main(["simulate", "-o", str(out), "--window", "60"]) == 0
    from actint.dataset import Dataset

    assert len(Dataset.load(out)) == 240


def test_simulate_invalid_spec(tmp_path, capsys):
    bad = tmp_path / "s.json"
    bad.write_text(json.dumps({"channels": [], "trigger_mix": []}))
    assert main(["simulate", "--scenario", str(bad), "-o", str(tmp_path / "x.json")]) == 2
    assert "error" in capsys.readouterr().err


def test_train_deterministic(small, tmp_path):
    _, ds, model = small
    again = tmp_path / "m.json"
    assert main(["train", str(ds), "-o", str(again), "--epochs", "300"]) == 0
    assert sha(again) == sha(model)


def test_train_missing_dataset(tmp_path, capsys):
    assert main(["train", str(tmp_path / "nope.json"), "-o", str(tmp_path / "m.json")]) == 2
    assert "not found" in capsys.readouterr().err


def test_interpret_deterministic(small, tmp_path):
    _, ds, model = small
    a, b = tmp_path / "a.ndjson", tmp_path / "b.ndjson"
    for out in (a, b):
        assert main(["interpret", str(ds), "--model", str(model), "--all", "--repeats", "2", "-o", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    ids = [json.loads(l)["observation_id"] for l in lines]
    assert ids == sorted(ids) and len(ids) == 15
    assert all(len(json.loads(l)["config_fingerprint"]) == 16 for l in lines)


def test_interpret_positives_only(small, tmp_path):
    _, ds, model = small
    out = tmp_path / "p.ndjson"
    assert main(["interpret", str(ds), "--model", str(model), "--repeats", "2", "-o", str(out)]) == 0
    for line in out.read_text().splitlines():
        assert json.loads(line)["prediction"]["label"] == "Positive"


def test_interpret_all_negative(tmp_path, small):
    _, _, model = small
    from actint.dataset import Dataset

    d, _, _ = small
    ds = Dataset.load(d / "sim.json")
    ds.examples = [e for e in ds.examples if e.label == 0 and e.split == "test"][:3]
    m = json.loads(Path(model).read_text())
    m["bias"] = -50.0
    (tmp_path / "neg.json").write_text(json.dumps(m))
    ds.save(tmp_path / "negs.json")
    out = tmp_path / "r.ndjson"
    assert main(["interpret", str(tmp_path / "negs.json"), "--model", str(tmp_path / "neg.json"), "-o", str(out)]) == 0
    assert out.read_text() == ""


def test_interpret_needs_model(small):
    _, ds, _ = small
    assert main(["interpret", str(ds)]) == 2


def test_interpret_external_partial_failure(small, tmp_path, capsys):
    _, ds, _ = small
    cmd = f"{sys.executable} {STUB} const 1.2"
    out = tmp_path / "x.ndjson"
    code = main(["interpret", str(ds), "--external-cmd", cmd, "--all", "--repeats", "1", "-o", str(out)])
    assert code == 1
    assert "out of range" in capsys.readouterr().err


def test_interpret_external_ok(small, tmp_path):
    _, ds, _ = small
    cmd = f"{sys.executable} {STUB} echo_tod"
    out = tmp_path / "x.ndjson"
    assert main(["interpret", str(ds), "--external-cmd", cmd, "--all", "--repeats", "1", "-o", str(out)]) == 0
    reports = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(reports) == 15
    # the echo model only reads time of day
    assert all(r["ranking"]["scores"]["raw:light"] == 0.0 for r in reports)


def test_interpret_single_observation(small, tmp_path):
    _, ds, model = small
    from actint.dataset import Dataset

    obs = Dataset.load(ds).examples[0].observation
    wire = obs.to_wire()
    wire["id"] = obs.id
    (tmp_path / "o.json").write_text(json.dumps(wire))
    out = tmp_path / "o.ndjson"
    assert main(["interpret", "--observation", str(tmp_path / "o.json"), "--model", str(model), "--all", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["observation_id"] == obs.id


def test_interpret_bad_rules(small, tmp_path):
    _, ds, model = small
    (tmp_path / "r.json").write_text('[{"channel": "a"}]')
    assert main(["interpret", str(ds), "--model", str(model), "--rules", str(tmp_path / "r.json")]) == 2


def test_evaluate(small, tmp_path, capsys):
    d, ds, _ = small
    out = tmp_path / "e.json"
    code = main(["evaluate", str(ds), "--folds", "5", "--epochs", "200", "--truth", str(d / "sim.truth.json"), "-o", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "Accuracy: " in text and " ± " in text and "channel recovery" in text
    doc = json.loads(out.read_text())
    assert doc["fold_count"] == 5 and len(doc["folds"]) == 5
    assert "recovery" in doc


def test_evaluate_infeasible_folds(small, capsys):
    _, ds, _ = small
    assert main(["evaluate", str(ds), "--folds", "20", "--epochs", "5"]) == 2
    assert "class counts" in capsys.readouterr().err


def test_evaluate_missing_truth(small, tmp_path):
    _, ds, _ = small
    assert main(["evaluate", str(ds), "--truth", str(tmp_path / "none.json"), "--epochs", "5"]) == 2


def test_ingest_cli(tmp_path, capsys):
    from test_ingest import make_dir

    (tmp_path / "csv").mkdir()
    csv = make_dir(tmp_path / "csv")
    out = tmp_path / "ing.json"
    assert main(["ingest", str(csv), "-o", str(out)]) == 0
    assert "2 positives, 8 negatives" in capsys.readouterr().out


def test_ingest_event_at_start(tmp_path, capsys):
    from test_ingest import make_dir

    (tmp_path / "csv").mkdir()
    csv = make_dir(tmp_path / "csv", events=(0.5, 8.0))
    assert main(["ingest", str(csv), "-o", str(tmp_path / "i.json")]) == 0
    captured = capsys.readouterr()
    assert "1 events skipped" in captured.out and "warning" in captured.err


def test_ingest_malformed(tmp_path, capsys):
    from test_ingest import make_dir

    (tmp_path / "csv").mkdir()
    csv = make_dir(tmp_path / "csv", hours=4, events=(3.0,))
    with open(csv / "noise.csv", "a") as fh:
        fh.write("garbage\n")
    assert main(["ingest", str(csv), "-o", str(tmp_path / "i.json")]) == 2
    assert "noise.csv" in capsys.readouterr().err


def test_bad_config(tmp_path, small):
    _, ds, model = small
    (tmp_path / "c.json").write_text('{"repeats": 0}')
    assert main(["interpret", str(ds), "--model", str(model), "--config", str(tmp_path / "c.json")]) == 2


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2


@pytest.mark.parametrize("out, truth", [("d.json.gz", "d.truth.json"), ("d.json", "d.truth.json"), ("d", "d.truth.json")])
def test_truth_path(out, truth):
    from actint.cli import _truth_path

    assert _truth_path(out) == truth
