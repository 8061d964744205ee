"""Command-line entry point: ingest, train, interpret, evaluate, simulate.

Exit codes: 0 success, 1 some items failed, 2 bad configuration or input.
The ``AI_LOG`` environment variable sets the log level (default WARNING).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import shlex
import sys
from pathlib import Path

from . import __version__
from .actions import RuleError, load_rules
from .config import ConfigError, ExternalModelConfig, RunConfig
from .dataset import Dataset, DatasetError, from_pairs
from .evaluate import FoldError, accuracy, cross_validate, format_pm, weighted_f1
from .external import ExternalModelSession, ProtocolError, TransportError
from .ingest import IngestError, WindowSpec, ingest_csv_dir, write_stream_csv
from .model import BaselineModel, Label, ModelError, Observation, TrainConfig, predict_proba, train_baseline
from .synth import GroundTruth, ScenarioError, ScenarioSpec, default_scenario, format_recovery, generate_dataset, score_recovery
from .tscore import compute_channel_stats

log = logging.getLogger("actint")

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _setup_logging():
    level = os.environ.get("AI_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def _run_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    over = {}
    for key in ("seed", "repeats"):
        if getattr(args, key, None) is not None:
            over[key] = getattr(args, key)
    if getattr(args, "rules", None):
        over["rules_path"] = args.rules
    if getattr(args, "positives_only", None) is not None:
        over["positives_only"] = args.positives_only
    if getattr(args, "model", None):
        over["baseline_path"] = args.model
        over["external"] = None
    if getattr(args, "external_cmd", None):
        parts = shlex.split(args.external_cmd)
        if not parts:
            raise ConfigError("--external-cmd is empty")
        over["external"] = ExternalModelConfig(parts[0], tuple(parts[1:]))
        if not getattr(args, "model", None):
            over["baseline_path"] = None
    if getattr(args, "model", None) and getattr(args, "external_cmd", None):
        raise ConfigError("--model and --external-cmd are mutually exclusive")
    return dataclasses.replace(cfg, **over) if over else cfg


def _load_dataset(path) -> Dataset:
    try:
        return Dataset.load(path)
    except DatasetError as exc:
        raise UsageError(str(exc)) from exc


def _out(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# --------------------------------------------------------------------------- commands


def cmd_ingest(args) -> int:
    cfg = _run_config(args)
    spec = WindowSpec(
        negative_ratio=args.negative_ratio,
        train_fraction=args.train_fraction,
        target_rate_hz=args.rate,
    )
    try:
        res = ingest_csv_dir(args.csv_dir, args.labels, spec, cfg.smoothing, cfg.seed)
    except IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for d in exc.diagnostics:
            print(f"  {d}", file=sys.stderr)
        return EXIT_USAGE
    ds = res.dataset
    if not any(e.label == 1 for e in ds):
        print("error: no usable labeled events", file=sys.stderr)
        return EXIT_USAGE
    ds.save(args.out)
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    npos = sum(e.label for e in ds)
    print(f"wrote {args.out}: {npos} positives, {len(ds) - npos} negatives, {len(res.skipped_events)} events skipped")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _run_config(args)
    ds = _load_dataset(args.dataset)
    train = ds.pairs("train")
    val = ds.pairs("test")
    tcfg = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        decision_threshold=cfg.decision_threshold,
        seed=cfg.seed,
    )
    try:
        model = train_baseline(train, tcfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    model.save(args.out)
    for name, part in (("train", train), ("validation", val)):
        if not part:
            continue
        y = [lbl for _, lbl in part]
        yp = [int(predict_proba(model, o).label == Label.POSITIVE) for o, _ in part]
        print(f"{name}: accuracy {100 * accuracy(y, yp):.1f}%  weighted F1 {100 * weighted_f1(y, yp):.1f}%  (n={len(part)})")
    print(f"wrote {args.out}")
    return EXIT_OK


def _open_model(cfg: RunConfig):
    cfg.check_model_source()
    if cfg.baseline_path is not None:
        try:
            model = BaselineModel.load(cfg.baseline_path)
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot load model {cfg.baseline_path}: {exc}") from exc
        return dataclasses.replace(model, decision_threshold=cfg.decision_threshold)
    ext = cfg.external
    try:
        return ExternalModelSession(
            [ext.executable, *ext.args],
            handshake_timeout=ext.handshake_timeout,
            decision_threshold=cfg.decision_threshold,
        )
    except (TransportError, ProtocolError) as exc:
        raise UsageError(f"external model failed to start: {exc}") from exc


def cmd_interpret(args) -> int:
    from .interpret import interpret_observation

    cfg = _run_config(args)
    try:
        rules = load_rules(cfg.rules_path)
    except (OSError, RuleError) as exc:
        raise UsageError(f"rules: {exc}") from exc

    ds = None
    if args.observation:
        try:
            d = json.loads(Path(args.observation).read_text())
            observations = [Observation.from_wire(d, d.get("id", Path(args.observation).stem), cfg.smoothing)]
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot read observation {args.observation}: {exc}") from exc
    elif args.dataset:
        ds = _load_dataset(args.dataset)
        observations = [e.observation for e in ds.subset(args.split)]
    else:
        raise UsageError("give a dataset or --observation")

    model = _open_model(cfg)
    try:
        if isinstance(model, BaselineModel):
            stats = list(model.training_stats)
        else:
            src = _load_dataset(args.stats_from) if args.stats_from else ds
            if src is None:
                raise UsageError("external models need --stats-from DATASET for training statistics")
            stats = compute_channel_stats(e.observation for e in src.subset("train"))
        fingerprint = cfg.fingerprint()
        lines, failures = [], []
        for obs in sorted(observations, key=lambda o: o.id):
            try:
                if cfg.positives_only and predict_proba(model, obs).label != Label.POSITIVE:
                    continue
                report = interpret_observation(model, obs, stats, rules, cfg, fingerprint)
            except (TransportError, ProtocolError, ModelError) as exc:
                log.error("observation %s failed: %s", obs.id, exc)
                failures.append((obs.id, str(exc)))
                continue
            lines.append(report.to_json() + "\n")
            if args.plots:
                from .plots import plot_report

                plot_report(obs, report, args.plots)
    finally:
        if hasattr(model, "close"):
            model.close()
    _out(args.out, "".join(lines))
    print(f"{len(lines)} report(s), {len(failures)} failure(s)", file=sys.stderr)
    for oid, msg in failures:
        print(f"  failed {oid}: {msg}", file=sys.stderr)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_evaluate(args) -> int:
    from .interpret import interpret_observation

    cfg = _run_config(args)
    ds = _load_dataset(args.dataset)
    pairs = ds.pairs("all")
    try:
        truth = GroundTruth.load(args.truth) if args.truth else None
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read ground truth {args.truth}: {exc}") from exc
    rules = load_rules(cfg.rules_path) if truth is not None else ()
    reports = []

    def on_fold(f, model, test):
        if truth is None:
            return
        for obs, _ in test:
            if predict_proba(model, obs).label == Label.POSITIVE:
                reports.append(interpret_observation(model, obs, model.training_stats, rules, cfg))

    tcfg = TrainConfig(epochs=args.epochs, decision_threshold=cfg.decision_threshold, seed=cfg.seed)
    try:
        summary = cross_validate(pairs, args.folds, cfg.seed, lambda data: train_baseline(data, tcfg), on_fold)
    except FoldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    doc = {"fold_count": args.folds, "seed": cfg.seed, **summary.to_dict()}
    print(f"Accuracy: {format_pm(summary.accuracy_mean, summary.accuracy_sd)}")
    print(f"Weighted F1: {format_pm(summary.weighted_f1_mean, summary.weighted_f1_sd)}")
    if truth is not None:
        rec = score_recovery(reports, truth)
        doc["recovery"] = rec.to_dict()
        print(format_recovery(rec))
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def _truth_path(out) -> str:
    """``d.json.gz`` and ``d.json`` both map to ``d.truth.json``."""
    name = str(out)
    for suffix in (".gz", ".json"):
        name = name.removesuffix(suffix)
    return name + ".truth.json"


def cmd_simulate(args) -> int:
    try:
        spec = ScenarioSpec.load(args.scenario) if args.scenario else default_scenario()
        over = {}
        if args.seed is not None:
            over["seed"] = args.seed
        if args.positives is not None:
            over["positive_count"] = args.positives
        if args.negatives is not None:
            over["negative_count"] = args.negatives
        if args.window is not None:
            over["window_length_samples"] = args.window
        spec = dataclasses.replace(spec, **over) if over else spec
        pairs, truth = generate_dataset(spec)
    except (ScenarioError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    ds = from_pairs(pairs, spec.smoothing, seed=spec.seed, meta={"source": "simulate", "scenario": spec.to_dict()})
    ds.save(args.out)
    truth_path = args.truth or _truth_path(args.out)
    truth.save(truth_path)
    if args.csv:
        write_stream_csv(ds, args.csv)
    print(f"wrote {args.out} ({len(ds)} observations) and {truth_path}")
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="actint", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"actint {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", help="RunConfig JSON file")
        if seed:
            sp.add_argument("--seed", type=int)

    sp = sub.add_parser("ingest", help="window CSV sensor streams around labeled events")
    sp.add_argument("csv_dir")
    sp.add_argument("-o", "--out", required=True)
    sp.add_argument("--labels", help="label file (default: CSV_DIR/labels.csv)")
    sp.add_argument("--negative-ratio", type=int, default=4)
    sp.add_argument("--train-fraction", type=float, default=0.7)
    sp.add_argument("--rate", type=float, default=1.0, help="common sample rate in Hz")
    common(sp)
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("train", help="train the baseline classifier on the train split")
    sp.add_argument("dataset")
    sp.add_argument("-o", "--out", required=True)
    sp.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    sp.add_argument("--learning-rate", type=float, default=TrainConfig.learning_rate)
    common(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("interpret", help="emit interpretation reports as ndjson")
    sp.add_argument("dataset", nargs="?")
    sp.add_argument("--observation", help="single observation JSON (protocol wire format)")
    sp.add_argument("--model", help="baseline model file")
    sp.add_argument("--external-cmd", help="command line of an external model process")
    sp.add_argument("--stats-from", help="dataset whose train split supplies channel statistics")
    sp.add_argument("--split", choices=("train", "test", "all"), default="test")
    sp.add_argument("--repeats", type=int)
    sp.add_argument("--rules", help="rule file (default: bundled table)")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--positives-only", dest="positives_only", action="store_true", default=None)
    g.add_argument("--all", dest="positives_only", action="store_false")
    sp.add_argument("--plots", metavar="DIR", help="write one figure per report into DIR")
    sp.add_argument("-o", "--out", default="-")
    common(sp)
    sp.set_defaults(func=cmd_interpret)

    sp = sub.add_parser("evaluate", help="stratified k-fold accuracy and weighted F1")
    sp.add_argument("dataset")
    sp.add_argument("--folds", type=int, default=5)
    sp.add_argument("--truth", help="ground truth JSON from simulate")
    sp.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    sp.add_argument("--rules")
    sp.add_argument("-o", "--out")
    common(sp)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("simulate", help="generate a synthetic deployment")
    sp.add_argument("--scenario", help="ScenarioSpec JSON (default: built-in five-channel scenario)")
    sp.add_argument("-o", "--out", required=True)
    sp.add_argument("--truth", help="ground truth output (default: <out>.truth.json)")
    sp.add_argument("--csv", metavar="DIR", help="also write the CSV stream layout")
    sp.add_argument("--positives", type=int)
    sp.add_argument("--negatives", type=int)
    sp.add_argument("--window", type=int, help="window length in samples")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, RuleError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
