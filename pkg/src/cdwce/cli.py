"""Command line entry point: ``cdwce {bench,sweep-alpha,sweep-margin,gen-data,report}``.

Exit codes: 0 success, 1 configuration error, 2 runtime or divergence error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import data, experiments
from .losses import ConfigurationError, HyperparameterError
from .model import ModelConfigError

log = logging.getLogger("cdwce")

CONFIG_ERRORS = (ConfigurationError, HyperparameterError, ModelConfigError, data.DatasetError, json.JSONDecodeError)


def parse_loss(text):
    """``KIND`` or ``KIND:key=value,key=value``, e.g. ``CDW-CE:alpha=5``."""
    kind, _, rest = text.partition(":")
    d = {"kind": kind}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigurationError(f"bad loss parameter {item!r} in {text!r}")
        d[key.strip()] = float(value)
    return d


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser():
    p = argparse.ArgumentParser(prog="cdwce", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--jobs", type=int, default=1, help="parallel trial workers")
        sp.add_argument("--trials", type=int, help="number of trials")
        sp.add_argument("--epochs", type=int)
        sp.add_argument("--lr", type=float, help="learning rate")
        sp.add_argument("--batch-size", type=int)
        sp.add_argument("--n-samples", type=int, help="synthetic dataset size")
        sp.add_argument("--csv", help="use a CSV dataset instead of synthetic data")
        sp.add_argument("--label-column", default=None)

    b = sub.add_parser("bench", help="benchmark a grid of losses")
    common(b)
    b.add_argument("--loss", action="append", type=parse_loss, help="loss spec, repeatable (e.g. CDW-CE:alpha=5)")

    a = sub.add_parser("sweep-alpha", help="CDW-CE over a list of alpha values")
    common(a)
    a.add_argument("--alphas", type=_floats, default=[float(i) for i in range(1, 11)], help="comma list, default 1..10")

    m = sub.add_parser("sweep-margin", help="CDW-CE with margin over (alpha, margin) pairs")
    common(m)
    m.add_argument("--alpha", type=_floats, default=[5.0], help="comma list of alphas")
    m.add_argument("--margins", type=_floats, default=[0.0, 0.0025, 0.025, 0.05])

    g = sub.add_parser("gen-data", help="write a synthetic dataset to CSV")
    g.add_argument("--config", help="JSON file with SyntheticParams fields")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="CSV path")
    g.add_argument("--n-samples", type=int)
    g.add_argument("--input-dim", type=int)

    r = sub.add_parser("report", help="re-emit reports from an aggregate.json")
    r.add_argument("--config", dest="aggregate", required=True, help="aggregate.json produced by a run")
    r.add_argument("--out", help="output directory (default: next to the input)")
    r.add_argument("--format", choices=["json", "csv", "markdown"], action="append")
    return p


def _load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def config_from_args(args):
    raw = _load_json(args.config) if args.config else {}
    if args.seed is not None:
        raw["master_seed"] = args.seed
    if args.out is not None:
        raw["output_dir"] = args.out
    if args.trials is not None:
        raw["n_trials"] = args.trials
    train = raw.setdefault("train", {})
    for key, value in (("epochs", args.epochs), ("learning_rate", args.lr), ("batch_size", args.batch_size)):
        if value is not None:
            train[key] = value
    if args.csv:
        raw["dataset"] = {"csv": args.csv, "label_column": args.label_column or "label"}
    elif args.n_samples is not None:
        ds = raw.setdefault("dataset", {})
        ds.setdefault("synthetic", {})["n_samples"] = args.n_samples
    if getattr(args, "loss", None):
        raw["losses"] = args.loss
    return experiments.ExperimentConfig(raw)


def _finish(report):
    failed = {l: e["failed"] for l, e in report["losses"].items() if e["failed"]}
    if failed:
        log.error("diverged trials: %s", failed)
        return 2
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")
    try:
        if args.command == "gen-data":
            params = _load_json(args.config) if args.config else {}
            if args.n_samples is not None:
                params["n_samples"] = args.n_samples
            if args.input_dim is not None:
                params["input_dim"] = args.input_dim
            ds = data.generate_synthetic(data.SyntheticParams(**params), seed=args.seed)
            data.export_csv(ds, args.out)
            log.info("wrote %d samples to %s", len(ds), args.out)
            return 0
        if args.command == "report":
            report = experiments.load_report(args.aggregate)
            out = args.out or os.path.dirname(os.path.abspath(args.aggregate))
            for fmt in args.format or ["markdown"]:
                log.info("wrote %s", experiments.emit_report(report, fmt, out))
            return 0
        cfg = config_from_args(args)
        if args.command == "bench":
            report, _ = experiments.run_benchmark(cfg, jobs=args.jobs)
        elif args.command == "sweep-alpha":
            report, _ = experiments.run_alpha_sweep(cfg, args.alphas, jobs=args.jobs)
        else:
            report, _ = experiments.run_margin_sweep(cfg, args.alpha, args.margins, jobs=args.jobs)
        log.info("results in %s", cfg.output_dir)
        return _finish(report)
    except CONFIG_ERRORS as e:
        log.error("configuration error: %s", e)
        return 1
    except (TypeError, KeyError) as e:
        log.error("configuration error: %s", e)
        return 1
    except FileNotFoundError as e:
        log.error("configuration error: %s", e)
        return 1
    except (OSError, RuntimeError, ValueError) as e:
        log.error("runtime error: %s", e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
