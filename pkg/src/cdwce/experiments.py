"""Seeded multi-trial benchmarks over a grid of losses, plus alpha/margin sweeps.

Every trial of every loss sees the same split and the same hidden-layer
initialization (both derived from ``(master_seed, trial)``), so losses
differ only in the objective they train.
"""

from __future__ import annotations

import copy
import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import data, metrics, model, trainer
from .losses import ConfigurationError, LossSpec
from .numerics import SeededRng

DEFAULT_CONFIG = {
    "dataset": {"synthetic": {}, "seed": None},
    "split": {"fractions": [0.8, 0.1, 0.1], "stratified": True},
    "model": {"hidden_dims": [32, 16], "activation": "relu"},
    "train": {},
    "losses": [
        {"kind": "CE"},
        {"kind": "MSE"},
        {"kind": "CORN"},
        {"kind": "CO2"},
        {"kind": "HO2"},
        {"kind": "CDW-CE", "alpha": 5},
    ],
    "n_trials": 10,
    "master_seed": 0,
    "output_dir": "runs/bench",
}

# (key in aggregate, title used in markdown tables)
TABLE_MES = [("qwk", "QWK"), ("macro_f1", "F1"), ("accuracy", "Accuracy"), ("mae", "MAE")]
TABLE_REMISSION = [("remission_kappa", "Kappa"), ("remission_f1", "F1"), ("remission_accuracy", "Accuracy")]
TABLE_EXTRA = [("far_error_share", "Far-error share (distance >= 2)"), ("silhouette", "Silhouette")]


def _merge(base, override):
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "dataset":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


class ExperimentConfig:
    """Validated benchmark configuration (see ``DEFAULT_CONFIG`` for the JSON layout)."""

    def __init__(self, raw=None):
        raw = _merge(DEFAULT_CONFIG, raw or {})
        unknown = set(raw) - set(DEFAULT_CONFIG)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        self.raw = raw
        try:
            self.n_trials = int(raw["n_trials"])
            self.master_seed = int(raw["master_seed"])
        except (TypeError, ValueError) as e:
            raise ConfigurationError(str(e)) from None
        if self.n_trials < 1:
            raise ConfigurationError("n_trials must be >= 1")
        self.output_dir = raw["output_dir"]
        ds = raw["dataset"]
        if "csv" in ds:
            self.synthetic = None
            self.csv_path = ds["csv"]
            self.label_column = ds.get("label_column", "label")
            self.csv_classes = ds.get("n_classes")
        else:
            try:
                self.synthetic = data.SyntheticParams(**ds.get("synthetic", {}))
            except (TypeError, data.DatasetError) as e:
                raise ConfigurationError(f"dataset.synthetic: {e}") from None
            self.csv_path = None
        self.dataset_seed = self.master_seed if ds.get("seed") is None else int(ds["seed"])
        sp = raw["split"]
        try:
            data.SplitSpec(tuple(sp["fractions"]), bool(sp["stratified"]), 0)
            self.train_kwargs = dict(raw["train"])
            self.train_kwargs.pop("seed", None)
            trainer.TrainConfig(**self.train_kwargs)
        except (TypeError, data.DatasetError) as e:
            raise ConfigurationError(str(e)) from None
        if not raw["losses"]:
            raise ConfigurationError("loss grid is empty")
        K = self.n_classes_hint
        self.losses = [LossSpec.from_dict(d, num_classes=K) if K else d for d in raw["losses"]]
        labels = [s.label if isinstance(s, LossSpec) else json.dumps(s, sort_keys=True) for s in self.losses]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"duplicate losses in grid: {labels}")

    @property
    def n_classes_hint(self):
        if self.synthetic is not None:
            return self.synthetic.n_classes
        return self.csv_classes

    def with_losses(self, losses):
        raw = copy.deepcopy(self.raw)
        raw["losses"] = losses
        return ExperimentConfig(raw)

    def to_dict(self):
        return copy.deepcopy(self.raw)


def trial_seed(master_seed, trial):
    return int(SeededRng(master_seed, trial).take(1)[0] % (2**31 - 1))


def load_dataset(cfg):
    if cfg.synthetic is not None:
        return data.generate_synthetic(cfg.synthetic, seed=cfg.dataset_seed)
    return data.load_csv(cfg.csv_path, cfg.label_column, cfg.csv_classes)


def _resolve_losses(cfg, K):
    return [s if isinstance(s, LossSpec) else LossSpec.from_dict(s, num_classes=K) for s in cfg.losses]


def run_trial(dataset, cfg, spec, trial):
    """Train and evaluate one loss on one trial; never raises on divergence."""
    seed = trial_seed(cfg.master_seed, trial)
    sp = cfg.raw["split"]
    tr, va, te = data.split(dataset, data.SplitSpec(tuple(sp["fractions"]), bool(sp["stratified"]), seed))
    mcfg = model.MlpConfig(
        input_dim=dataset.input_dim,
        hidden_dims=tuple(cfg.raw["model"].get("hidden_dims", (32, 16))),
        head=spec.head,
        num_classes=dataset.n_classes,
        activation=cfg.raw["model"].get("activation", "relu"),
        init_seed=seed,
    )
    tcfg = trainer.TrainConfig(seed=seed, **cfg.train_kwargs)
    report = {"loss": spec.label, "loss_spec": spec.to_dict(), "trial": trial, "seed": seed}
    try:
        best, log = trainer.train(model.init(mcfg), spec, tr, va, tcfg)
    except trainer.DivergenceError as e:
        report.update(status="diverged", error=str(e))
        return report
    labels, scores = trainer.predict(best, te.X, spec)
    cls_scores = trainer.class_scores(spec, scores)
    feats = trainer.extract_features(best, te.X)
    bundle = metrics.evaluate(te.y, labels, dataset.n_classes, cls_scores, feats)
    report.update(
        status="ok",
        metrics=bundle.to_dict(),
        train_log={
            "selected_epoch": log.selected_epoch,
            "epochs_run": len(log.train_loss),
            "final_train_loss": log.train_loss[-1],
            "stopped_early": log.stopped_early,
        },
        confusion=metrics.confusion(te.y, labels, dataset.n_classes).tolist(),
        y_true=te.y.tolist(),
        y_pred=np.asarray(labels).tolist(),
        class_scores=None if cls_scores is None else np.asarray(cls_scores).tolist(),
    )
    return report


def _flatten(m):
    flat = {k: m[k] for k in ("qwk", "kappa", "accuracy", "macro_f1", "mae", "far_error_share", "silhouette")}
    rem = m.get("remission") or {}
    for k in ("kappa", "f1", "accuracy"):
        flat[f"remission_{k}"] = rem.get(k)
    for k, auc in enumerate(m.get("per_class_auc") or []):
        flat[f"auc_class{k}"] = auc
    return flat


def _summary(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return {"mean": None, "std": None, "n": 0}
    arr = np.asarray(vals, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return {"mean": float(arr.mean()), "std": std, "n": int(arr.size)}


def aggregate(cfg, specs, trials, K):
    """Per-loss mean/std of every metric plus the per-trial values they came from."""
    losses = {}
    for spec in specs:
        rows = [t for t in trials if t["loss"] == spec.label]
        ok = [t for t in rows if t["status"] == "ok"]
        per_trial = [_flatten(t["metrics"]) for t in ok]
        keys = sorted({k for row in per_trial for k in row})
        entry = {
            "loss_spec": spec.to_dict(),
            "completed": len(ok),
            "failed": [t["trial"] for t in rows if t["status"] != "ok"],
            "incomplete": len(ok) != len(rows),
            "trial_values": {k: [row.get(k) for row in per_trial] for k in keys},
            "summary": {k: _summary([row.get(k) for row in per_trial]) for k in keys},
        }
        if ok:
            entry["mean_confusion"] = np.mean([t["confusion"] for t in ok], axis=0).tolist()
        losses[spec.label] = entry
    # the output location does not influence any number, so reports from
    # different directories stay byte-identical
    recorded = cfg.to_dict()
    recorded.pop("output_dir", None)
    return {
        "config": recorded,
        "n_classes": K,
        "trial_seeds": [trial_seed(cfg.master_seed, i) for i in range(cfg.n_trials)],
        "loss_order": [s.label for s in specs],
        "losses": losses,
    }


def _run_task(args):
    cfg_raw, spec_dict, trial = args
    cfg = ExperimentConfig(cfg_raw)
    ds = load_dataset(cfg)
    return run_trial(ds, cfg, LossSpec.from_dict(spec_dict), trial)


def run_trials(cfg, jobs=1):
    dataset = load_dataset(cfg)
    specs = _resolve_losses(cfg, dataset.n_classes)
    tasks = [(spec, t) for spec in specs for t in range(cfg.n_trials)]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            # map preserves submission order, so results are ordered by (loss, trial)
            trials = list(ex.map(_run_task, [(cfg.to_dict(), s.to_dict(), t) for s, t in tasks]))
    else:
        trials = [run_trial(dataset, cfg, s, t) for s, t in tasks]
    return dataset, specs, trials


def run_benchmark(cfg, jobs=1, write=True):
    """Run every loss for every trial; returns ``(aggregate_report, trial_reports)``."""
    dataset, specs, trials = run_trials(cfg, jobs)
    report = aggregate(cfg, specs, trials, dataset.n_classes)
    if write:
        write_outputs(cfg.output_dir, report, trials)
    return report, trials


def run_alpha_sweep(cfg, alphas, jobs=1, write=True):
    """CDW-CE benchmark at each alpha; writes ``sweep_alpha.csv``."""
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ConfigurationError("alpha list is empty")
    if len(set(alphas)) != len(alphas):
        raise ConfigurationError("duplicate alpha values")
    if min(alphas) <= 0:
        raise ConfigurationError("alphas must be > 0")
    sweep_cfg = cfg.with_losses([{"kind": "CDW-CE", "alpha": a} for a in alphas])
    report, trials = run_benchmark(sweep_cfg, jobs, write)
    rows = []
    for a, label in zip(alphas, report["loss_order"]):
        s = report["losses"][label]["summary"].get("qwk", {"mean": None, "std": None, "n": 0})
        rows.append({"alpha": a, "mean_qwk": s["mean"], "std_qwk": s["std"], "n": s["n"]})
    report["sweep"] = {"kind": "alpha", "rows": rows}
    if write:
        _write_rows(os.path.join(sweep_cfg.output_dir, "sweep_alpha.csv"), ["alpha", "mean_qwk", "std_qwk", "n"], rows)
        _write_json(os.path.join(sweep_cfg.output_dir, "aggregate.json"), report)
    return report, trials


def run_margin_sweep(cfg, alpha, margins, jobs=1, write=True):
    """CDW-CE-with-margin benchmark for every (alpha, margin); writes ``sweep_margin.csv``.

    ``alpha`` may be a single value or a list.  ``m = 0`` reproduces plain
    CDW-CE exactly under the same seeds.
    """
    alphas = [float(a) for a in (alpha if isinstance(alpha, (list, tuple)) else [alpha])]
    margins = [float(m) for m in margins]
    if not margins or not alphas:
        raise ConfigurationError("margin and alpha lists must be non-empty")
    if len(set(margins)) != len(margins) or len(set(alphas)) != len(alphas):
        raise ConfigurationError("duplicate margin or alpha values")
    if any(not 0.0 <= m < 0.5 for m in margins):
        raise ConfigurationError("margins must lie in [0, 0.5)")
    if min(alphas) <= 0:
        raise ConfigurationError("alphas must be > 0")
    grid = [(a, m) for a in alphas for m in margins]
    sweep_cfg = cfg.with_losses([{"kind": "CDW-CE+margin", "alpha": a, "margin": m} for a, m in grid])
    report, trials = run_benchmark(sweep_cfg, jobs, write)
    rows = []
    for (a, m), label in zip(grid, report["loss_order"]):
        s = report["losses"][label]["summary"].get("qwk", {"mean": None, "std": None, "n": 0})
        rows.append({"alpha": a, "margin": m, "mean_qwk": s["mean"], "std_qwk": s["std"], "n": s["n"]})
    report["sweep"] = {"kind": "margin", "rows": rows}
    if write:
        _write_rows(
            os.path.join(sweep_cfg.output_dir, "sweep_margin.csv"),
            ["alpha", "margin", "mean_qwk", "std_qwk", "n"],
            rows,
        )
        _write_json(os.path.join(sweep_cfg.output_dir, "aggregate.json"), report)
    return report, trials


def safe_name(label):
    out = []
    for ch in label:
        out.append(ch if ch.isalnum() or ch in "-." else "_")
    return "".join(out).strip("_")


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt_cell(r[h]) for h in header])


def pooled_roc(trials, label, K):
    """Per-class ROC curves over the test predictions of all completed trials."""
    ok = [t for t in trials if t["loss"] == label and t["status"] == "ok" and t.get("class_scores") is not None]
    if not ok:
        return []
    y = np.concatenate([t["y_true"] for t in ok])
    s = np.vstack([t["class_scores"] for t in ok])
    return metrics.class_roc_curves(y, s, K)


def write_outputs(out_dir, report, trials):
    """Write per-trial JSON, aggregate.json, confusion/ROC CSVs and summary.md."""
    try:
        os.makedirs(os.path.join(out_dir, "trials"), exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {out_dir!r}: {e}") from e
    for t in trials:
        _write_json(os.path.join(out_dir, "trials", f"{safe_name(t['loss'])}_trial{t['trial']:03d}.json"), t)
    K = report["n_classes"]
    for label in report["loss_order"]:
        entry = report["losses"][label]
        if "mean_confusion" in entry:
            metrics.write_confusion_csv(
                np.asarray(entry["mean_confusion"]), os.path.join(out_dir, f"confusion_{safe_name(label)}.csv")
            )
        for k, curve in enumerate(pooled_roc(trials, label, K)):
            if curve is not None:
                curve.write_csv(os.path.join(out_dir, f"roc_{safe_name(label)}_class{k}.csv"))
    emit_report(report, "json", out_dir)
    emit_report(report, "csv", out_dir)
    emit_report(report, "markdown", out_dir)


def markdown_table(report, rows, title=None):
    """Metric rows x loss columns, each cell ``mean ± std``."""
    labels = report["loss_order"]
    lines = []
    if title:
        lines += [f"### {title}", ""]
    lines.append("| Metric | " + " | ".join(labels) + " |")
    lines.append("|---|" + "---|" * len(labels))
    for key, name in rows:
        cells = []
        for label in labels:
            s = report["losses"][label]["summary"].get(key)
            if not s or s["mean"] is None:
                cells.append("n/a")
            else:
                cells.append(f"{s['mean']:.4f} ± {s['std']:.3f}")
        lines.append(f"| {name} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def trial_rows(report):
    rows = []
    for label in report["loss_order"]:
        tv = report["losses"][label]["trial_values"]
        keys = sorted(tv)
        n = len(next(iter(tv.values()))) if tv else 0
        for i in range(n):
            row = {"loss": label, "index": i}
            row.update({k: tv[k][i] for k in keys})
            rows.append(row)
    return rows


def emit_report(report, fmt, out_dir):
    """Write ``aggregate.json``, ``trials.csv`` or ``summary.md``; returns the path."""
    os.makedirs(out_dir, exist_ok=True)
    if fmt == "json":
        path = os.path.join(out_dir, "aggregate.json")
        _write_json(path, report)
    elif fmt == "csv":
        path = os.path.join(out_dir, "trials.csv")
        rows = trial_rows(report)
        keys = sorted({k for r in rows for k in r} - {"loss", "index"})
        _write_rows(path, ["loss", "index"] + keys, [{**{k: None for k in keys}, **r} for r in rows])
    elif fmt in ("markdown", "md"):
        path = os.path.join(out_dir, "summary.md")
        cfg = report["config"]
        parts = [
            "# Benchmark summary",
            "",
            f"{cfg['n_trials']} trials, master seed {cfg['master_seed']}; cells are mean ± std over completed trials.",
            "",
            markdown_table(report, TABLE_MES, "Ordinal classification"),
        ]
        if report["n_classes"] == 4:
            parts.append(markdown_table(report, TABLE_REMISSION, "Remission (0-1 vs 2-3)"))
        parts.append(markdown_table(report, TABLE_EXTRA, "Error structure and embeddings"))
        aucs = [(f"auc_class{k}", f"AUC class {k}") for k in range(report["n_classes"])]
        parts.append(markdown_table(report, aucs, "One-vs-rest AUC"))
        flagged = [l for l in report["loss_order"] if report["losses"][l]["incomplete"]]
        if flagged:
            parts.append("Incomplete (diverged trials): " + ", ".join(flagged) + "\n")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(parts))
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return path


def load_report(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
