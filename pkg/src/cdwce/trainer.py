"""Mini-batch SGD with momentum and validation-based model selection."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _backend, metrics
from .losses import ConfigurationError, LossKind, corn_cumulative, corn_rank
from .losses import per_sample, regression_label, regression_prediction
from .numerics import SeededRng

SELECTION_METRICS = ("qwk", "mae", "accuracy")


class DivergenceError(RuntimeError):
    def __init__(self, epoch, batch, value):
        super().__init__(f"non-finite loss {value!r} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch
        self.value = value


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 0.05
    momentum: float = 0.9
    seed: int = 0
    selection_metric: str = "qwk"
    patience: int | None = None
    shuffle: bool = True
    grad_clip: float | None = 1.0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigurationError("epochs and batch_size must be >= 1")
        if not self.learning_rate >= 0:
            raise ConfigurationError("learning_rate must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigurationError("momentum must lie in [0, 1)")
        if self.selection_metric not in SELECTION_METRICS:
            raise ConfigurationError(f"selection_metric must be one of {SELECTION_METRICS}")
        if self.patience is not None and self.patience < 1:
            raise ConfigurationError("patience must be >= 1 when set")
        if self.grad_clip is not None and not self.grad_clip > 0:
            raise ConfigurationError("grad_clip must be > 0 when set")

    def to_dict(self):
        return asdict(self)


@dataclass
class TrainLog:
    metric: str
    train_loss: list = field(default_factory=list)
    val_metric: list = field(default_factory=list)
    selected_epoch: int = -1
    stopped_early: bool = False

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _check_pairing(model, loss_spec):
    cfg = model.config
    if cfg.head != loss_spec.head or cfg.num_classes != loss_spec.num_classes:
        raise ConfigurationError(
            f"{loss_spec.label} needs a {loss_spec.head} head with {loss_spec.num_classes} classes, "
            f"model has a {cfg.head} head with {cfg.num_classes}"
        )


def loss_and_grads(model, loss_spec, X, y):
    """Mean batch loss and its parameter gradients (one forward/backward pass)."""
    out, _ = model.forward(X)
    vals, g = per_sample(loss_spec, out, y, validate=False)
    g = g / X.shape[0]
    if loss_spec.head == "softmax":
        g = _backend.kernels.softmax_backward(np.ascontiguousarray(out), np.ascontiguousarray(g))
    wg, bg = model.backward(g)
    return vals, wg, bg


def _clip(wg, bg, max_norm):
    # rescale all gradients together so their global L2 norm is at most max_norm
    norm = math.sqrt(sum(float(np.vdot(g, g)) for g in wg) + sum(float(np.vdot(g, g)) for g in bg))
    if norm > max_norm:
        scale = max_norm / norm
        for g in wg:
            g *= scale
        for g in bg:
            g *= scale
    return norm


def _score(metric, y_true, y_pred, K):
    if metric == "mae":
        return metrics.mae(y_true, y_pred)
    cm = metrics.confusion(y_true, y_pred, K)
    if metric == "accuracy":
        return metrics.accuracy(cm)
    try:
        return metrics.qwk(cm)
    except metrics.UndefinedMetricError:
        return -math.inf


def _better(metric, new, best):
    return new < best if metric == "mae" else new > best


def train(model, loss_spec, train_set, val_set, config=TrainConfig()):
    """Train a copy of ``model`` and return ``(best_model, log)``.

    Parameters come from the epoch with the best validation metric (the
    earliest on ties).  With an empty validation set the last epoch wins.
    Every random choice is driven by ``config.seed`` and the epoch index.
    """
    _check_pairing(model, loss_spec)
    model = model.copy()
    log = TrainLog(metric=config.selection_metric)
    vw = [np.zeros_like(w) for w in model.weights]
    vb = [np.zeros_like(b) for b in model.biases]
    X, y = train_set.X, train_set.y
    n = len(train_set)
    best = None
    best_value = None
    since_best = 0
    lr, mu = config.learning_rate, config.momentum
    for epoch in range(config.epochs):
        order = SeededRng(config.seed, epoch).permutation(n) if config.shuffle else np.arange(n)
        total = 0.0
        for b, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start : start + config.batch_size]
            vals, wg, bg = loss_and_grads(model, loss_spec, X[idx], y[idx])
            batch_loss = float(vals.mean())
            if not math.isfinite(batch_loss):
                raise DivergenceError(epoch, b, batch_loss)
            total += float(vals.sum())
            if config.grad_clip is not None:
                _clip(wg, bg, config.grad_clip)
            for l in range(model.n_layers):
                vw[l] *= mu
                vw[l] -= lr * wg[l]
                vb[l] *= mu
                vb[l] -= lr * bg[l]
                model.weights[l] += vw[l]
                model.biases[l] += vb[l]
        log.train_loss.append(total / n)
        if len(val_set) == 0:
            best, log.selected_epoch = model.copy(), epoch
            continue
        labels, _ = predict(model, val_set.X, loss_spec)
        value = _score(config.selection_metric, val_set.y, labels, loss_spec.num_classes)
        log.val_metric.append(value)
        if best is None or _better(config.selection_metric, value, best_value):
            best, best_value, log.selected_epoch = model.copy(), value, epoch
            since_best = 0
        else:
            since_best += 1
            if config.patience is not None and since_best >= config.patience:
                log.stopped_early = True
                break
    return best, log


def predict(model, X, loss_spec):
    """Labels and scores under the head's inference rule.

    softmax: argmax (lowest index on ties), scores = class probabilities.
    corn: rank from the cumulative chain, scores = ``P(label > k)``.
    regression: ``round(sigmoid(raw) * (K-1))``, scores = the continuous prediction.
    """
    out, _ = model.forward(np.atleast_2d(X))
    K = loss_spec.num_classes
    if loss_spec.head == "softmax":
        return np.argmax(out, axis=1), out
    if loss_spec.head == "corn":
        return corn_rank(out), corn_cumulative(out)
    pred = regression_prediction(out[:, 0], K)
    return regression_label(pred, K), pred


def class_scores(loss_spec, scores):
    """Per-class probability matrix for ROC analysis, or ``None`` for regression."""
    if loss_spec.head == "softmax":
        return scores
    if loss_spec.kind is LossKind.CORN:
        # scores are the cumulative chain; difference adjacent entries
        n = scores.shape[0]
        upper = np.hstack([np.ones((n, 1)), scores])
        lower = np.hstack([scores, np.zeros((n, 1))])
        return upper - lower
    return None


def extract_features(model, X):
    """Last hidden-layer activations, one row per input row."""
    _, penult = model.forward(np.atleast_2d(X))
    return penult

