"""Classification metrics for ordinal labels.

Confusion matrices are ``(K, K)`` integer arrays with rows = ground truth
and columns = prediction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _backend


class UndefinedMetricError(ValueError):
    """The metric has a zero denominator for this input."""


class InvalidInputError(ValueError):
    pass


def confusion(y_true, y_pred, K):
    t = np.asarray(y_true, dtype=np.int64)
    p = np.asarray(y_pred, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1:
        raise InvalidInputError("y_true and y_pred must be 1-D and equally long")
    if t.size and (min(t.min(), p.min()) < 0 or max(t.max(), p.max()) >= K):
        raise IndexError(f"labels must lie in [0, {K})")
    cm = np.zeros((K, K), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def _cm(cm):
    cm = np.asarray(cm)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise InvalidInputError("confusion matrix must be square")
    if np.any(cm < 0):
        raise InvalidInputError("confusion matrix entries must be >= 0")
    if cm.sum() == 0:
        raise InvalidInputError("confusion matrix is empty")
    return cm.astype(np.int64)


def qwk(cm):
    """Quadratic weighted kappa ``1 - sum(w*O) / sum(w*E)``, ``w = (i-j)^2``.

    Computed as ``1 - n * sum(w*O) / sum(w * outer(rows, cols))`` in exact
    integer arithmetic; the ``(K-1)^2`` weight normalization cancels.
    """
    cm = _cm(cm)
    K = cm.shape[0]
    idx = range(K)
    w = [[(i - j) ** 2 for j in range(K)] for i in range(K)]
    rows = [int(v) for v in cm.sum(axis=1)]
    cols = [int(v) for v in cm.sum(axis=0)]
    n = sum(rows)
    observed = sum(w[i][j] * int(cm[i, j]) for i in idx for j in idx)
    expected = sum(w[i][j] * rows[i] * cols[j] for i in idx for j in idx)
    if expected == 0:
        raise UndefinedMetricError("QWK undefined: expected disagreement is zero")
    return 1.0 - (n * observed) / expected


def cohen_kappa(cm):
    """Unweighted kappa ``(p_o - p_e) / (1 - p_e)``."""
    cm = _cm(cm)
    rows = [int(v) for v in cm.sum(axis=1)]
    cols = [int(v) for v in cm.sum(axis=0)]
    n = sum(rows)
    agree = int(np.trace(cm))
    chance = sum(r * c for r, c in zip(rows, cols))
    if chance == n * n:
        raise UndefinedMetricError("kappa undefined: chance agreement is 1")
    return 1.0 - (n * (n - agree)) / (n * n - chance)


def accuracy(cm):
    cm = _cm(cm)
    return float(np.trace(cm)) / float(cm.sum())


def per_class_f1(cm):
    cm = _cm(cm)
    tp = np.diag(cm).astype(np.float64)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    den = 2 * tp + fp + fn
    return np.where(den > 0, 2 * tp / np.where(den > 0, den, 1), 0.0)


def macro_f1(cm):
    """Unweighted mean of per-class F1; a class with no support and no predictions scores 0."""
    return float(per_class_f1(cm).mean())


def mae(y_true, y_pred):
    t = np.asarray(y_true, dtype=np.float64)
    p = np.asarray(y_pred, dtype=np.float64)
    if t.size == 0 or t.shape != p.shape:
        raise InvalidInputError("mae needs two non-empty arrays of equal length")
    return float(np.abs(t - p).mean())


def remission_collapse(cm):
    """Collapse a 4-class matrix into remission {0,1} vs non-remission {2,3}."""
    cm = np.asarray(cm, dtype=np.int64)
    if cm.shape != (4, 4):
        raise ValueError("remission collapse needs a 4x4 confusion matrix")
    return np.array(
        [[cm[:2, :2].sum(), cm[:2, 2:].sum()], [cm[2:, :2].sum(), cm[2:, 2:].sum()]],
        dtype=np.int64,
    )


def far_error_share(y_true, y_pred, min_distance=2):
    """Fraction of mispredictions that miss by ``min_distance`` classes or more."""
    d = np.abs(np.asarray(y_true, dtype=np.int64) - np.asarray(y_pred, dtype=np.int64))
    wrong = int((d > 0).sum())
    return 0.0 if wrong == 0 else float((d >= min_distance).sum()) / wrong


@dataclass
class RocCurve:
    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["threshold", "fpr", "tpr"])
            for t, f, p in zip(self.thresholds, self.fpr, self.tpr):
                w.writerow([repr(float(t)), repr(float(f)), repr(float(p))])


def roc_auc(scores, labels):
    """One-vs-rest ROC curve and trapezoidal AUC.

    ``labels`` are binary (1 = positive class).  One curve point per distinct
    score, thresholds descending; the first point is ``(0, 0)`` at +inf.
    Tied scores share a threshold, which counts cross-class ties as 1/2.
    """
    s = np.asarray(scores, dtype=np.float64)
    lab = np.asarray(labels).astype(bool)
    if s.shape != lab.shape or s.ndim != 1:
        raise InvalidInputError("scores and labels must be 1-D and equally long")
    n_pos = int(lab.sum())
    n_neg = lab.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC needs both positive and negative labels")
    order = np.argsort(-s, kind="mergesort")
    s, lab = s[order], lab[order]
    last = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tp = np.cumsum(lab)[last]
    fp = np.cumsum(~lab)[last]
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    thresholds = np.r_[np.inf, s[last]]
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(thresholds, fpr, tpr, auc)


def silhouette_samples(points, labels):
    X = np.ascontiguousarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    lab = np.asarray(labels)
    if X.shape[0] != lab.shape[0]:
        raise InvalidInputError("points and labels must have the same length")
    uniq, codes = np.unique(lab, return_inverse=True)
    if uniq.size < 2:
        raise UndefinedMetricError("silhouette needs at least two clusters")
    return _backend.kernels.silhouette_samples(X, codes.astype(np.int64), uniq.size)


def silhouette(points, labels):
    """Mean silhouette ``(b - a) / max(a, b)`` with Euclidean distances.

    Singleton clusters and points with ``a = b = 0`` score 0.
    """
    return float(silhouette_samples(points, labels).mean())


@dataclass
class MetricBundle:
    qwk: float | None
    kappa: float | None
    accuracy: float
    macro_f1: float
    mae: float
    far_error_share: float
    per_class_auc: list
    remission: dict | None
    silhouette: float | None = None

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _maybe(fn, *args):
    try:
        return fn(*args)
    except UndefinedMetricError:
        return None


def class_roc_curves(y_true, class_scores, K):
    curves = []
    for k in range(K):
        try:
            curves.append(roc_auc(class_scores[:, k], np.asarray(y_true) == k))
        except UndefinedMetricError:
            curves.append(None)
    return curves


def evaluate(y_true, y_pred, K, class_scores=None, features=None):
    """All metrics for one prediction run.

    ``class_scores`` (``(n, K)``) enables per-class one-vs-rest AUC and
    ``features`` enables the silhouette score of those features under the
    true labels.  Undefined metrics are reported as ``None``.
    """
    cm = confusion(y_true, y_pred, K)
    aucs = [None] * K
    if class_scores is not None:
        aucs = [None if c is None else c.auc for c in class_roc_curves(y_true, np.asarray(class_scores), K)]
    remission = None
    if K == 4:
        rcm = remission_collapse(cm)
        remission = {"kappa": _maybe(cohen_kappa, rcm), "f1": macro_f1(rcm), "accuracy": accuracy(rcm)}
    sil = None
    if features is not None:
        sil = _maybe(silhouette, features, y_true)
        if sil is not None and math.isnan(sil):
            sil = None
    return MetricBundle(
        qwk=_maybe(qwk, cm),
        kappa=_maybe(cohen_kappa, cm),
        accuracy=accuracy(cm),
        macro_f1=macro_f1(cm),
        mae=mae(y_true, y_pred),
        far_error_share=far_error_share(y_true, y_pred),
        per_class_auc=aucs,
        remission=remission,
        silhouette=sil,
    )


def write_confusion_csv(cm, path):
    cm = np.asarray(cm)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["true\\pred"] + [str(j) for j in range(cm.shape[1])])
        for i, row in enumerate(cm):
            w.writerow([str(i)] + [repr(float(v)) if cm.dtype.kind == "f" else str(int(v)) for v in row])
