"""Ordinal and categorical losses with analytic gradients.

Probability-based losses (CE, CDW-CE, CDW-CE with margin, CO2, HO2) take a
probability vector and return the gradient with respect to the
probabilities; the trainer chains it through the softmax Jacobian.  CORN
takes K-1 logits and the regression loss a single raw output, and return
gradients with respect to those.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _backend
from .numerics import EPS_CLAMP, InvalidInputError, ShapeError, sigmoid


class HyperparameterError(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


class LossKind(str, Enum):
    CE = "CE"
    CDW_CE = "CDW-CE"
    CDW_CE_MARGIN = "CDW-CE+margin"
    CO2 = "CO2"
    HO2 = "HO2"
    CORN = "CORN"
    MSE_REG = "MSE"


_HEADS = {
    LossKind.CE: "softmax",
    LossKind.CDW_CE: "softmax",
    LossKind.CDW_CE_MARGIN: "softmax",
    LossKind.CO2: "softmax",
    LossKind.HO2: "softmax",
    LossKind.CORN: "corn",
    LossKind.MSE_REG: "regression",
}

_ALLOWED = {
    LossKind.CE: set(),
    LossKind.CDW_CE: {"alpha"},
    LossKind.CDW_CE_MARGIN: {"alpha", "margin"},
    LossKind.CO2: {"lam", "delta"},
    LossKind.HO2: {"lam", "delta"},
    LossKind.CORN: set(),
    LossKind.MSE_REG: set(),
}

_DEFAULTS = {"alpha": 5.0, "margin": 0.05, "lam": 1.0, "delta": 0.05}
# entropy gives HO2 no label signal, so its penalty must carry the supervision
_KIND_DEFAULTS = {LossKind.HO2: {"lam": 10.0}}


@dataclass(frozen=True)
class LossSpec:
    """One loss and its hyperparameters.

    Hyperparameters that do not belong to ``kind`` must be left as ``None``;
    the relevant ones default to ``alpha=5``, ``margin=0.05``, ``delta=0.05``
    and ``lam=1`` (``lam=10`` for HO2) when omitted.
    """

    kind: LossKind
    num_classes: int
    alpha: float | None = None
    margin: float | None = None
    lam: float | None = None
    delta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", LossKind(self.kind))
        if int(self.num_classes) < 2:
            raise HyperparameterError("num_classes must be >= 2")
        object.__setattr__(self, "num_classes", int(self.num_classes))
        allowed = _ALLOWED[self.kind]
        for name in ("alpha", "margin", "lam", "delta"):
            value = getattr(self, name)
            if name not in allowed:
                if value is not None:
                    raise HyperparameterError(f"{name} is not a parameter of {self.kind.value}")
                continue
            if value is None:
                value = _KIND_DEFAULTS.get(self.kind, {}).get(name, _DEFAULTS[name])
            value = float(value)
            if not np.isfinite(value):
                raise HyperparameterError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.alpha is not None and self.alpha <= 0:
            raise HyperparameterError("alpha must be > 0")
        if self.margin is not None and not 0.0 <= self.margin < 1.0:
            raise HyperparameterError("margin must lie in [0, 1)")
        for name in ("lam", "delta"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise HyperparameterError(f"{name} must be >= 0")

    @property
    def head(self):
        return _HEADS[self.kind]

    @property
    def output_dim(self):
        return {"softmax": self.num_classes, "corn": self.num_classes - 1, "regression": 1}[self.head]

    @property
    def label(self):
        """Short human-readable name, e.g. ``CDW-CE(a=5)``."""
        k = self.kind
        if k is LossKind.CDW_CE:
            return f"CDW-CE(a={_fmt(self.alpha)})"
        if k is LossKind.CDW_CE_MARGIN:
            return f"CDW-CE(a={_fmt(self.alpha)},m={_fmt(self.margin)})"
        if k in (LossKind.CO2, LossKind.HO2):
            return f"{k.value}(l={_fmt(self.lam)},d={_fmt(self.delta)})"
        return k.value

    def to_dict(self):
        d = {"kind": self.kind.value, "num_classes": self.num_classes}
        for name in sorted(_ALLOWED[self.kind]):
            d[name] = getattr(self, name)
        return d

    @classmethod
    def from_dict(cls, d, num_classes=None):
        d = dict(d)
        if num_classes is not None:
            d.setdefault("num_classes", num_classes)
        unknown = set(d) - {"kind", "num_classes", "alpha", "margin", "lam", "delta"}
        if unknown:
            raise ConfigurationError(f"unknown loss fields: {sorted(unknown)}")
        return cls(**d)


def _fmt(x):
    return f"{x:g}"


@dataclass
class LossResult:
    value: float
    grad: np.ndarray


def _check_probs(y_hat):
    p = np.asarray(y_hat, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] < 2:
        raise ShapeError("probability vector must be 1-D with length >= 2")
    if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise InvalidInputError("probabilities must be finite and lie in [0, 1]")
    if abs(p.sum() - 1.0) > 1e-9:
        raise InvalidInputError(f"probabilities must sum to 1, got {p.sum()!r}")
    return p


def _check_class(c, K):
    if isinstance(c, (bool, np.bool_)) or int(c) != c or not 0 <= int(c) < K:
        raise IndexError(f"class index {c!r} out of range for {K} classes")
    return int(c)


def _single(kernel_out):
    vals, grad = kernel_out
    return LossResult(float(vals[0]), np.array(grad[0]))


def _row(p, c):
    return np.ascontiguousarray(p[None, :]), np.array([c], dtype=np.int64)


def ce_loss(y_hat, c):
    """Cross-entropy ``-ln y_hat[c]`` (probability clamped at ``EPS_CLAMP``)."""
    p = _check_probs(y_hat)
    c = _check_class(c, p.shape[0])
    return _single(_backend.kernels.ce(*_row(p, c), EPS_CLAMP))


def _check_alpha(alpha):
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha <= 0:
        raise HyperparameterError("alpha must be > 0")
    return alpha


def cdw_ce_loss(y_hat, c, alpha):
    """Class distance weighted cross-entropy.

    ``-sum_i ln(1 - y_hat[i]) * |i - c|**alpha``; the true-class term has
    weight zero, so only mass placed on wrong classes is penalized and
    distant classes are penalized harder.
    """
    return cdw_ce_margin_loss(y_hat, c, alpha, 0.0)


def cdw_ce_grad(y_hat, c, alpha):
    """Gradient of :func:`cdw_ce_loss` w.r.t. the probabilities.

    Component ``i`` is ``|i - c|**alpha / (1 - y_hat[i])``; component ``c`` is 0.
    """
    return cdw_ce_loss(y_hat, c, alpha).grad


def cdw_ce_margin_loss(y_hat, c, alpha, m):
    """CDW-CE with every probability shifted up by ``m`` before the log.

    The shifted probability is capped at ``1 - EPS_CLAMP`` so the log stays
    finite; ``m = 0`` gives plain CDW-CE.
    """
    p = _check_probs(y_hat)
    c = _check_class(c, p.shape[0])
    alpha = _check_alpha(alpha)
    m = float(m)
    if not 0.0 <= m < 1.0:
        raise HyperparameterError("margin must lie in [0, 1)")
    return _single(_backend.kernels.cdw_ce(*_row(p, c), alpha, m, EPS_CLAMP))


def _check_lam_delta(lam, delta):
    lam, delta = float(lam), float(delta)
    if lam < 0 or delta < 0 or not (np.isfinite(lam) and np.isfinite(delta)):
        raise HyperparameterError("lambda and delta must be finite and >= 0")
    return lam, delta


def co2_loss(y_hat, c, lam, delta):
    """Cross-entropy plus a hinge penalty on non-unimodal neighbouring pairs.

    Before the true class every step ``k -> k+1`` should rise by at least
    ``delta``; from the true class on every step should fall by at least
    ``delta``.  Violations are penalized linearly with weight ``lam``.
    """
    p = _check_probs(y_hat)
    c = _check_class(c, p.shape[0])
    lam, delta = _check_lam_delta(lam, delta)
    return _single(_backend.kernels.unimodal(*_row(p, c), lam, delta, False, EPS_CLAMP))


def ho2_loss(y_hat, c, lam, delta):
    """Entropy of ``y_hat`` plus the same unimodality penalty as :func:`co2_loss`."""
    p = _check_probs(y_hat)
    c = _check_class(c, p.shape[0])
    lam, delta = _check_lam_delta(lam, delta)
    return _single(_backend.kernels.unimodal(*_row(p, c), lam, delta, True, EPS_CLAMP))


def corn_loss(logits, c, num_classes=None):
    """Conditional ordinal (CORN) loss for one sample.

    Task ``k`` (``k = 0 .. K-2``) is the binary question "label > k" asked
    only of samples with label > k-1, so a sample with label ``c`` takes
    part in tasks ``0 .. min(c, K-2)``.  The value is the mean binary
    cross-entropy over the tasks the sample takes part in.
    """
    l = np.asarray(logits, dtype=np.float64)
    if l.ndim != 1:
        raise ShapeError("CORN logits must be 1-D")
    if num_classes is not None and l.shape[0] != num_classes - 1:
        raise ShapeError(f"CORN needs {num_classes - 1} logits, got {l.shape[0]}")
    if l.shape[0] < 1:
        raise ShapeError("CORN needs at least one logit")
    if not np.all(np.isfinite(l)):
        raise InvalidInputError("logits contain non-finite values")
    c = _check_class(c, l.shape[0] + 1)
    return _single(_backend.kernels.corn(*_row(l, c)))


def corn_cumulative(logits):
    """``P(label > k)`` for every task: cumulative product of the sigmoids."""
    l = np.asarray(logits, dtype=np.float64)
    return np.cumprod(sigmoid(l), axis=-1)


def corn_rank(logits):
    """Rank = number of tasks whose cumulative probability exceeds 0.5."""
    return (corn_cumulative(logits) > 0.5).sum(axis=-1)


def corn_class_probs(logits):
    """Per-class probabilities ``P(label = k)`` implied by the CORN chain."""
    cum = corn_cumulative(np.atleast_2d(logits))
    n = cum.shape[0]
    upper = np.hstack([np.ones((n, 1)), cum])
    lower = np.hstack([cum, np.zeros((n, 1))])
    return upper - lower


def mse_reg_loss(raw_output, c, K):
    """Squared error of ``sigmoid(raw) * (K - 1)`` against the class index."""
    K = int(K)
    if K < 2:
        raise HyperparameterError("K must be >= 2")
    x = float(raw_output)
    if not np.isfinite(x):
        raise InvalidInputError("raw output must be finite")
    c = _check_class(c, K)
    vals, g = _backend.kernels.mse_reg(np.array([x]), np.array([c], dtype=np.int64), K)
    return LossResult(float(vals[0]), np.array([g[0]]))


def regression_prediction(raw_output, K):
    return sigmoid(np.asarray(raw_output, dtype=np.float64)) * (K - 1)


def regression_label(prediction, K):
    """Round half up and clamp into ``[0, K-1]``."""
    lab = np.floor(np.asarray(prediction, dtype=np.float64) + 0.5)
    return np.clip(lab, 0, K - 1).astype(np.int64)


def per_sample(spec, output, y, validate=True):
    """Per-sample values and gradients for a batch ``output`` of shape ``(n, d)``.

    ``d`` is K for probability losses, K-1 for CORN and 1 for regression.
    """
    out = np.asarray(output, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if out.ndim != 2 or out.shape[1] != spec.output_dim:
        raise ConfigurationError(
            f"{spec.label} expects a {spec.head} head with {spec.output_dim} outputs, got shape {out.shape}"
        )
    if y.ndim != 1 or y.shape[0] != out.shape[0]:
        raise ShapeError("labels must be 1-D and match the batch size")
    if validate:
        if not np.all(np.isfinite(out)):
            raise InvalidInputError("model output contains non-finite values")
        if y.size and (y.min() < 0 or y.max() >= spec.num_classes):
            raise IndexError("class index out of range")
        if spec.head == "softmax":
            if np.any(out < 0) or np.any(out > 1) or np.any(np.abs(out.sum(axis=1) - 1) > 1e-9):
                raise InvalidInputError("softmax-head output must be probability vectors")
    out = np.ascontiguousarray(out)
    k = _backend.kernels
    kind = spec.kind
    if kind is LossKind.CE:
        return k.ce(out, y, EPS_CLAMP)
    if kind is LossKind.CDW_CE:
        return k.cdw_ce(out, y, spec.alpha, 0.0, EPS_CLAMP)
    if kind is LossKind.CDW_CE_MARGIN:
        return k.cdw_ce(out, y, spec.alpha, spec.margin, EPS_CLAMP)
    if kind is LossKind.CO2:
        return k.unimodal(out, y, spec.lam, spec.delta, False, EPS_CLAMP)
    if kind is LossKind.HO2:
        return k.unimodal(out, y, spec.lam, spec.delta, True, EPS_CLAMP)
    if kind is LossKind.CORN:
        return k.corn(out, y)
    vals, g = k.mse_reg(np.ascontiguousarray(out[:, 0]), y, spec.num_classes)
    return vals, g[:, None]


def loss_dispatch(spec, model_output, c, validate=True):
    """Evaluate ``spec`` on one sample or a batch; batch loss is the mean.

    For a single sample pass a 1-D output and an integer class; the
    returned gradient then has the output's shape.  For a batch pass
    ``(n, d)`` outputs and ``n`` labels; the gradient is that of the mean.
    """
    out = np.asarray(model_output, dtype=np.float64)
    single = out.ndim <= 1
    if single:
        out = out.reshape(1, -1)
        y = np.array([c], dtype=np.int64)
    else:
        y = np.asarray(c, dtype=np.int64)
    if out.shape[0] == 0:
        raise InvalidInputError("empty batch")
    vals, grad = per_sample(spec, out, y, validate=validate)
    n = out.shape[0]
    value = float(vals.mean())
    grad = grad / n
    if single:
        grad = grad[0]
    return LossResult(value, grad)
