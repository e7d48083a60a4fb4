"""Small multilayer perceptron with softmax, CORN and regression heads."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .numerics import SeededRng, ShapeError, softmax_rows

HEADS = ("softmax", "corn", "regression")
ACTIVATIONS = ("relu", "tanh")


class ModelConfigError(ValueError):
    pass


class ModelStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class MlpConfig:
    input_dim: int
    hidden_dims: tuple = (32, 16)
    head: str = "softmax"
    num_classes: int = 4
    activation: str = "relu"
    init_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if int(self.input_dim) < 1:
            raise ModelConfigError("input_dim must be >= 1")
        if not self.hidden_dims or min(self.hidden_dims) < 1:
            raise ModelConfigError("hidden_dims must be non-empty with every dim >= 1")
        if self.head not in HEADS:
            raise ModelConfigError(f"head must be one of {HEADS}")
        if self.activation not in ACTIVATIONS:
            raise ModelConfigError(f"activation must be one of {ACTIVATIONS}")
        if int(self.num_classes) < 2:
            raise ModelConfigError("num_classes must be >= 2")

    @property
    def output_dim(self):
        return {"softmax": self.num_classes, "corn": self.num_classes - 1, "regression": 1}[self.head]

    @property
    def layer_dims(self):
        return (self.input_dim, *self.hidden_dims, self.output_dim)

    def to_dict(self):
        d = asdict(self)
        d["hidden_dims"] = list(self.hidden_dims)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def glorot_bound(fan_in, fan_out):
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def _act(name, z):
    return np.maximum(z, 0.0) if name == "relu" else np.tanh(z)


def _act_grad(name, z, a):
    return (z > 0).astype(np.float64) if name == "relu" else 1.0 - a * a


@dataclass
class MlpModel:
    """Fully connected network ``input -> hidden... -> head``.

    ``weights[l]`` has shape ``(fan_in, fan_out)`` so a batch ``X`` of
    shape ``(n, input_dim)`` maps as ``X @ W + b``.
    """

    config: MlpConfig
    weights: list
    biases: list
    _cache: dict | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        dims = self.config.layer_dims
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ShapeError("wrong number of layers for config")
        self.weights = [np.array(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.array(b, dtype=np.float64) for b in self.biases]
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[l], dims[l + 1]) or b.shape != (dims[l + 1],):
                raise ShapeError(f"layer {l}: expected W {(dims[l], dims[l + 1])}, b {(dims[l + 1],)}")

    @property
    def n_layers(self):
        return len(self.weights)

    def forward(self, x):
        """Return ``(head_output, penultimate)`` for one input vector or a batch.

        The softmax head returns probabilities, the CORN head its K-1 logits
        and the regression head the raw scalar output.  The head
        pre-activation and hidden activations are cached for :meth:`backward`.
        """
        X = np.asarray(x, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.config.input_dim:
            raise ShapeError(f"input must have {self.config.input_dim} features, got shape {np.shape(x)}")
        acts = [X]
        pre = []
        a = X
        for l in range(self.n_layers - 1):
            z = a @ self.weights[l] + self.biases[l]
            a = _act(self.config.activation, z)
            pre.append(z)
            acts.append(a)
        out = a @ self.weights[-1] + self.biases[-1]
        head = softmax_rows(out) if self.config.head == "softmax" else out
        self._cache = {"acts": acts, "pre": pre, "single": single}
        penult = acts[-1]
        if single:
            return head[0], penult[0]
        return head, penult

    def backward(self, upstream_grad):
        """Reverse-mode gradients of every weight and bias.

        ``upstream_grad`` is the gradient of the loss with respect to the
        head pre-activation (the logits for the softmax head), shaped like
        the output of the last :meth:`forward` call.  Returns
        ``(weight_grads, bias_grads)`` as lists aligned with the layers.
        """
        if self._cache is None:
            raise ModelStateError("backward called before forward")
        acts, pre = self._cache["acts"], self._cache["pre"]
        g = np.asarray(upstream_grad, dtype=np.float64)
        if self._cache["single"] and g.ndim == 1:
            g = g[None, :]
        if g.shape != (acts[0].shape[0], self.config.output_dim):
            raise ShapeError(f"upstream gradient has shape {g.shape}")
        wgrads = [None] * self.n_layers
        bgrads = [None] * self.n_layers
        for l in range(self.n_layers - 1, -1, -1):
            wgrads[l] = acts[l].T @ g
            bgrads[l] = g.sum(axis=0)
            if l > 0:
                g = (g @ self.weights[l].T) * _act_grad(self.config.activation, pre[l - 1], acts[l])
        return wgrads, bgrads

    def copy(self):
        return MlpModel(self.config, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def to_dict(self):
        return {
            "format": "cdwce-mlp",
            "version": 1,
            "config": self.config.to_dict(),
            "layers": [
                {"shape": list(w.shape), "weight": w.ravel().tolist(), "bias": b.tolist()}
                for w, b in zip(self.weights, self.biases)
            ],
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != "cdwce-mlp":
            raise ModelConfigError("not a cdwce-mlp checkpoint")
        config = MlpConfig.from_dict(d["config"])
        ws = [np.array(layer["weight"], dtype=np.float64).reshape(layer["shape"]) for layer in d["layers"]]
        bs = [np.array(layer["bias"], dtype=np.float64) for layer in d["layers"]]
        return cls(config, ws, bs)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def init(config):
    """Glorot-uniform weights and zero biases, drawn layer by layer from ``init_seed``.

    Hidden layers are drawn before the head, so models that differ only in
    their head share identical hidden-layer weights for the same seed.
    """
    rng = SeededRng(config.init_seed)
    dims = config.layer_dims
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = glorot_bound(fan_in, fan_out)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(config, weights, biases)
