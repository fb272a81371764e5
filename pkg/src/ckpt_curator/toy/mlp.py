"""Dense tanh network with a softmax head, forward/backward in numpy f64."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch
from ..tensor_store import TensorMap


def _wname(i):
    return f"layer{i}.weight"


def _bname(i):
    return f"layer{i}.bias"


def log_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def cross_entropy(log_probs, labels):
    """Mean of -sum(y * log p) over rows, with 0 * log 0 = 0."""
    terms = np.where(labels > 0, labels * log_probs, 0.0)
    return float(-terms.sum() / labels.shape[0])


class Model:
    """Parameters are kept as a name -> f64 array dict; weights are (fan_in, fan_out)."""

    def __init__(self, params):
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
        n = 0
        while _wname(n) in self.params:
            n += 1
        if n == 0 or len(self.params) != 2 * n:
            raise ValueError("parameters must be layer<i>.weight / layer<i>.bias pairs")
        self.n_layers = n
        for i in range(n):
            w, b = self.params[_wname(i)], self.params[_bname(i)]
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"layer {i}: weight {w.shape} / bias {b.shape} mismatch")
            if i and self.params[_wname(i - 1)].shape[1] != w.shape[0]:
                raise ValueError(f"layer {i} does not chain onto layer {i - 1}")

    @classmethod
    def init(cls, layer_sizes, rng):
        params = {}
        for i, (fan_in, fan_out) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:])):
            params[_wname(i)] = rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in)
            params[_bname(i)] = np.zeros(fan_out)
        return cls(params)

    @classmethod
    def from_tensormap(cls, tm: TensorMap):
        return cls({k: np.asarray(v, dtype=np.float64) for k, v in tm.items()})

    def to_tensormap(self) -> TensorMap:
        return TensorMap({k: v.astype(np.float32) for k, v in self.params.items()})

    def copy(self):
        return Model({k: v.copy() for k, v in self.params.items()})

    @property
    def n_inputs(self):
        return self.params[_wname(0)].shape[0]

    @property
    def n_outputs(self):
        return self.params[_wname(self.n_layers - 1)].shape[1]

    def weights(self, i):
        return self.params[_wname(i)], self.params[_bname(i)]

    def log_proba(self, x):
        h = x
        for i in range(self.n_layers - 1):
            w, b = self.weights(i)
            h = np.tanh(h @ w + b)
        w, b = self.weights(self.n_layers - 1)
        return log_softmax(h @ w + b)

    def proba(self, x):
        return np.exp(self.log_proba(x))


def dropout_masks(model, n, p, rng):
    """Inverted-dropout masks for every hidden layer, or None when p == 0."""
    if p == 0:
        return None
    sizes = [model.weights(i)[0].shape[1] for i in range(model.n_layers - 1)]
    return [(rng.random((n, s)) >= p) / (1.0 - p) for s in sizes]


def loss_and_grads(model: Model, x, y, masks=None):
    """Mean soft-label cross-entropy and its gradient w.r.t. every parameter."""
    acts = [x]
    tanhs = []
    h = x
    for i in range(model.n_layers - 1):
        w, b = model.weights(i)
        t = np.tanh(h @ w + b)
        tanhs.append(t)
        h = t * masks[i] if masks is not None else t
        acts.append(h)
    w, b = model.weights(model.n_layers - 1)
    logp = log_softmax(h @ w + b)
    loss = cross_entropy(logp, y)

    grads = {}
    delta = (np.exp(logp) - y) / x.shape[0]
    for i in range(model.n_layers - 1, -1, -1):
        w, _ = model.weights(i)
        grads[_wname(i)] = acts[i].T @ delta
        grads[_bname(i)] = delta.sum(axis=0)
        if i:
            delta = delta @ w.T
            if masks is not None:
                delta = delta * masks[i - 1]
            delta = delta * (1.0 - tanhs[i - 1] ** 2)
    return loss, grads


@dataclass(frozen=True)
class EvalResult:
    loss: float
    accuracy: float


def evaluate(model: Model, ds) -> EvalResult:
    """Clean evaluation: no dropout, no input noise."""
    if ds.inputs.shape[1] != model.n_inputs or ds.labels.shape[1] != model.n_outputs:
        raise DimensionMismatch(
            f"model maps {model.n_inputs}->{model.n_outputs}, dataset is "
            f"{ds.inputs.shape[1]}->{ds.labels.shape[1]}"
        )
    logp = model.log_proba(ds.inputs)
    acc = float(np.mean(logp.argmax(axis=1) == ds.labels.argmax(axis=1)))
    return EvalResult(cross_entropy(logp, ds.labels), acc)
