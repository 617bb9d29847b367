"""Desk-scale models with per-layer flat parameter access.

All trainable objects expose the same small surface the optimizer needs:
`n_layers`, `layer_param_count(l)`, `get_layer_flat(l)` / `set_layer_flat`,
`loss_and_accuracy(batch)`, and `gradients(batch)` returning one flat
gradient vector per layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix import SymMatrix


@dataclass(frozen=True)
class Batch:
    inputs: np.ndarray  # |B| x in_dim
    labels: np.ndarray  # |B| ints

    def __post_init__(self):
        if self.inputs.ndim != 2:
            raise ValueError("inputs must be a 2-d matrix")
        if self.labels.ndim != 1 or self.labels.shape[0] != self.inputs.shape[0]:
            raise ValueError("labels must be one value per input row")


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class MlpModel:
    """Rectifier MLP with a softmax cross-entropy head.

    Layer l holds weights of shape (in_l, out_l) and a bias of length out_l;
    its flat parameter vector is weights.ravel() followed by the bias.
    """

    def __init__(self, layer_sizes, weights, biases):
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        if len(self.layer_sizes) < 2 or any(s < 1 for s in self.layer_sizes):
            raise ValueError("layer_sizes must be >= 2 positive integers")
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        for l, (fan_in, fan_out) in enumerate(
            zip(self.layer_sizes[:-1], self.layer_sizes[1:])
        ):
            if self.weights[l].shape != (fan_in, fan_out):
                raise ValueError(f"layer {l} weight shape mismatch")
            if self.biases[l].shape != (fan_out,):
                raise ValueError(f"layer {l} bias shape mismatch")

    @classmethod
    def init(cls, layer_sizes, rng: np.random.Generator, weight_scale: float | None = None):
        """He-style initialization; biases start at zero."""
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            scale = weight_scale if weight_scale is not None else np.sqrt(2.0 / fan_in)
            weights.append(rng.standard_normal((fan_in, fan_out)) * scale)
            biases.append(np.zeros(fan_out))
        return cls(layer_sizes, weights, biases)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]

    def layer_param_count(self, layer: int) -> int:
        return self.weights[layer].size + self.biases[layer].size

    def get_layer_flat(self, layer: int) -> np.ndarray:
        return np.concatenate([self.weights[layer].ravel(), self.biases[layer]])

    def set_layer_flat(self, layer: int, flat) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.layer_param_count(layer),):
            raise ValueError("flat vector length mismatch")
        w_size = self.weights[layer].size
        self.weights[layer] = flat[:w_size].reshape(self.weights[layer].shape).copy()
        self.biases[layer] = flat[w_size:].copy()

    def _forward(self, X):
        """Returns logits and per-layer activations (inputs to each layer)."""
        acts = [X]
        h = X
        last = self.n_layers - 1
        for l in range(self.n_layers):
            z = h @ self.weights[l] + self.biases[l]
            if l < last:
                h = np.maximum(z, 0.0)  # relu'(0) taken as 0 in backward
                acts.append(h)
            else:
                return z, acts
        raise AssertionError("unreachable")

    def predict_logits(self, X) -> np.ndarray:
        return self._forward(np.asarray(X, dtype=np.float64))[0]

    def _check_labels(self, y):
        if y.size and (y.min() < 0 or y.max() >= self.out_dim):
            raise ValueError("labels must lie in [0, out_dim)")

    def loss_and_accuracy(self, batch: Batch) -> tuple[float, float]:
        X = np.asarray(batch.inputs, dtype=np.float64)
        y = np.asarray(batch.labels)
        self._check_labels(y)
        logits, _ = self._forward(X)
        z = logits - logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(z).sum(axis=1))
        loss = float(np.mean(log_norm - z[np.arange(len(y)), y]))
        accuracy = float(np.mean(np.argmax(logits, axis=1) == y))
        return loss, accuracy

    def gradients(self, batch: Batch) -> list[np.ndarray]:
        """Backpropagated mean-loss gradients, one flat vector per layer."""
        X = np.asarray(batch.inputs, dtype=np.float64)
        y = np.asarray(batch.labels)
        self._check_labels(y)
        logits, acts = self._forward(X)
        delta = _softmax(logits)
        delta[np.arange(len(y)), y] -= 1.0
        delta /= len(y)
        grads: list[np.ndarray | None] = [None] * self.n_layers
        for l in range(self.n_layers - 1, -1, -1):
            gw = acts[l].T @ delta
            gb = delta.sum(axis=0)
            grads[l] = np.concatenate([gw.ravel(), gb])
            if l > 0:
                delta = (delta @ self.weights[l].T) * (acts[l] > 0.0)
        return grads


class QuadraticBowl:
    """L(theta) = 0.5 theta' A theta - b' theta as a one-layer problem.

    The batch argument is ignored; accuracy is reported as 0.0.
    """

    def __init__(self, A: SymMatrix, b, theta0=None):
        self.A = A
        self.b = np.asarray(b, dtype=np.float64)
        if self.b.shape != (A.n,):
            raise ValueError("b length must match A")
        self.theta = (
            np.zeros(A.n) if theta0 is None else np.asarray(theta0, dtype=np.float64).copy()
        )

    n_layers = 1

    def layer_param_count(self, layer: int) -> int:
        return self.A.n

    def get_layer_flat(self, layer: int) -> np.ndarray:
        return self.theta.copy()

    def set_layer_flat(self, layer: int, flat) -> None:
        self.theta = np.asarray(flat, dtype=np.float64).copy()

    def loss_and_accuracy(self, batch=None) -> tuple[float, float]:
        t = self.theta
        loss = 0.5 * t @ self.A.entries @ t - self.b @ t
        return float(loss), 0.0

    def gradients(self, batch=None) -> list[np.ndarray]:
        return [self.A.entries @ self.theta - self.b]


class LinearLeastSquares:
    """Single linear layer under squared error: L = (1/2|B|) sum (w.x_i - y_i)^2.

    Its exact layer Hessian is (1/|B|) sum x_i x_i', which makes it the
    analytic reference for Hessian assembly.
    """

    def __init__(self, w):
        self.w = np.asarray(w, dtype=np.float64).copy()

    n_layers = 1

    def layer_param_count(self, layer: int) -> int:
        return self.w.size

    def get_layer_flat(self, layer: int) -> np.ndarray:
        return self.w.copy()

    def set_layer_flat(self, layer: int, flat) -> None:
        self.w = np.asarray(flat, dtype=np.float64).copy()

    def loss_and_accuracy(self, batch: Batch) -> tuple[float, float]:
        X = np.asarray(batch.inputs, dtype=np.float64)
        y = np.asarray(batch.labels, dtype=np.float64)
        r = X @ self.w - y
        return float(0.5 * np.mean(r * r)), 0.0

    def gradients(self, batch: Batch) -> list[np.ndarray]:
        X = np.asarray(batch.inputs, dtype=np.float64)
        y = np.asarray(batch.labels, dtype=np.float64)
        return [X.T @ (X @ self.w - y) / len(y)]
