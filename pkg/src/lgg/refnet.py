"""A small feedforward classifier with layer taps, in plain numpy.

The network is dense layers with rectifier activations and a softmax
head, trained by mini-batch gradient descent with momentum on the
cross-entropy loss. Weights are float64 and every random draw (init,
epoch shuffles, label shuffling, blob sampling) comes from one seeded
SplitMix64 stream, so training is bit-reproducible on any machine and
thread count (each model trains single-threaded).

Taps: ``forward_with_taps`` returns the post-activation matrices of up
to the last three hidden layers keyed by depth_from_end (1 = the hidden
layer feeding the classifier head). The softmax/logits layer is never
tapped; its geometry collapses onto the training loss rather than the
latent structure the graphs are meant to probe.

Weight convention: layer l maps activations by ``A @ W + b`` with W of
shape (fan_in, fan_out); the JSON model file stores W row-major under
"w" and the bias vector under "b".
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .rng import SplitMix64, mix_seed
from .validation import check_embeddings, check_hard_labels


@dataclass
class RefNet:
    """Parameters of one network: dims [D0, h1, ..., hL, C] and per-layer
    weights/biases. Hidden layers are rectified; the last layer is linear
    into softmax."""

    dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.dims) < 2:
            raise ValueError(f"need at least input and output dims, got {self.dims}")
        if len(self.weights) != len(self.dims) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("one weight and bias per layer transition required")
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (self.dims[l], self.dims[l + 1]) or b.shape != (self.dims[l + 1],):
                raise ValueError(
                    f"layer {l} shapes {W.shape}/{b.shape} do not match dims {self.dims}"
                )
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {l} has non-finite parameters")

    @property
    def n_hidden(self) -> int:
        return len(self.dims) - 2

    def copy(self) -> "RefNet":
        return RefNet(
            dims=self.dims,
            weights=[W.copy() for W in self.weights],
            biases=[b.copy() for b in self.biases],
        )


def init_net(dims, rng: SplitMix64) -> RefNet:
    """Uniform(-s, s) weights with s = sqrt(6 / (fan_in + fan_out)), zero biases."""
    dims = tuple(int(d) for d in dims)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        if fan_in < 1 or fan_out < 1:
            raise ValueError(f"layer dims must be positive, got {dims}")
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        u = rng.floats(fan_in * fan_out).reshape(fan_in, fan_out)
        weights.append((2.0 * u - 1.0) * limit)
        biases.append(np.zeros(fan_out))
    return RefNet(dims=dims, weights=weights, biases=biases)


def _softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def _forward_all(net: RefNet, X: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """All hidden post-activations plus the softmax output."""
    A = X
    hidden = []
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        A = np.maximum(A @ W + b, 0.0)
        hidden.append(A)
    logits = A @ net.weights[-1] + net.biases[-1]
    return hidden, _softmax(logits)


def forward_with_taps(net: RefNet, X) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    """Softmax probabilities plus hidden taps keyed by depth_from_end.

    Depth 1 is the last hidden layer; at most three depths are returned.
    """
    X = check_embeddings(X)
    if X.shape[1] != net.dims[0]:
        raise ValueError(
            f"input has {X.shape[1]} features but the net expects {net.dims[0]}"
        )
    hidden, probs = _forward_all(net, X)
    taps = {
        depth: hidden[-depth]
        for depth in range(1, min(3, len(hidden)) + 1)
    }
    return probs, taps


def predict_proba(net: RefNet, X) -> np.ndarray:
    probs, _ = forward_with_taps(net, X)
    return probs


def accuracy(net: RefNet, X, y) -> float:
    y = check_hard_labels(y, net.dims[-1])
    probs = predict_proba(net, X)
    return float(np.mean(probs.argmax(axis=1) == y))


def generalization_gap(net: RefNet, X_train, y_train, X_test, y_test) -> float:
    """Train accuracy minus test accuracy; in [-1, 1]."""
    return accuracy(net, X_train, y_train) - accuracy(net, X_test, y_test)


# ---------------------------------------------------------------------------
# Loss, gradients, training
# ---------------------------------------------------------------------------

def cross_entropy(probs: np.ndarray, Y: np.ndarray) -> float:
    """Mean cross-entropy against a row-stochastic target matrix."""
    p = np.clip(probs, 1e-300, None)
    return float(-np.mean(np.sum(Y * np.log(p), axis=1)))


def loss_and_grads(
    net: RefNet, X: np.ndarray, Y: np.ndarray
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Cross-entropy and its gradient for every weight and bias."""
    n = X.shape[0]
    acts = [X]
    pre = []
    A = X
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        Z = A @ W + b
        pre.append(Z)
        A = np.maximum(Z, 0.0)
        acts.append(A)
    logits = A @ net.weights[-1] + net.biases[-1]
    probs = _softmax(logits)
    loss = cross_entropy(probs, Y)

    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.biases)
    delta = (probs - Y) / n
    for l in range(len(net.weights) - 1, -1, -1):
        grads_w[l] = acts[l].T @ delta
        grads_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ net.weights[l].T) * (pre[l - 1] > 0.0)
    return loss, grads_w, grads_b


def train_net(
    net: RefNet,
    X,
    y,
    epochs: int,
    batch_size: int,
    learning_rate: float,
    momentum: float,
    rng: SplitMix64,
) -> list[float]:
    """Train in place; returns per-epoch train accuracy.

    Each epoch visits every sample once in an order drawn from ``rng``;
    the last batch may be short. Velocity update: v = momentum*v - lr*g,
    then parameter += v.
    """
    X = check_embeddings(X)
    y = check_hard_labels(y, net.dims[-1])
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{X.shape[0]} inputs vs {y.shape[0]} labels")
    if X.shape[1] != net.dims[0]:
        raise ValueError(
            f"input has {X.shape[1]} features but the net expects {net.dims[0]}"
        )
    if epochs < 0:
        raise ValueError(f"epochs must be >= 0, got {epochs}")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    if learning_rate <= 0:
        raise ValueError(f"learning_rate must be positive, got {learning_rate}")
    if not 0 <= momentum < 1:
        raise ValueError(f"momentum must lie in [0, 1), got {momentum}")
    Y = np.zeros((y.shape[0], net.dims[-1]))
    Y[np.arange(y.shape[0]), y] = 1.0
    vel_w = [np.zeros_like(W) for W in net.weights]
    vel_b = [np.zeros_like(b) for b in net.biases]
    history = []
    for _ in range(epochs):
        order = rng.permutation(X.shape[0])
        for start in range(0, X.shape[0], batch_size):
            batch = order[start:start + batch_size]
            _, gw, gb = loss_and_grads(net, X[batch], Y[batch])
            for l in range(len(net.weights)):
                vel_w[l] = momentum * vel_w[l] - learning_rate * gw[l]
                vel_b[l] = momentum * vel_b[l] - learning_rate * gb[l]
                net.weights[l] += vel_w[l]
                net.biases[l] += vel_b[l]
        history.append(accuracy(net, X, y))
    return history


# ---------------------------------------------------------------------------
# Model file
# ---------------------------------------------------------------------------

def save_model(net: RefNet, path) -> None:
    doc = {
        "dims": list(net.dims),
        "layers": [
            {"w": W.tolist(), "b": b.tolist()}
            for W, b in zip(net.weights, net.biases)
        ],
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_model(path) -> RefNet:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        dims = tuple(int(d) for d in doc["dims"])
        weights = [np.asarray(layer["w"], dtype=np.float64) for layer in doc["layers"]]
        biases = [np.asarray(layer["b"], dtype=np.float64) for layer in doc["layers"]]
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: not a valid model file ({exc})") from exc
    return RefNet(dims=dims, weights=weights, biases=biases)


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

def gaussian_blobs(
    n_samples: int,
    num_classes: int,
    dim: int,
    separation: float = 4.0,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Class-conditional unit-variance Gaussians, one blob per class.

    Class means sit at ``separation`` times a random unit direction;
    class counts are balanced (labels cycle 0..C-1). Returns (X, y).
    """
    if n_samples < num_classes or num_classes < 2 or dim < 1:
        raise ValueError(
            f"bad blob shape: n={n_samples}, classes={num_classes}, dim={dim}"
        )
    rng = SplitMix64(seed)
    means = np.empty((num_classes, dim))
    for c in range(num_classes):
        v = rng.normals(dim)
        means[c] = separation * v / np.linalg.norm(v)
    y = np.arange(n_samples, dtype=np.int64) % num_classes
    X = means[y] + rng.normals(n_samples * dim).reshape(n_samples, dim)
    return X, y


def blob_task(
    n_train: int,
    n_test: int,
    num_classes: int,
    dim: int,
    separation: float = 4.0,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Disjoint train/test sets drawn from one set of class means.

    Labels cycle through the classes, so both splits are class-balanced
    whenever their sizes divide by num_classes. Returns
    (X_train, y_train, X_test, y_test).
    """
    X, y = gaussian_blobs(
        n_train + n_test, num_classes, dim, separation=separation, seed=seed
    )
    return X[:n_train], y[:n_train], X[n_train:], y[n_train:]


def shuffle_labels(y, fraction: float, seed: int = 0) -> np.ndarray:
    """Permute the labels of a random ``fraction`` of rows among themselves.

    fraction 0 returns a copy; fraction 1 permutes every label. Class
    marginals are preserved exactly.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    y = np.asarray(y, dtype=np.int64).copy()
    k = int(round(fraction * y.shape[0]))
    if k < 2:
        return y
    rng = SplitMix64(seed)
    chosen = rng.choose(np.arange(y.shape[0], dtype=np.int64), k)
    y[chosen] = y[chosen[rng.permutation(k)]]
    return y


# ---------------------------------------------------------------------------
# Estimator wrapper
# ---------------------------------------------------------------------------

class RefNetClassifier(BaseEstimator, ClassifierMixin):
    """Rectifier MLP classifier exposing the hidden-layer taps.

    ``shuffle_fraction`` > 0 shuffles that fraction of the training
    labels before fitting (for building deliberately memorizing models).
    """

    def __init__(
        self,
        hidden_layer_sizes: tuple[int, ...] = (64, 64, 64),
        epochs: int = 50,
        batch_size: int = 32,
        learning_rate: float = 0.05,
        momentum: float = 0.9,
        seed: int = 0,
        shuffle_fraction: float = 0.0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.seed = seed
        self.shuffle_fraction = shuffle_fraction

    def fit(self, X, y):
        X = check_embeddings(X)
        y = np.asarray(y, dtype=np.int64).ravel()
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"{X.shape[0]} inputs vs {y.shape[0]} labels")
        n_classes = int(y.max()) + 1 if y.size else 0
        if n_classes < 2:
            raise ValueError("need at least 2 classes")
        y = check_hard_labels(y, n_classes)
        if self.shuffle_fraction:
            y = shuffle_labels(
                y, self.shuffle_fraction, seed=mix_seed(self.seed, 1)
            )
        dims = (X.shape[1], *self.hidden_layer_sizes, n_classes)
        rng = SplitMix64(self.seed)
        self.net_ = init_net(dims, rng)
        self.history_ = train_net(
            self.net_, X, y,
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            rng=rng,
        )
        self.classes_ = np.arange(n_classes)
        self.n_features_in_ = X.shape[1]
        self.train_labels_ = y
        return self

    def predict_proba(self, X) -> np.ndarray:
        return predict_proba(self.net_, X)

    def predict(self, X) -> np.ndarray:
        return self.classes_[self.predict_proba(X).argmax(axis=1)]

    def tap_embeddings(self, X) -> dict[int, np.ndarray]:
        """Hidden post-activations keyed by depth_from_end (1 = last)."""
        _, taps = forward_with_taps(self.net_, X)
        return taps
