"""Supervised output layer: cosine activity per class and a delta-rule update."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

SIGN_CORRECTED = "corrected"
SIGN_STRICT = "strict"


@dataclass
class OutputLayer:
    weights: np.ndarray  # (n_classes, dim)
    gamma: float = 0.35

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "OutputLayer":
        return OutputLayer(self.weights.copy(), self.gamma)


def init_output(n_classes: int, dim: int, seed, gamma: float = 0.35) -> OutputLayer:
    """Uniform ``[0, 1)`` rows scaled to unit length."""
    if n_classes < 1 or dim < 1:
        raise ValueError("need at least one class and one input")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    w = rng.random((n_classes, dim))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return OutputLayer(w, gamma)


def _check(layer: OutputLayer, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != layer.dim:
        raise ValueError(f"input must have length {layer.dim}, got {x.shape}")
    return x


def class_activity(layer: OutputLayer, x) -> np.ndarray:
    """Cosine between ``x`` and every class weight vector."""
    x = _check(layer, x)
    nx = np.linalg.norm(x)
    if nx == 0:
        raise ValueError("zero input vector has no direction")
    nw = np.linalg.norm(layer.weights, axis=1)
    nw = np.where(nw == 0, np.inf, nw)
    return np.clip(layer.weights @ x / (nx * nw), -1.0, 1.0)


def predict(layer: OutputLayer, x) -> int:
    return int(np.argmax(class_activity(layer, x)))


def one_hot(label: int, n: int) -> np.ndarray:
    d = np.zeros(n)
    d[label] = 1.0
    return d


def train_step(layer: OutputLayer, x, target: np.ndarray, sign: str = SIGN_CORRECTED) -> None:
    """In-place update ``w_i += gamma * x * (d_i - y_i)``.

    ``sign="strict"`` applies ``(y_i - d_i)`` instead, which pushes outputs
    away from their targets.
    """
    y = class_activity(layer, x)
    err = target - y if sign == SIGN_CORRECTED else y - target
    layer.weights += layer.gamma * np.outer(err, np.asarray(x, dtype=float))


def accuracy(layer: OutputLayer, xs: np.ndarray, labels: Sequence[int]) -> float:
    if len(labels) == 0:
        return 0.0
    return float(np.mean([predict(layer, x) == y for x, y in zip(xs, labels)]))


def train_output(layer: OutputLayer, xs, labels: Sequence[int], epochs: int = 200,
                 patience: int | None = 20, sign: str = SIGN_CORRECTED,
                 seed=None) -> OutputLayer:
    """Train a copy of ``layer`` on ``(x, one-hot target)`` pairs.

    Stops once training accuracy reaches 1 or has not improved for
    ``patience`` epochs (``None`` disables early stopping). ``seed``
    shuffles presentation order; without it samples keep the given order.
    """
    if sign not in (SIGN_CORRECTED, SIGN_STRICT):
        raise ValueError(f"unknown sign convention {sign!r}")
    xs = np.asarray(xs, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if len(xs) == 0:
        raise ValueError("no training samples")
    if xs.ndim != 2 or xs.shape[1] != layer.dim:
        raise ValueError(f"samples must be (n, {layer.dim}), got {xs.shape}")
    if np.any(labels < 0) or np.any(labels >= layer.n_classes):
        raise ValueError("label out of range")
    layer = layer.copy()
    rng = None if seed is None else np.random.default_rng(seed)
    targets = np.eye(layer.n_classes)[labels]
    best_acc, stale = -1.0, 0
    for _ in range(epochs):
        order = range(len(xs)) if rng is None else rng.permutation(len(xs))
        for i in order:
            train_step(layer, xs[i], targets[i], sign)
        acc = accuracy(layer, xs, labels)
        if acc > best_acc:
            best_acc, stale = acc, 0
        else:
            stale += 1
        if acc == 1.0 or (patience is not None and stale >= patience):
            break
    return layer
