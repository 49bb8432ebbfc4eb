"""Small deterministic feedforward network trained by mini-batch gradient descent.

Hidden layers use tanh, the output layer a logistic sigmoid so that every
prediction lands in [0, 1]. Training minimizes a masked mean-squared error:
target components whose mask bit is 0 contribute neither loss nor gradient.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BadArchitecture, DimensionMismatch, NoSamples

ACTIVATIONS = ("tanh", "sigmoid")


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _apply(name, z):
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        return _sigmoid(z)
    raise BadArchitecture(f"unknown activation {name!r}")


def _derivative(name, a):
    # expressed through the activation output a
    if name == "tanh":
        return 1.0 - a * a
    return a * (1.0 - a)


@dataclass
class Network:
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]  # weights[i] has shape (layer_sizes[i+1], layer_sizes[i])
    biases: list[np.ndarray]
    hidden_activation: str = "tanh"
    output_activation: str = "sigmoid"
    seed: int = 0

    def __post_init__(self):
        self.layer_sizes = tuple(int(n) for n in self.layer_sizes)
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise BadArchitecture("need one weight matrix and bias vector per layer transition")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            want = (self.layer_sizes[i + 1], self.layer_sizes[i])
            if w.shape != want or b.shape != (want[0],):
                raise BadArchitecture(f"layer {i}: weight {w.shape} / bias {b.shape}, expected {want}")
        if self.hidden_activation not in ACTIVATIONS or self.output_activation != "sigmoid":
            raise BadArchitecture("hidden activation must be tanh|sigmoid and output must be sigmoid")

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "Network":
        return Network(
            self.layer_sizes,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.hidden_activation,
            self.output_activation,
            self.seed,
        )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 4.0
    epochs: int = 4000
    batch_size: int = 32
    seed: int = 42

    def __post_init__(self):
        if not self.learning_rate >= 0:
            # 0 is allowed: it is the documented way to freeze weights
            raise ValueError("learning_rate must be >= 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")


def network_new(layer_sizes: Sequence[int], seed: int = 42, hidden_activation: str = "tanh") -> Network:
    """Fresh network with weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) and zero biases."""
    sizes = tuple(layer_sizes)
    if len(sizes) < 2:
        raise BadArchitecture("need at least an input and an output layer")
    if any(int(n) != n or n < 1 for n in sizes):
        raise BadArchitecture(f"layer sizes must be positive integers, got {sizes}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Network(sizes, weights, biases, hidden_activation, "sigmoid", seed)


def _activations(net: Network, x: np.ndarray) -> list[np.ndarray]:
    acts = [x]
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        name = net.output_activation if i == last else net.hidden_activation
        acts.append(_apply(name, acts[-1] @ w.T + b))
    return acts


def forward(net: Network, x) -> np.ndarray:
    """Output for one input vector, or row-wise for a 2-D batch."""
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1:] != (net.n_inputs,) or arr.ndim > 2:
        raise DimensionMismatch(f"input shape {arr.shape}, network expects {net.n_inputs} features")
    return _activations(net, arr)[-1]


def _as_arrays(net: Network, samples):
    if len(samples) == 0:
        raise NoSamples("no training samples")
    xs, ys, ms = [], [], []
    for x, y, m in samples:
        xs.append(np.asarray(x, dtype=float))
        ys.append(np.asarray(y, dtype=float))
        ms.append(np.ones(net.n_outputs) if m is None else np.asarray(m, dtype=float))
    X, Y, M = np.stack(xs), np.stack(ys), np.stack(ms)
    if X.shape[1] != net.n_inputs or Y.shape[1] != net.n_outputs or M.shape != Y.shape:
        raise DimensionMismatch(
            f"samples have inputs {X.shape[1:]}, targets {Y.shape[1:]}, masks {M.shape[1:]}; "
            f"network is {net.layer_sizes}"
        )
    return X, Y, M


def masked_loss(net: Network, X: np.ndarray, Y: np.ndarray, M: np.ndarray) -> float:
    """Masked MSE: sum of squared errors over unmasked entries / their count."""
    count = M.sum()
    if count == 0:
        return 0.0
    out = _activations(net, X)[-1]
    return float((M * (out - Y) ** 2).sum() / count)


def _gradients(net: Network, X, Y, M):
    acts = _activations(net, X)
    count = M.sum()
    if count == 0:
        return [np.zeros_like(w) for w in net.weights], [np.zeros_like(b) for b in net.biases]
    delta = (2.0 / count) * M * (acts[-1] - Y) * _derivative(net.output_activation, acts[-1])
    gw = [None] * len(net.weights)
    gb = [None] * len(net.biases)
    for i in range(len(net.weights) - 1, -1, -1):
        gw[i] = delta.T @ acts[i]
        gb[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i]) * _derivative(net.hidden_activation, acts[i])
    return gw, gb


def train(net: Network, samples, config: TrainConfig) -> list[float]:
    """Train ``net`` in place; returns the full-data masked loss after each epoch.

    ``samples`` is a sequence of ``(input, target, mask)``; a ``None`` mask
    means every target component counts. Batch order is reshuffled each
    epoch from ``config.seed``.
    """
    X, Y, M = _as_arrays(net, samples)
    rng = np.random.default_rng(config.seed)
    n = len(X)
    history = []
    for _ in range(config.epochs):
        order = rng.permutation(n)
        if config.learning_rate > 0:
            for start in range(0, n, config.batch_size):
                idx = order[start:start + config.batch_size]
                gw, gb = _gradients(net, X[idx], Y[idx], M[idx])
                for w, g in zip(net.weights, gw):
                    w -= config.learning_rate * g
                for b, g in zip(net.biases, gb):
                    b -= config.learning_rate * g
        history.append(masked_loss(net, X, Y, M))
    return history


def gradient_check(net: Network, sample, delta: float = 1e-4) -> float:
    """Max relative error between backprop and central differences over all parameters.

    Relative error is ``|a - n| / max(|a|, |n|, 1e-12)``. The network is
    restored exactly afterwards.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    X, Y, M = _as_arrays(net, [sample])
    gw, gb = _gradients(net, X, Y, M)
    worst = 0.0
    for params, grads in ((net.weights, gw), (net.biases, gb)):
        for p, g in zip(params, grads):
            flat, gflat = p.reshape(-1), g.reshape(-1)
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + delta
                up = masked_loss(net, X, Y, M)
                flat[j] = orig - delta
                down = masked_loss(net, X, Y, M)
                flat[j] = orig
                numeric = (up - down) / (2 * delta)
                denom = max(abs(gflat[j]), abs(numeric), 1e-12)
                worst = max(worst, abs(gflat[j] - numeric) / denom)
    return worst
