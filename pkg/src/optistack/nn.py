"""Dense feed-forward networks with hand-written backprop and Adam.

Everything is plain float64 numpy: two hidden rectifier layers are enough for
the value and actor networks here, and explicit matrices keep training
bitwise reproducible and cheap to checkpoint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import TrainingError, UsageError

HIDDEN_WIDTH = 256


def _apply_output(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "identity":
        return z
    if activation == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    raise UsageError(f"unknown output activation {activation!r}")


class Mlp:
    """Multilayer perceptron: rectifier hidden layers, configurable head."""

    def __init__(self, sizes, output_activation="identity", seed=0, rng=None):
        if len(sizes) < 2:
            raise UsageError("need at least input and output sizes")
        self.sizes = tuple(int(s) for s in sizes)
        self.output_activation = output_activation
        self.seed = seed
        self.step_count = 0
        rng = rng if rng is not None else np.random.default_rng(seed)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes, self.sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def forward(self, x: np.ndarray):
        """Returns (output, cache); accepts a single vector or a batch."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        a = x[None, :] if single else x
        if a.shape[1] != self.sizes[0]:
            raise UsageError(f"input width {a.shape[1]} != expected {self.sizes[0]}")
        inputs = [a]          # layer inputs (post-activation of the previous layer)
        pre_acts = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre_acts.append(z)
            if i < self.n_layers - 1:
                a = np.maximum(z, 0.0)
            else:
                a = _apply_output(z, self.output_activation)
            inputs.append(a)
        cache = {"inputs": inputs, "pre_acts": pre_acts, "single": single}
        return (a[0] if single else a), cache

    def __call__(self, x):
        return self.forward(x)[0]

    def _output_delta(self, cache, grad_output, squash_derivative_floor=0.0):
        grad = np.asarray(grad_output, dtype=float)
        if cache["single"]:
            grad = grad[None, :]
        if self.output_activation == "sigmoid":
            y = cache["inputs"][-1]
            factor = y * (1.0 - y)
            if squash_derivative_floor > 0.0:
                # Optional rail-escape: keeps the head trainable once an output
                # has saturated; off by default so gradients stay exact.
                factor = np.maximum(factor, squash_derivative_floor)
            return grad * factor
        return grad

    def backward(self, cache, grad_output, squash_derivative_floor=0.0):
        """Reverse-mode gradients of sum(grad_output * output).

        Returns ((dW list, db list), grad wrt the network input).
        """
        delta = self._output_delta(cache, grad_output, squash_derivative_floor)
        d_weights = [None] * self.n_layers
        d_biases = [None] * self.n_layers
        for i in range(self.n_layers - 1, -1, -1):
            a_prev = cache["inputs"][i]
            d_weights[i] = a_prev.T @ delta
            d_biases[i] = delta.sum(axis=0)
            delta = delta @ self.weights[i].T
            if i > 0:
                delta = delta * (cache["pre_acts"][i - 1] > 0)
        grad_input = delta[0] if cache["single"] else delta
        return (d_weights, d_biases), grad_input

    def input_gradient(self, cache, grad_output) -> np.ndarray:
        """Gradient wrt the input only; skips parameter-gradient work."""
        delta = self._output_delta(cache, grad_output)
        for i in range(self.n_layers - 1, -1, -1):
            delta = delta @ self.weights[i].T
            if i > 0:
                delta = delta * (cache["pre_acts"][i - 1] > 0)
        return delta[0] if cache["single"] else delta

    def parameters(self):
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b

    def copy(self) -> "Mlp":
        clone = Mlp.__new__(Mlp)
        clone.sizes = self.sizes
        clone.output_activation = self.output_activation
        clone.seed = self.seed
        clone.step_count = self.step_count
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone


def mlp_with_hidden(n_in, n_out, output_activation="identity", seed=0, rng=None,
                    hidden=(HIDDEN_WIDTH, HIDDEN_WIDTH)) -> Mlp:
    return Mlp((n_in, *hidden, n_out), output_activation=output_activation, seed=seed, rng=rng)


class AdamState:
    """Adaptive-moment optimizer state for one network."""

    def __init__(self, net: Mlp, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step = 0
        self.m = [np.zeros_like(p) for p in net.parameters()]
        self.v = [np.zeros_like(p) for p in net.parameters()]


def optimize_step(net: Mlp, grads, state: AdamState) -> None:
    """One Adam descent step in place; grads follow parameters() order."""
    d_weights, d_biases = grads
    flat = []
    for dw, db in zip(d_weights, d_biases):
        flat.append(dw)
        flat.append(db)
    for g in flat:
        if not np.all(np.isfinite(g)):
            raise TrainingError("non-finite gradient")
    state.step += 1
    net.step_count += 1
    b1c = 1.0 - state.beta1 ** state.step
    b2c = 1.0 - state.beta2 ** state.step
    for p, g, m, v in zip(net.parameters(), flat, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / b1c) / (np.sqrt(v / b2c) + state.eps)


def polyak_update(target: Mlp, source: Mlp, tau: float) -> None:
    """target <- tau * source + (1 - tau) * target, elementwise."""
    for pt, ps in zip(target.parameters(), source.parameters()):
        pt *= 1.0 - tau
        pt += tau * ps


def save_checkpoint(net: Mlp, directory: str | Path, name: str) -> None:
    """Manifest JSON plus a flat little-endian float64 parameter file."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "sizes": list(net.sizes),
        "hidden_activation": "relu",
        "output_activation": net.output_activation,
        "step_count": net.step_count,
        "seed": net.seed,
    }
    (directory / f"{name}.json").write_text(json.dumps(manifest, indent=2))
    flat = np.concatenate([p.ravel() for p in net.parameters()])
    (directory / f"{name}.bin").write_bytes(flat.astype("<f8").tobytes())


def load_checkpoint(directory: str | Path, name: str) -> Mlp:
    directory = Path(directory)
    manifest = json.loads((directory / f"{name}.json").read_text())
    net = Mlp(manifest["sizes"], output_activation=manifest["output_activation"],
              seed=manifest["seed"])
    net.step_count = manifest["step_count"]
    flat = np.frombuffer((directory / f"{name}.bin").read_bytes(), dtype="<f8")
    offset = 0
    for p in net.parameters():
        p[...] = flat[offset:offset + p.size].reshape(p.shape)
        offset += p.size
    if offset != flat.size:
        raise UsageError(f"checkpoint {name}: parameter count mismatch")
    return net
