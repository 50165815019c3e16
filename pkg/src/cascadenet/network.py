"""Fixed-width tanh MLPs with a scalar linear output.

Parameters live in one flat float64 vector, layer by layer: the weight
matrix of shape (fan_in, fan_out) in row-major order, then that layer's
fan_out biases. The last layer is the single linear output unit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden_layers: int = 0
    hidden_width: int = 2

    def __post_init__(self):
        if self.input_dim < 1:
            raise ParameterError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.hidden_layers < 0:
            raise ParameterError(f"hidden_layers must be >= 0, got {self.hidden_layers}")
        if self.hidden_width < 1:
            raise ParameterError(f"hidden_width must be >= 1, got {self.hidden_width}")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.input_dim] + [self.hidden_width] * self.hidden_layers + [1]

    @property
    def n_params(self) -> int:
        sizes = self.layer_sizes
        return sum((a + 1) * b for a, b in zip(sizes[:-1], sizes[1:]))


def unpack(spec: MlpSpec, flat) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split a flat parameter vector into per-layer ``(W, b)`` views."""
    flat = np.asarray(flat, dtype=np.float64)
    if flat.shape != (spec.n_params,):
        raise ShapeError(f"expected {spec.n_params} parameters, got shape {flat.shape}")
    layers = []
    pos = 0
    sizes = spec.layer_sizes
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = flat[pos : pos + fan_in * fan_out].reshape(fan_in, fan_out)
        pos += fan_in * fan_out
        b = flat[pos : pos + fan_out]
        pos += fan_out
        layers.append((w, b))
    return layers


def init_params(spec: MlpSpec, seed: int) -> np.ndarray:
    """Weights uniform in +-1/sqrt(fan_in), biases zero."""
    rng = np.random.default_rng(seed)
    chunks = []
    sizes = spec.layer_sizes
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        chunks.append(rng.uniform(-bound, bound, size=fan_in * fan_out))
        chunks.append(np.zeros(fan_out))
    return np.concatenate(chunks)


def _inputs(spec, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != spec.input_dim or x.ndim not in (1, 2):
        raise ShapeError(f"input shape {x.shape} does not match input_dim={spec.input_dim}")
    return x


def forward(spec: MlpSpec, params, x):
    """Network output for one sample (returns float) or a batch (returns 1-D array)."""
    x = _inputs(spec, x)
    single = x.ndim == 1
    a = x[None, :] if single else x
    layers = unpack(spec, params)
    for w, b in layers[:-1]:
        a = np.tanh(a @ w + b)
    w, b = layers[-1]
    out = (a @ w + b)[:, 0]
    return float(out[0]) if single else out


def sse_and_gradient(spec: MlpSpec, params, x, t) -> tuple[float, np.ndarray]:
    """Sum of squared errors over the batch and its gradient by backpropagation."""
    x = _inputs(spec, x)
    if x.ndim == 1:
        x = x[None, :]
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    if t.shape[0] != x.shape[0]:
        raise ShapeError(f"{x.shape[0]} samples but {t.shape[0]} targets")

    layers = unpack(spec, params)
    acts = [x]
    for w, b in layers[:-1]:
        acts.append(np.tanh(acts[-1] @ w + b))
    w_out, b_out = layers[-1]
    err = (acts[-1] @ w_out + b_out)[:, 0] - t
    sse = float(err @ err)

    grads = []
    delta = 2.0 * err[:, None]
    for i in range(len(layers) - 1, -1, -1):
        w, _ = layers[i]
        a_in = acts[i]
        grads.append(delta.sum(axis=0))
        grads.append((a_in.T @ delta).ravel())
        if i > 0:
            delta = (delta @ w.T) * (1.0 - a_in * a_in)
    return sse, np.concatenate(grads[::-1])
