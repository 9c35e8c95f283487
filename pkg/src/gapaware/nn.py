"""Dense feed-forward nets with hand-written reverse-mode gradients.

Parameters are exposed as a flat, ordered list ``[W0, b0, W1, b1, ...]`` of
the live arrays (the "param bundle"); gradient bundles from :func:`backward`
line up with it index for index, so optimizers can update in place.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class Activation(str, enum.Enum):
    RELU = "relu"
    LEAKY_RELU = "leaky_relu"
    TANH = "tanh"
    SIGMOID = "sigmoid"
    IDENTITY = "identity"


def _sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class Layer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: Activation = Activation.IDENTITY
    slope: float = 0.2  # only used by leaky_relu

    def __post_init__(self):
        self.activation = Activation(self.activation)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ValueError("layer weights must be (out, in) with a matching (out,) bias")

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[0]

    def activate(self, z: np.ndarray) -> np.ndarray:
        act = self.activation
        if act is Activation.IDENTITY:
            return z
        if act is Activation.RELU:
            return np.maximum(z, 0.0)
        if act is Activation.LEAKY_RELU:
            if 0 <= self.slope <= 1:
                return np.maximum(z, self.slope * z)
            return np.where(z > 0, z, self.slope * z)
        if act is Activation.TANH:
            return np.tanh(z)
        return _sigmoid(z)

    def activation_grad(self, z: np.ndarray, a: np.ndarray) -> np.ndarray | None:
        act = self.activation
        if act is Activation.IDENTITY:
            return None
        if act is Activation.RELU:
            return (z > 0).astype(np.float64)
        if act is Activation.LEAKY_RELU:
            g = (z > 0).astype(np.float64)
            g *= 1.0 - self.slope
            g += self.slope
            return g
        if act is Activation.TANH:
            return 1.0 - a * a
        return a * (1.0 - a)


@dataclass
class DenseNet:
    layers: list[Layer]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("a net needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.fan_out != nxt.fan_in:
                raise ValueError(f"layer widths do not chain: {prev.fan_out} -> {nxt.fan_in}")

    @property
    def in_dim(self) -> int:
        return self.layers[0].fan_in

    @property
    def out_dim(self) -> int:
        return self.layers[-1].fan_out

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend((layer.weights, layer.bias))
        return out

    def num_params(self) -> int:
        return sum(p.size for p in self.params())

    def copy(self) -> "DenseNet":
        return DenseNet([
            Layer(l.weights.copy(), l.bias.copy(), l.activation, l.slope) for l in self.layers
        ])

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return forward(self, x)[0]

    def to_dict(self) -> dict:
        return {"layers": [
            {
                "weights": l.weights.tolist(),
                "bias": l.bias.tolist(),
                "activation": l.activation.value,
                "slope": l.slope,
            }
            for l in self.layers
        ]}

    @classmethod
    def from_dict(cls, d: dict) -> "DenseNet":
        return cls([Layer(**spec) for spec in d["layers"]])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "DenseNet":
        return cls.from_dict(json.loads(s))


@dataclass
class Cache:
    inputs: list[np.ndarray] = field(default_factory=list)
    pre: list[np.ndarray] = field(default_factory=list)
    post: list[np.ndarray] = field(default_factory=list)


def forward(net: DenseNet, batch: np.ndarray) -> tuple[np.ndarray, Cache]:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.in_dim:
        raise ValueError(f"expected batch of shape (n, {net.in_dim}), got {x.shape}")
    cache = Cache()
    for layer in net.layers:
        cache.inputs.append(x)
        z = x @ layer.weights.T + layer.bias
        x = layer.activate(z)
        cache.pre.append(z)
        cache.post.append(x)
    return x, cache


def backward(
    net: DenseNet, cache: Cache, output_gradient: np.ndarray
) -> tuple[list[np.ndarray], np.ndarray]:
    """Backpropagate ``dL/d(output)`` through ``net``.

    Returns the gradient bundle (aligned with ``net.params()``) and the
    gradient with respect to the batch that was fed to :func:`forward`, which
    lets callers chain nets (generator into discriminator, features into
    heads).
    """
    g = np.asarray(output_gradient, dtype=np.float64)
    if g.shape != cache.post[-1].shape:
        raise ValueError(f"output gradient shape {g.shape} != output shape {cache.post[-1].shape}")
    grads: list[np.ndarray] = []
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        local = layer.activation_grad(cache.pre[i], cache.post[i])
        dz = g if local is None else g * local
        grads.append(dz.sum(axis=0))
        grads.append(dz.T @ cache.inputs[i])
        g = dz @ layer.weights
    grads.reverse()
    return grads, g


def xavier_bound(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_net(
    sizes: Sequence[int],
    activations: Sequence[Activation | str],
    seed: int | np.random.Generator,
    slope: float = 0.2,
) -> DenseNet:
    """Xavier-uniform weights, zero biases; ``activations`` has one entry per layer."""
    if len(activations) != len(sizes) - 1:
        raise ValueError("need exactly one activation per layer")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out, act in zip(sizes[:-1], sizes[1:], activations):
        bound = xavier_bound(fan_in, fan_out)
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(Layer(w, np.zeros(fan_out), act, slope))
    return DenseNet(layers)


def mlp(
    in_dim: int,
    hidden: Sequence[int],
    out_dim: int,
    head: Activation | str,
    seed,
    hidden_activation: Activation | str = Activation.LEAKY_RELU,
) -> DenseNet:
    sizes = [in_dim, *hidden, out_dim]
    acts = [hidden_activation] * len(hidden) + [head]
    return init_net(sizes, acts, seed)


def finite_diff_gradient(
    net: DenseNet,
    loss_fn: Callable[[np.ndarray], float],
    batch: np.ndarray,
    h: float = 1e-5,
) -> list[np.ndarray]:
    """Central differences of ``loss_fn(net(batch))`` for every parameter entry."""
    if h <= 0:
        raise ValueError("h must be positive")
    grads = []
    for p in net.params():
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            up = loss_fn(forward(net, batch)[0])
            flat[j] = orig - h
            down = loss_fn(forward(net, batch)[0])
            flat[j] = orig
            gflat[j] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def flatten(bundle: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate([np.ravel(p) for p in bundle])
