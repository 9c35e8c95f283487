"""SGD and Adam with a per-step learning-rate multiplier, plus weight clipping.

The multiplier scales only the effective step size of the current update.
Adam's moment estimates consume raw gradients, so two runs that differ only
in their multiplier sequences carry identical moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .scheduler import NonFiniteLossError


class DivergenceError(NonFiniteLossError):
    """Gradients became NaN or infinite."""


def _check(grads: Sequence[np.ndarray], params: Sequence[np.ndarray], multiplier: float) -> None:
    if len(grads) != len(params):
        raise ValueError(f"{len(grads)} gradients for {len(params)} parameters")
    if not multiplier > 0 or not math.isfinite(multiplier):
        raise ValueError(f"multiplier must be positive and finite, got {multiplier}")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise DivergenceError("non-finite gradient")


@dataclass
class Sgd:
    base_lr: float

    def __post_init__(self):
        if not (self.base_lr >= 0 and math.isfinite(self.base_lr)):
            raise ValueError(f"base_lr must be finite and nonnegative, got {self.base_lr}")

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray], multiplier: float = 1.0):
        _check(grads, params, multiplier)
        lr = self.base_lr * multiplier
        for p, g in zip(params, grads):
            p -= lr * g


@dataclass
class Adam:
    base_lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    m: list[np.ndarray] | None = field(default=None, repr=False)
    v: list[np.ndarray] | None = field(default=None, repr=False)
    timestep: int = 0

    def __post_init__(self):
        if not (self.base_lr >= 0 and math.isfinite(self.base_lr)):
            raise ValueError(f"base_lr must be finite and nonnegative, got {self.base_lr}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray], multiplier: float = 1.0):
        _check(grads, params, multiplier)
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.timestep += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1**self.timestep
        bc2 = 1.0 - b2**self.timestep
        lr = self.base_lr * multiplier
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.epsilon)


def clip_weights(params: Sequence[np.ndarray], c: float) -> None:
    """Clamp every parameter entry into ``[-c, c]`` in place."""
    if not c > 0:
        raise ValueError(f"clip bound must be positive, got {c}")
    for p in params:
        np.clip(p, -c, c, out=p)


def make_optimizer(kind: str, lr: float, beta1: float = 0.5):
    kind = kind.lower()
    if kind == "sgd":
        return Sgd(lr)
    if kind == "adam":
        return Adam(lr, beta1=beta1)
    raise ValueError(f"unknown optimizer {kind!r}")
