"""Synthetic 2-D data: a ring of Gaussian modes and a shifted two-blob domain pair."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RingSampler:
    k_modes: int = 8
    radius: float = 0.8
    sigma: float = 0.05

    def __post_init__(self):
        if self.k_modes < 1:
            raise ValueError("k_modes must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    @property
    def centers(self) -> np.ndarray:
        angles = 2 * np.pi * np.arange(self.k_modes) / self.k_modes
        return self.radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)

    def sample(self, n: int, rng: np.random.Generator, return_modes: bool = False):
        modes = rng.integers(0, self.k_modes, size=n)
        x = self.centers[modes] + self.sigma * rng.standard_normal((n, 2))
        return (x, modes) if return_modes else x


def sample_ring_gaussians(k_modes: int, radius: float, sigma: float, n: int, seed) -> np.ndarray:
    return RingSampler(k_modes, radius, sigma).sample(n, np.random.default_rng(seed))


def rotation(degrees: float) -> np.ndarray:
    t = math.radians(degrees)
    return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


@dataclass(frozen=True)
class DomainPair:
    """Labelled source blobs and a rotated, shifted copy as the target domain.

    Class ``c`` is an isotropic Gaussian at ``centers[c]``.  A target point is
    a source point mapped through ``x -> R(angle) x + shift``; target labels
    exist only for evaluation.
    """

    centers: tuple[tuple[float, float], tuple[float, float]] = ((-1.0, 0.0), (1.0, 0.0))
    sigma: float = 0.5
    angle: float = 35.0
    shift: tuple[float, float] = (0.7, 0.0)

    def sample_source(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        labels = rng.integers(0, 2, size=n)
        x = np.asarray(self.centers)[labels] + self.sigma * rng.standard_normal((n, 2))
        return x, labels.astype(np.float64)

    def sample_target(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        x, labels = self.sample_source(n, rng)
        return x @ rotation(self.angle).T + np.asarray(self.shift), labels


@dataclass
class DomainSamples:
    source_x: np.ndarray
    source_y: np.ndarray
    target_x: np.ndarray
    target_y: np.ndarray


def sample_dann_domains(n: int, seed, pair: DomainPair | None = None) -> DomainSamples:
    if n < 1:
        raise ValueError("n must be >= 1")
    pair = pair or DomainPair()
    rng = np.random.default_rng(seed)
    sx, sy = pair.sample_source(n, rng)
    tx, ty = pair.sample_target(n, rng)
    return DomainSamples(sx, sy, tx, ty)
