"""Discriminator and generator losses for the supported GAN families and DANN.

All losses are minimized and use batch means in place of expectations.
Probability-valued outputs are clamped to ``[EPS, 1 - EPS]`` before taking
logs.  Each ``*_grad`` function returns derivatives of the batch loss with
respect to the raw network outputs, ready to feed into a backward pass.
"""

from __future__ import annotations

import enum
import math

import numpy as np

EPS = 1e-7
LOG4 = math.log(4.0)
LOG2 = math.log(2.0)


class GanVariant(str, enum.Enum):
    STANDARD = "standard"
    NSGAN = "nsgan"
    WGAN = "wgan"
    LSGAN = "lsgan"

    @property
    def probabilistic(self) -> bool:
        return self in (GanVariant.STANDARD, GanVariant.NSGAN)


_IDEAL_DISC = {
    GanVariant.STANDARD: LOG4,
    GanVariant.NSGAN: LOG4,
    GanVariant.WGAN: 0.0,
    GanVariant.LSGAN: 0.5,
}

# generator losses at D = 1/2 everywhere; WGAN is a zero-centred critic convention
_IDEAL_GEN = {
    GanVariant.STANDARD: -LOG2,
    GanVariant.NSGAN: LOG2,
    GanVariant.WGAN: 0.0,
    GanVariant.LSGAN: 0.25,
}


def ideal_disc_loss(variant) -> float:
    return _IDEAL_DISC[GanVariant(variant)]


def ideal_gen_loss(variant) -> float:
    return _IDEAL_GEN[GanVariant(variant)]


def _as_batch(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise ValueError(f"{name} is empty")
    return x


def _as_prob(x, name: str) -> np.ndarray:
    x = _as_batch(x, name)
    if np.any(np.isnan(x)) or np.any(x < 0) or np.any(x > 1):
        raise ValueError(f"{name} must hold probabilities in [0, 1]")
    return np.clip(x, EPS, 1 - EPS)


def disc_loss(variant, d_real, d_fake) -> float:
    variant = GanVariant(variant)
    if variant.probabilistic:
        pr, pf = _as_prob(d_real, "d_real"), _as_prob(d_fake, "d_fake")
        return float(-np.mean(np.log(pr)) - np.mean(np.log1p(-pf)))
    dr, df = _as_batch(d_real, "d_real"), _as_batch(d_fake, "d_fake")
    if variant is GanVariant.WGAN:
        return float(-np.mean(dr) + np.mean(df))
    return float(np.mean((dr - 1.0) ** 2) + np.mean(df**2))


def disc_loss_grad(variant, d_real, d_fake) -> tuple[np.ndarray, np.ndarray]:
    """Derivatives of :func:`disc_loss` w.r.t. each entry of ``d_real`` and ``d_fake``."""
    variant = GanVariant(variant)
    if variant.probabilistic:
        pr, pf = _as_prob(d_real, "d_real"), _as_prob(d_fake, "d_fake")
        return -1.0 / (pr * pr.size), 1.0 / ((1.0 - pf) * pf.size)
    dr, df = _as_batch(d_real, "d_real"), _as_batch(d_fake, "d_fake")
    if variant is GanVariant.WGAN:
        return np.full_like(dr, -1.0 / dr.size), np.full_like(df, 1.0 / df.size)
    return 2.0 * (dr - 1.0) / dr.size, 2.0 * df / df.size


def gen_loss(variant, d_fake) -> float:
    variant = GanVariant(variant)
    if variant is GanVariant.STANDARD:
        return float(np.mean(np.log1p(-_as_prob(d_fake, "d_fake"))))
    if variant is GanVariant.NSGAN:
        return float(-np.mean(np.log(_as_prob(d_fake, "d_fake"))))
    df = _as_batch(d_fake, "d_fake")
    if variant is GanVariant.WGAN:
        return float(-np.mean(df))
    return float(np.mean((df - 1.0) ** 2))


def gen_loss_grad(variant, d_fake) -> np.ndarray:
    variant = GanVariant(variant)
    if variant is GanVariant.STANDARD:
        pf = _as_prob(d_fake, "d_fake")
        return -1.0 / ((1.0 - pf) * pf.size)
    if variant is GanVariant.NSGAN:
        pf = _as_prob(d_fake, "d_fake")
        return -1.0 / (pf * pf.size)
    df = _as_batch(d_fake, "d_fake")
    if variant is GanVariant.WGAN:
        return np.full_like(df, -1.0 / df.size)
    return 2.0 * (df - 1.0) / df.size


def dann_disc_loss(d_source, d_target) -> float:
    """Domain-classification risk; the discriminator labels source as 1."""
    return disc_loss(GanVariant.NSGAN, d_source, d_target)


def dann_disc_loss_grad(d_source, d_target) -> tuple[np.ndarray, np.ndarray]:
    return disc_loss_grad(GanVariant.NSGAN, d_source, d_target)


def dann_feature_objective(label_loss: float, disc_loss: float, lam: float) -> float:
    """Objective minimized by the feature extractor and label predictor."""
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    return label_loss - lam * disc_loss


def binary_cross_entropy(p, y) -> float:
    p = _as_prob(p, "p")
    y = _as_batch(y, "y")
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def binary_cross_entropy_grad(p, y) -> np.ndarray:
    p = _as_prob(p, "p")
    y = _as_batch(y, "y")
    return (-(y / p) + (1.0 - y) / (1.0 - p)) / p.size
