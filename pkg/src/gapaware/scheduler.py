"""Gap-aware learning-rate multipliers for the adversary in a two-player game.

The scheduler tracks a moving-average estimate of the adversary's training
loss and compares it to the loss an ideal adversarial net would reach.  When
the estimate sits above the ideal value the adversary's learning rate is
scaled up (towards ``f_max``); below it, the rate is scaled down (towards
``h_min``).  The multiplier is recomputed from the current gap at every step,
it never compounds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

from .losses import GanVariant, ideal_disc_loss

__all__ = [
    "Interpolation",
    "SchedulerParams",
    "LossEstimator",
    "GapScheduler",
    "DecaySchedule",
    "NonFiniteLossError",
    "increase_multiplier",
    "decrease_multiplier",
    "default_params",
    "dann_params",
]


class NonFiniteLossError(FloatingPointError):
    """A training loss became NaN or infinite; the run has diverged."""


class Interpolation(str, enum.Enum):
    EXPONENTIAL = "exponential"
    LINEAR = "linear"


@dataclass(frozen=True)
class SchedulerParams:
    ideal_loss: float
    f_max: float = 2.0
    x_max: float = 0.1
    h_min: float = 0.1
    x_min: float = 0.1
    interpolation: Interpolation = Interpolation.EXPONENTIAL
    ema_decay: float = 0.95

    def __post_init__(self):
        object.__setattr__(self, "interpolation", Interpolation(self.interpolation))
        for name in ("ideal_loss", "f_max", "x_max", "h_min", "x_min", "ema_decay"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.f_max < 1:
            raise ValueError(f"f_max must be >= 1, got {self.f_max}")
        if not 0 < self.h_min <= 1:
            raise ValueError(f"h_min must lie in (0, 1], got {self.h_min}")
        if self.x_max <= 0 or self.x_min <= 0:
            raise ValueError("x_max and x_min must be positive")
        if not 0 <= self.ema_decay < 1:
            raise ValueError(f"ema_decay must lie in [0, 1), got {self.ema_decay}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["interpolation"] = self.interpolation.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SchedulerParams":
        return cls(**d)


def _check_gap(x: float) -> None:
    if not x >= 0:
        raise ValueError(f"gap must be nonnegative, got {x}")


def increase_multiplier(x: float, params: SchedulerParams) -> float:
    """Multiplier in ``[1, f_max]`` for a discriminator loss ``x`` above ideal."""
    _check_gap(x)
    if x >= params.x_max:
        return params.f_max
    ratio = x / params.x_max
    if params.interpolation is Interpolation.LINEAR:
        return min(1.0 + (params.f_max - 1.0) * ratio, params.f_max)
    return min(math.exp(ratio * math.log(params.f_max)), params.f_max)


def decrease_multiplier(x: float, params: SchedulerParams) -> float:
    """Multiplier in ``[h_min, 1]`` for a discriminator loss ``x`` below ideal."""
    _check_gap(x)
    if x >= params.x_min:
        return params.h_min
    ratio = x / params.x_min
    if params.interpolation is Interpolation.LINEAR:
        return max(1.0 - (1.0 - params.h_min) * ratio, params.h_min)
    return max(math.exp(ratio * math.log(params.h_min)), params.h_min)


@dataclass
class LossEstimator:
    """Exponential moving average of minibatch losses."""

    estimate: float
    decay: float = 0.95

    def update(self, batch_loss: float) -> float:
        if not math.isfinite(batch_loss):
            raise NonFiniteLossError(f"non-finite batch loss {batch_loss!r}: training diverged")
        # lerp form of decay*est + (1-decay)*loss; keeps est exactly fixed when loss == est
        self.estimate += (1.0 - self.decay) * (batch_loss - self.estimate)
        return self.estimate


@dataclass
class GapScheduler:
    params: SchedulerParams
    estimator: LossEstimator = field(init=False)
    last_multiplier: float = field(init=False, default=1.0)

    def __post_init__(self):
        self.estimator = LossEstimator(self.params.ideal_loss, self.params.ema_decay)

    @property
    def estimate(self) -> float:
        return self.estimator.estimate

    def multiplier_for(self, estimate: float) -> float:
        """Apply the branch rule to a loss estimate without touching state."""
        v_star = self.params.ideal_loss
        if estimate >= v_star:
            return increase_multiplier(estimate - v_star, self.params)
        return decrease_multiplier(v_star - estimate, self.params)

    def observe(self, batch_loss: float) -> float:
        """Fold in one batch loss and return the adversary's rate multiplier."""
        estimate = self.estimator.update(batch_loss)
        self.last_multiplier = self.multiplier_for(estimate)
        return self.last_multiplier

    def reset(self, value: float) -> None:
        """Overwrite the running estimate, e.g. with a full-dataset loss."""
        if not math.isfinite(value):
            raise ValueError(f"cannot reset estimator to non-finite value {value!r}")
        self.estimator.estimate = float(value)


@dataclass(frozen=True)
class DecaySchedule:
    """Loss-agnostic baseline: the rate at step ``s`` is scaled by ``rho ** (s / T)``."""

    rho: float
    total_steps: int

    def __post_init__(self):
        if not 0 < self.rho <= 1:
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")

    def multiplier(self, step: int) -> float:
        if not 0 <= step <= self.total_steps:
            raise ValueError(f"step {step} outside [0, {self.total_steps}]")
        if step == self.total_steps:
            return self.rho
        return self.rho ** (step / self.total_steps)


def default_params(variant, ema_decay: float = 0.95) -> SchedulerParams:
    """Recommended scheduler settings for a GAN variant.

    ``x_min = x_max = 0.1 * V*`` except for WGAN, whose ideal loss is zero and
    which uses ``0.1`` directly.
    """
    variant = GanVariant(variant)
    v_star = ideal_disc_loss(variant)
    scale = 0.1 if variant is GanVariant.WGAN else 0.1 * v_star
    return SchedulerParams(
        ideal_loss=v_star, f_max=2.0, x_max=scale, h_min=0.1, x_min=scale, ema_decay=ema_decay
    )


def dann_params(v_star: float, ema_decay: float = 0.95) -> SchedulerParams:
    """GAN defaults re-targeted at a tunable DANN ideal loss ``v_star``."""
    return SchedulerParams(
        ideal_loss=v_star, f_max=2.0, x_max=0.1 * v_star, h_min=0.1, x_min=0.1 * v_star,
        ema_decay=ema_decay,
    )
