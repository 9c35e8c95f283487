"""Gap-aware learning-rate scheduling for adversarial nets, with a desk-scale training harness."""

from .losses import GanVariant, ideal_disc_loss, ideal_gen_loss
from .scheduler import (
    DecaySchedule,
    GapScheduler,
    Interpolation,
    LossEstimator,
    SchedulerParams,
    decrease_multiplier,
    default_params,
    increase_multiplier,
)

__version__ = "0.1.0"
