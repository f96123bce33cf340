from .process import (
    DiffusionState,
    estimate_x0,
    forward_closed,
    forward_step,
    make_x0,
    reverse_step,
    sample,
)
from .schedule import (
    NoiseSchedule,
    kl_forward_vs_channel,
    linear_schedule,
    matched_alpha_bar,
    select_m,
)

__all__ = [
    "DiffusionState",
    "NoiseSchedule",
    "estimate_x0",
    "forward_closed",
    "forward_step",
    "kl_forward_vs_channel",
    "linear_schedule",
    "make_x0",
    "matched_alpha_bar",
    "reverse_step",
    "sample",
    "select_m",
]
