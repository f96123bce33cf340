from __future__ import annotations

import logging
from typing import Protocol

import attrs
import numpy as np

import cddmpy.validators
from cddmpy.channels import ChannelRealization
from cddmpy.errors import DimensionError
from cddmpy.signals import RealSignal
from cddmpy.streams import RngLike, as_generator

from .schedule import NoiseSchedule

logger = logging.getLogger(__name__)


class NoisePredictor(Protocol):
    def predict(
        self, x_t: np.ndarray, h_r: np.ndarray, t: int | np.ndarray
    ) -> np.ndarray: ...


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class DiffusionState:
    x_t: np.ndarray = attrs.field(converter=lambda x: np.asarray(x, dtype=np.float64))
    t: int = attrs.field(converter=int, validator=attrs.validators.ge(0))

    @classmethod
    def initial(cls, x: RealSignal, ch: ChannelRealization) -> DiffusionState:
        return cls(x_t=make_x0(x, ch), t=0)

    def advance(
        self, s: NoiseSchedule, ch: ChannelRealization, rng: RngLike
    ) -> DiffusionState:
        return DiffusionState(
            x_t=forward_step(self.x_t, self.t + 1, s, ch, rng), t=self.t + 1
        )


def check_dims(x: np.ndarray, ch: ChannelRealization) -> None:
    if x.shape[-1] != ch.h_r.shape[-1]:
        raise DimensionError(
            f"Signal length {x.shape[-1]} does not match channel {ch.h_r.shape[-1]}."
        )


def make_x0(x: RealSignal, ch: ChannelRealization) -> RealSignal:
    x = np.asarray(x, dtype=np.float64)
    check_dims(x, ch)
    return ch.w_s * x


def forward_step(
    x_prev: RealSignal,
    t: int,
    s: NoiseSchedule,
    ch: ChannelRealization,
    rng: RngLike,
) -> RealSignal:
    x_prev = np.asarray(x_prev, dtype=np.float64)
    check_dims(x_prev, ch)
    alpha: float = float(s.alpha_at(t))
    eps: np.ndarray = as_generator(rng).standard_normal(x_prev.shape)
    return np.sqrt(alpha) * x_prev + np.sqrt(1.0 - alpha) * ch.w_n * eps


def forward_closed(
    x0: RealSignal,
    t: int | np.ndarray,
    s: NoiseSchedule,
    ch: ChannelRealization,
    eps: np.ndarray,
) -> RealSignal:
    """Jump straight to step `t`; `t` may hold one step per batch row."""
    x0 = np.asarray(x0, dtype=np.float64)
    check_dims(x0, ch)
    cddmpy.validators.validate_step(t, 1, s.num_steps)
    alpha_bar: np.ndarray = np.asarray(s.alpha_bar_at(t))[..., None]
    return np.sqrt(alpha_bar) * x0 + np.sqrt(1.0 - alpha_bar) * ch.w_n * eps


def estimate_x0(
    model: NoisePredictor,
    x_t: RealSignal,
    t: int,
    s: NoiseSchedule,
    ch: ChannelRealization,
) -> RealSignal:
    x_t = np.asarray(x_t, dtype=np.float64)
    check_dims(x_t, ch)
    alpha_bar: float = float(s.alpha_bar_at(t))
    eps: np.ndarray = model.predict(x_t, ch.h_r, t)
    return (x_t - np.sqrt(1.0 - alpha_bar) * ch.w_n * eps) / np.sqrt(alpha_bar)


def reverse_step(
    model: NoisePredictor,
    x_t: RealSignal,
    t: int,
    s: NoiseSchedule,
    ch: ChannelRealization,
) -> RealSignal:
    """Deterministic step `t -> t - 1` with zero posterior variance."""
    x_t = np.asarray(x_t, dtype=np.float64)
    check_dims(x_t, ch)
    cddmpy.validators.validate_step(t, 2, s.num_steps)
    alpha_bar: float = float(s.alpha_bar_at(t))
    alpha_bar_prev: float = float(s.alpha_bar_at(t - 1))

    eps: np.ndarray = model.predict(x_t, ch.h_r, t)
    noise: np.ndarray = ch.w_n * eps
    x0_hat: np.ndarray = (x_t - np.sqrt(1.0 - alpha_bar) * noise) / np.sqrt(alpha_bar)
    return np.sqrt(alpha_bar_prev) * x0_hat + np.sqrt(1.0 - alpha_bar_prev) * noise


def sample(
    model: NoisePredictor,
    y_r: RealSignal,
    ch: ChannelRealization,
    s: NoiseSchedule,
    m: int,
) -> RealSignal:
    """Denoise `y_r` by starting the reverse chain at step `m`."""
    cddmpy.validators.validate_step(m, 1, s.num_steps)
    x_t: np.ndarray = np.asarray(y_r, dtype=np.float64)
    for t in range(int(m), 1, -1):
        x_t = reverse_step(model, x_t, t, s, ch)
    return estimate_x0(model, x_t, 1, s, ch)
