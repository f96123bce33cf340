from __future__ import annotations

import numpy as np

import cddmpy.signals
import cddmpy.validators
from cddmpy.signals import ComplexSignal, RealSignal
from cddmpy.streams import RngLike, as_generator

from .base import ChannelModel, ChannelRealization, lookup_channel_model


def sample_channel(
    mode: str | ChannelModel,
    k: int,
    sigma2: float,
    rng: RngLike,
    batch_shape: tuple[int, ...] = (),
) -> ChannelRealization:
    return lookup_channel_model(mode).realize(k, sigma2, rng, batch_shape)


def transmit(
    x_c: ComplexSignal, ch: ChannelRealization, rng: RngLike
) -> ComplexSignal:
    x_c = np.asarray(x_c, dtype=np.complex128)
    cddmpy.validators.validate_matching_length("x_c", x_c.shape[-1], ch.k)
    gen: np.random.Generator = as_generator(rng)

    shape: tuple[int, ...] = np.broadcast_shapes(x_c.shape, ch.h_c_abs.shape)
    std_dev: float = float(np.sqrt(ch.sigma2))
    noise: np.ndarray = std_dev * gen.standard_normal(shape)
    noise = noise + 1j * std_dev * gen.standard_normal(shape)
    return ch.h_c_abs * x_c + noise


def mmse_equalize(y_c: ComplexSignal, ch: ChannelRealization) -> ComplexSignal:
    y_c = np.asarray(y_c, dtype=np.complex128)
    cddmpy.validators.validate_matching_length("y_c", y_c.shape[-1], ch.k)
    return lookup_channel_model(ch.mode).equalize(y_c, ch)


def normalize_reshape(y_eq: ComplexSignal, sigma2: float) -> RealSignal:
    cddmpy.validators.validate_non_negative("sigma2", sigma2)
    return cddmpy.signals.real_from_complex(y_eq) / np.sqrt(1.0 + sigma2)


def receive(x: RealSignal, ch: ChannelRealization, rng: RngLike) -> RealSignal:
    """Full receive chain: transmit, equalize, then normalize-reshape."""
    y_c: ComplexSignal = transmit(cddmpy.signals.complex_from_real(x), ch, rng)
    return normalize_reshape(mmse_equalize(y_c, ch), ch.sigma2)


def receive_reparam(
    x: RealSignal,
    ch: ChannelRealization,
    rng: RngLike,
    *,
    return_noise: bool = False,
) -> RealSignal | tuple[RealSignal, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    cddmpy.validators.validate_matching_length("x", x.shape[-1], 2 * ch.k)
    gen: np.random.Generator = as_generator(rng)

    shape: tuple[int, ...] = np.broadcast_shapes(x.shape, ch.w_s.shape)
    eps: np.ndarray = gen.standard_normal(shape)
    y_r: np.ndarray = ch.normalization * ch.w_s * x + ch.noise_scale * ch.w_n * eps
    if return_noise:
        return y_r, eps
    return y_r


def prop_moments(
    x: RealSignal, ch: ChannelRealization
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form mean and variance of y_r given x and the channel state."""
    mean: np.ndarray = ch.normalization * ch.w_s * np.asarray(x, dtype=np.float64)
    variance: np.ndarray = ch.noise_scale**2 * np.square(ch.w_n)
    return mean, np.broadcast_to(variance, mean.shape)
