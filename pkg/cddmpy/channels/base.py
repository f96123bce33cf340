from __future__ import annotations

import inspect
from abc import ABC, abstractmethod
from typing import Any, ClassVar

import attrs
import numpy as np

import cddmpy.conversion
import cddmpy.signals
import cddmpy.validators
from cddmpy.errors import DomainError
from cddmpy.streams import RngLike, as_generator

MODE: str = "channel"

REGISTRY: dict[str, type[ChannelModel]] = {}


def snr_db_to_sigma2(snr_db: float | np.ndarray) -> float | np.ndarray:
    """Per-real-dimension noise variance for SNR_dB = 10 log10(1 / (2 sigma^2))."""
    return 0.5 * np.power(10.0, -np.asarray(snr_db, dtype=np.float64) / 10.0)


def sigma2_to_snr_db(sigma2: float | np.ndarray) -> float | np.ndarray:
    with np.errstate(divide="ignore"):
        return -10.0 * np.log10(2.0 * np.asarray(sigma2, dtype=np.float64))


def lookup_channel_model(mode: str | ChannelModel) -> ChannelModel:
    if isinstance(mode, ChannelModel):
        return mode
    key: str = cddmpy.conversion.to_registry_key(mode)
    if key not in REGISTRY:
        raise DomainError(f"Unknown channel mode `{mode}`; known: {sorted(REGISTRY)}.")
    return REGISTRY[key]()


def compute_stacked_gains(ch: ChannelRealization) -> np.ndarray:
    return cddmpy.signals.stack_halves(ch.h_c_abs)


def compute_signal_weights(ch: ChannelRealization) -> np.ndarray:
    return lookup_channel_model(ch.mode).signal_weights(ch.h_r, ch.sigma2)


def compute_noise_weights(ch: ChannelRealization) -> np.ndarray:
    return lookup_channel_model(ch.mode).noise_weights(ch.h_r, ch.sigma2)


def convert_gains(gains: Any) -> np.ndarray:
    gains = np.array(gains, dtype=np.float64)
    gains.setflags(write=False)
    return gains


def validate_gains(_, __, gains: np.ndarray) -> None:
    if gains.ndim == 0 or gains.shape[-1] < 1:
        raise DomainError("`h_c_abs` needs a trailing axis of length k >= 1.")
    if np.any(gains < 0.0) or not np.all(np.isfinite(gains)):
        raise DomainError("`h_c_abs` must be finite and non-negative.")


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class ChannelRealization:
    mode: str = attrs.field(converter=cddmpy.conversion.to_registry_key)
    h_c_abs: np.ndarray = attrs.field(converter=convert_gains, validator=validate_gains)
    sigma2: float = attrs.field(
        converter=float,
        validator=lambda _, __, value: cddmpy.validators.validate_non_negative(
            "sigma2", value
        ),
    )

    h_r: np.ndarray = attrs.field(
        default=attrs.Factory(compute_stacked_gains, takes_self=True),
        init=False,
        repr=False,
    )
    w_s: np.ndarray = attrs.field(
        default=attrs.Factory(compute_signal_weights, takes_self=True),
        init=False,
        repr=False,
    )
    w_n: np.ndarray = attrs.field(
        default=attrs.Factory(compute_noise_weights, takes_self=True),
        init=False,
        repr=False,
    )

    @property
    def k(self) -> int:
        return self.h_c_abs.shape[-1]

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.h_c_abs.shape[:-1]

    @property
    def noise_scale(self) -> float:
        return float(np.sqrt(self.sigma2 / (1.0 + self.sigma2)))

    @property
    def normalization(self) -> float:
        return float(1.0 / np.sqrt(1.0 + self.sigma2))


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class ChannelModel(ABC):
    mode: ClassVar[str] = MODE

    @classmethod
    def __attrs_init_subclass__(cls) -> None:
        if inspect.isabstract(cls):
            return

        key: str = cddmpy.conversion.to_registry_key(cls.mode)
        REGISTRY[key] = cls

    @abstractmethod
    def sample_gains(
        self, shape: tuple[int, ...], rng: np.random.Generator
    ) -> np.ndarray:
        raise NotImplementedError()

    @abstractmethod
    def signal_weights(self, h_r: np.ndarray, sigma2: float) -> np.ndarray:
        raise NotImplementedError()

    @abstractmethod
    def noise_weights(self, h_r: np.ndarray, sigma2: float) -> np.ndarray:
        raise NotImplementedError()

    @abstractmethod
    def equalize(self, y_c: np.ndarray, ch: ChannelRealization) -> np.ndarray:
        raise NotImplementedError()

    def realize(
        self,
        k: int,
        sigma2: float,
        rng: RngLike,
        batch_shape: tuple[int, ...] = (),
    ) -> ChannelRealization:
        if int(k) < 1:
            raise DomainError("`k` must be a positive integer.")
        cddmpy.validators.validate_non_negative("sigma2", sigma2)
        gains: np.ndarray = self.sample_gains((*batch_shape, int(k)), as_generator(rng))
        return ChannelRealization(mode=type(self).mode, h_c_abs=gains, sigma2=sigma2)
