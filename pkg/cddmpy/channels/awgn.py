from __future__ import annotations

from typing import ClassVar

import attrs
import numpy as np

from .base import ChannelModel, ChannelRealization

MODE: str = "awgn"


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class AdditiveWhiteGaussianNoiseChannel(ChannelModel):
    mode: ClassVar[str] = MODE

    def sample_gains(
        self, shape: tuple[int, ...], rng: np.random.Generator
    ) -> np.ndarray:
        return np.ones(shape, dtype=np.float64)

    def signal_weights(self, h_r: np.ndarray, sigma2: float) -> np.ndarray:
        return np.ones_like(h_r)

    def noise_weights(self, h_r: np.ndarray, sigma2: float) -> np.ndarray:
        return np.ones_like(h_r)

    def equalize(self, y_c: np.ndarray, ch: ChannelRealization) -> np.ndarray:
        return np.array(y_c, dtype=np.complex128)
