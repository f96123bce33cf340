from __future__ import annotations

from typing import ClassVar

import attrs
import numpy as np

from cddmpy.errors import SingularityError

from .base import ChannelModel, ChannelRealization

MODE: str = "rayleigh"

# |h| of h ~ CN(0, 1) is Rayleigh with scale 1/sqrt(2), so E|h|^2 = 1.
RAYLEIGH_SCALE: float = float(np.sqrt(0.5))


def mmse_denominator(h_abs: np.ndarray, sigma2: float) -> np.ndarray:
    denominator: np.ndarray = np.square(h_abs) + 2.0 * sigma2
    if np.any(denominator == 0.0):
        raise SingularityError(
            "MMSE weights are singular for `sigma2` = 0 and a zero fading gain."
        )
    return denominator


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class RayleighFadingChannel(ChannelModel):
    mode: ClassVar[str] = MODE

    def sample_gains(
        self, shape: tuple[int, ...], rng: np.random.Generator
    ) -> np.ndarray:
        return rng.rayleigh(RAYLEIGH_SCALE, size=shape)

    def signal_weights(self, h_r: np.ndarray, sigma2: float) -> np.ndarray:
        return np.square(h_r) / mmse_denominator(h_r, sigma2)

    def noise_weights(self, h_r: np.ndarray, sigma2: float) -> np.ndarray:
        return h_r / mmse_denominator(h_r, sigma2)

    def equalize(self, y_c: np.ndarray, ch: ChannelRealization) -> np.ndarray:
        # h is carried by its modulus only, so conj(h) = |h|.
        return ch.h_c_abs * y_c / mmse_denominator(ch.h_c_abs, ch.sigma2)
