from __future__ import annotations

from typing import Any

import attrs
import numpy as np

import cddmpy.validators
from cddmpy.channels import ChannelRealization
from cddmpy.errors import DomainError
from cddmpy.signals import RealSignal

NUM_STEPS_DEFAULT: int = 1000
ALPHA_FIRST_DEFAULT: float = 0.9999
ALPHA_LAST_DEFAULT: float = 0.98
TARGET_FACTORS: tuple[int, ...] = (1, 2)
TARGET_FACTOR_DEFAULT: int = 1


def convert_alpha(alpha: Any) -> np.ndarray:
    alpha = np.array(alpha, dtype=np.float64).reshape(-1)
    alpha.setflags(write=False)
    return alpha


def validate_alpha(_, __, alpha: np.ndarray) -> None:
    if alpha.size < 1:
        raise DomainError("`alpha` must contain at least one step.")
    if np.any(alpha <= 0.0) or np.any(alpha > 1.0):
        raise DomainError("`alpha` entries must lie in (0, 1].")


def compute_alpha_bar(s: NoiseSchedule) -> np.ndarray:
    alpha_bar: np.ndarray = np.cumprod(s.alpha)
    alpha_bar.setflags(write=False)
    return alpha_bar


def compute_padded_alpha_bar(s: NoiseSchedule) -> np.ndarray:
    padded: np.ndarray = np.concatenate([[1.0], s.alpha_bar])
    padded.setflags(write=False)
    return padded


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class NoiseSchedule:
    """Per-step retention `alpha` and its running product; steps are 1-based."""

    alpha: np.ndarray = attrs.field(converter=convert_alpha, validator=validate_alpha)

    alpha_bar: np.ndarray = attrs.field(
        default=attrs.Factory(compute_alpha_bar, takes_self=True),
        init=False,
        repr=False,
    )
    _padded_alpha_bar: np.ndarray = attrs.field(
        default=attrs.Factory(compute_padded_alpha_bar, takes_self=True),
        init=False,
        repr=False,
    )

    @property
    def num_steps(self) -> int:
        return self.alpha.size

    def alpha_at(self, t: int | np.ndarray) -> float | np.ndarray:
        cddmpy.validators.validate_step(t, 1, self.num_steps)
        return self.alpha[np.asarray(t) - 1]

    def alpha_bar_at(self, t: int | np.ndarray) -> float | np.ndarray:
        """Cumulative product at step `t`; `t = 0` maps to 1."""
        cddmpy.validators.validate_step(t, 0, self.num_steps)
        return self._padded_alpha_bar[np.asarray(t)]

    def noise_to_signal(self) -> np.ndarray:
        return (1.0 - self.alpha_bar) / self.alpha_bar


def linear_schedule(
    num_steps: int = NUM_STEPS_DEFAULT,
    alpha_first: float = ALPHA_FIRST_DEFAULT,
    alpha_last: float = ALPHA_LAST_DEFAULT,
) -> NoiseSchedule:
    if int(num_steps) < 1:
        raise DomainError("`num_steps` must be at least 1.")
    if not 0.0 < alpha_last <= alpha_first < 1.0:
        raise DomainError("Require 0 < `alpha_last` <= `alpha_first` < 1.")

    if num_steps == 1:
        return NoiseSchedule(alpha=[alpha_first])
    return NoiseSchedule(alpha=np.linspace(alpha_first, alpha_last, int(num_steps)))


def validate_target_factor(target_factor: float) -> None:
    if target_factor not in TARGET_FACTORS:
        raise DomainError(f"`target_factor` must be one of {TARGET_FACTORS}.")


def select_m(
    s: NoiseSchedule, sigma2: float, target_factor: float = TARGET_FACTOR_DEFAULT
) -> int:
    cddmpy.validators.validate_non_negative("sigma2", sigma2)
    validate_target_factor(target_factor)

    mismatch: np.ndarray = np.abs(target_factor * sigma2 - s.noise_to_signal())
    # argmin returns the first minimizer, so ties resolve toward smaller m.
    return int(np.argmin(mismatch)) + 1


def matched_alpha_bar(sigma2: float) -> float:
    cddmpy.validators.validate_non_negative("sigma2", sigma2)
    return 1.0 / (1.0 + sigma2)


def kl_forward_vs_channel(
    s: NoiseSchedule,
    t: int,
    sigma2: float,
    ch: ChannelRealization,
    x0: RealSignal,
) -> float:
    """KL between the step-`t` forward marginal and the received-signal law."""
    cddmpy.validators.validate_step(t, 1, s.num_steps)
    cddmpy.validators.validate_non_negative("sigma2", sigma2)
    x0 = np.asarray(x0, dtype=np.float64)
    w_n2: np.ndarray = np.broadcast_to(np.square(ch.w_n), x0.shape)

    alpha_bar: float = float(s.alpha_bar_at(t))
    mean_q: np.ndarray = np.sqrt(alpha_bar) * x0
    var_q: np.ndarray = (1.0 - alpha_bar) * w_n2
    mean_p: np.ndarray = x0 / np.sqrt(1.0 + sigma2)
    var_p: np.ndarray = sigma2 / (1.0 + sigma2) * w_n2

    # Dimensions with a zero noise weight carry x0 = 0 and contribute nothing.
    live: np.ndarray = w_n2 > 0.0
    if not np.any(live):
        return 0.0
    if sigma2 == 0.0:
        return float(np.inf) if alpha_bar < 1.0 else 0.0

    ratio: np.ndarray = var_q[live] / var_p[live]
    mean_term: np.ndarray = np.square(mean_q[live] - mean_p[live]) / var_p[live]
    kl_terms: np.ndarray = 0.5 * (ratio - 1.0 - np.log(ratio) + mean_term)
    return float(max(np.sum(kl_terms), 0.0))
