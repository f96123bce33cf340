from __future__ import annotations

import logging
from typing import Any

import attrs
import numpy as np

from cddmpy.channels import (
    ChannelRealization,
    prop_moments,
    receive,
    sample_channel,
    snr_db_to_sigma2,
)
from cddmpy.diffusion.process import forward_step, make_x0
from cddmpy.diffusion.schedule import NoiseSchedule
from cddmpy.streams import RngStream

from .config import ConformanceConfig
from .moments import MomentAccumulator, relative_moment_errors

logger = logging.getLogger(__name__)

STREAM_CONFORMANCE: int = 1
STREAM_FORWARD: int = 2


@attrs.frozen(kw_only=True, weakref_slot=False, getstate_setstate=False)
class ConformanceCase:
    check: str
    mode: str
    sigma2: float
    t: int | None
    mean_error: float
    variance_error: float
    passed: bool


@attrs.frozen(kw_only=True, weakref_slot=False, getstate_setstate=False)
class ConformanceReport:
    cases: tuple[ConformanceCase, ...]
    trials: int
    mean_tolerance: float
    variance_tolerance: float

    @property
    def passed(self) -> bool:
        return all(case.passed for case in self.cases)

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "trials": self.trials,
            "mean_tolerance": self.mean_tolerance,
            "variance_tolerance": self.variance_tolerance,
            "snr_convention": "snr_db = 10 log10(1 / (2 sigma2))",
            "cases": [attrs.asdict(case) for case in self.cases],
        }


def unit_power_signal(k: int) -> np.ndarray:
    """Entries of magnitude 1/sqrt(2), negative at every third index.

    Every complex symbol then carries unit power.
    """
    signs: np.ndarray = np.where(np.arange(2 * k) % 3 == 0, -1.0, 1.0)
    return signs / np.sqrt(2.0)


def chunk_sizes(total: int, chunk_size: int) -> list[int]:
    full, rest = divmod(total, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def judge(
    check: str,
    mode: str,
    sigma2: float,
    t: int | None,
    acc: MomentAccumulator,
    expected_mean: np.ndarray,
    expected_variance: np.ndarray,
    cfg: ConformanceConfig,
) -> ConformanceCase:
    mean_error, variance_error = relative_moment_errors(
        acc.mean, acc.variance, expected_mean, expected_variance
    )
    passed: bool = (
        mean_error <= cfg.mean_tolerance and variance_error <= cfg.variance_tolerance
    )
    logger.info(
        "%s %s sigma2=%.4g t=%s: mean err %.3e, var err %.3e -> %s",
        check,
        mode,
        sigma2,
        t,
        mean_error,
        variance_error,
        "pass" if passed else "FAIL",
    )
    return ConformanceCase(
        check=check,
        mode=mode,
        sigma2=sigma2,
        t=t,
        mean_error=mean_error,
        variance_error=variance_error,
        passed=passed,
    )


def check_receiver(
    mode: str,
    sigma2: float,
    cfg: ConformanceConfig,
    stream: RngStream,
    noise_scale: float = 1.0,
) -> ConformanceCase:
    """Empirical moments of the explicit receive chain against the closed form.

    `noise_scale` stretches every draw about the closed-form mean; values other
    than 1 exist to exercise the failure path.
    """
    ch: ChannelRealization = sample_channel(mode, cfg.k, sigma2, stream.child(0))
    x: np.ndarray = unit_power_signal(cfg.k)
    expected_mean, expected_variance = prop_moments(x, ch)

    acc: MomentAccumulator = MomentAccumulator(dim=2 * cfg.k)
    for index, size in enumerate(chunk_sizes(cfg.trials, cfg.chunk_size)):
        y_r: np.ndarray = receive(np.tile(x, (size, 1)), ch, stream.child(index + 1))
        acc.add(expected_mean + noise_scale * (y_r - expected_mean))
    return judge(
        "receiver", ch.mode, sigma2, None, acc, expected_mean, expected_variance, cfg
    )


def check_forward_process(
    s: NoiseSchedule,
    t: int,
    cfg: ConformanceConfig,
    stream: RngStream,
    mode: str = "awgn",
    sigma2: float = float(snr_db_to_sigma2(10.0)),
) -> ConformanceCase:
    """Iterated single steps against the closed-form step-`t` marginal."""
    ch: ChannelRealization = sample_channel(
        mode, cfg.forward_k, sigma2, stream.child(0)
    )
    x0: np.ndarray = make_x0(unit_power_signal(cfg.forward_k), ch)
    alpha_bar: float = float(s.alpha_bar_at(t))
    expected_mean: np.ndarray = np.sqrt(alpha_bar) * x0
    expected_variance: np.ndarray = (1.0 - alpha_bar) * np.square(ch.w_n)

    acc: MomentAccumulator = MomentAccumulator(dim=2 * cfg.forward_k)
    for index, size in enumerate(chunk_sizes(cfg.forward_trials, cfg.chunk_size)):
        gen: np.random.Generator = stream.child(index + 1).generator()
        x_t: np.ndarray = np.tile(x0, (size, 1))
        for step in range(1, t + 1):
            x_t = forward_step(x_t, step, s, ch, gen)
        acc.add(x_t)
    return judge(
        "forward", ch.mode, sigma2, t, acc, expected_mean, expected_variance, cfg
    )


def check_distribution(
    cfg: ConformanceConfig,
    seed: int,
    s: NoiseSchedule | None = None,
    noise_scale: float = 1.0,
) -> ConformanceReport:
    cases: list[ConformanceCase] = []
    for mode_index, mode in enumerate(cfg.modes):
        for sigma_index, sigma2 in enumerate(cfg.sigma2):
            stream: RngStream = RngStream(
                seed=seed,
                stream_id=STREAM_CONFORMANCE,
                path=(mode_index, sigma_index),
            )
            cases.append(check_receiver(mode, sigma2, cfg, stream, noise_scale))

    if s is not None:
        for index, t in enumerate(cfg.forward_steps):
            stream = RngStream(seed=seed, stream_id=STREAM_FORWARD, path=(index,))
            cases.append(check_forward_process(s, t, cfg, stream))

    return ConformanceReport(
        cases=tuple(cases),
        trials=cfg.trials,
        mean_tolerance=cfg.mean_tolerance,
        variance_tolerance=cfg.variance_tolerance,
    )
