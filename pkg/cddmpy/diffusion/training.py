from __future__ import annotations

import logging
from collections.abc import Callable
from typing import Protocol

import attrs
import numpy as np

from cddmpy.channels import ChannelRealization, sample_channel, snr_db_to_sigma2
from cddmpy.errors import DimensionError, TrainingError
from cddmpy.networks.adam import learning_rate_at
from cddmpy.networks.denoiser import DenoiserModel
from cddmpy.signals import RealSignal
from cddmpy.streams import RngLike, as_generator

from .process import forward_closed, make_x0
from .schedule import NoiseSchedule

logger = logging.getLogger(__name__)

STAGE: str = "cddm"

STEPS_DEFAULT: int = 20_000
BATCH_SIZE_DEFAULT: int = 64
LEARNING_RATE_DEFAULT: float = 1e-3
SNR_DB_RANGE_DEFAULT: tuple[float, float] = (0.0, 25.0)
LOG_EVERY_DEFAULT: int = 500
CHANNEL_DEFAULT: str = "awgn"


class SignalSource(Protocol):
    @property
    def dim(self) -> int: ...

    def sample(self, batch: int, rng: np.random.Generator) -> np.ndarray: ...


def convert_snr_range(value: tuple[float, float]) -> tuple[float, float]:
    low, high = (float(v) for v in value)
    return low, high


def validate_snr_range(_, __, value: tuple[float, float]) -> None:
    if not value[0] <= value[1]:
        raise ValueError("`snr_db_range` must satisfy low <= high.")


@attrs.frozen(kw_only=True, weakref_slot=False, getstate_setstate=False)
class TrainConfig:
    steps: int = attrs.field(
        default=STEPS_DEFAULT, converter=int, validator=attrs.validators.ge(0)
    )
    batch_size: int = attrs.field(
        default=BATCH_SIZE_DEFAULT, converter=int, validator=attrs.validators.ge(1)
    )
    lr: float = attrs.field(
        default=LEARNING_RATE_DEFAULT, converter=float, validator=attrs.validators.gt(0)
    )
    snr_db_range: tuple[float, float] = attrs.field(
        default=SNR_DB_RANGE_DEFAULT,
        converter=convert_snr_range,
        validator=validate_snr_range,
    )
    weighted_loss: bool = attrs.field(default=False, converter=bool)
    log_every: int = attrs.field(
        default=LOG_EVERY_DEFAULT, converter=int, validator=attrs.validators.ge(1)
    )


@attrs.frozen(kw_only=True, weakref_slot=False, getstate_setstate=False)
class TrainBatchReport:
    """One optimizer step; `t_drawn` is the step index of the first batch row."""

    step: int
    loss: float
    grad_norm: float
    t_drawn: int
    lr: float


def cddm_loss_and_grad(
    model: DenoiserModel,
    x: RealSignal,
    ch: ChannelRealization,
    t: int | np.ndarray,
    eps: np.ndarray,
    s: NoiseSchedule,
    weighted: bool = False,
) -> tuple[float, np.ndarray]:
    """Batch-mean noise-prediction loss and its parameter gradient."""
    x0: np.ndarray = make_x0(x, ch)
    x_t: np.ndarray = forward_closed(x0, t, s, ch, eps)
    weights: np.ndarray | None = ch.w_n if weighted else None
    loss, grad = model.loss_and_grad(x_t, ch.h_r, t, eps, weights)
    batch: int = int(np.prod(np.shape(x_t)[:-1], dtype=np.int64))
    return loss / batch, grad / batch


def cddm_loss(
    model: DenoiserModel,
    x: RealSignal,
    ch: ChannelRealization,
    t: int | np.ndarray,
    eps: np.ndarray,
    s: NoiseSchedule,
    weighted: bool = False,
) -> float:
    x_t: np.ndarray = forward_closed(make_x0(x, ch), t, s, ch, eps)
    predicted: np.ndarray = model.predict(x_t, ch.h_r, t)
    residual: np.ndarray = np.asarray(eps) - predicted
    if weighted:
        residual = ch.w_n * residual
    return float(np.mean(np.sum(np.square(residual), axis=-1)))


def draw_batch(
    model: DenoiserModel,
    source: SignalSource,
    s: NoiseSchedule,
    cfg: TrainConfig,
    gen: np.random.Generator,
    channel: str,
) -> tuple[np.ndarray, ChannelRealization, np.ndarray, np.ndarray]:
    x: np.ndarray = source.sample(cfg.batch_size, gen)
    snr_db: float = gen.uniform(*cfg.snr_db_range)
    ch: ChannelRealization = sample_channel(
        channel, model.k, float(snr_db_to_sigma2(snr_db)), gen, (cfg.batch_size,)
    )
    t: np.ndarray = gen.integers(1, s.num_steps + 1, size=cfg.batch_size)
    eps: np.ndarray = gen.standard_normal((cfg.batch_size, model.dim))
    return x, ch, t, eps


def train_cddm(
    model: DenoiserModel,
    source: SignalSource,
    s: NoiseSchedule,
    cfg: TrainConfig,
    rng: RngLike,
    on_report: Callable[[TrainBatchReport], None] | None = None,
    *,
    channel: str = CHANNEL_DEFAULT,
    stage: str = STAGE,
) -> DenoiserModel:
    """Train the noise predictor in place over fresh channel draws per batch."""
    if source.dim != model.dim:
        raise DimensionError(
            f"Source dimension {source.dim} does not match model 2k={model.dim}."
        )
    if model.num_steps != s.num_steps:
        raise DimensionError(
            f"Model embeds {model.num_steps} steps, schedule has {s.num_steps}."
        )
    if cfg.steps == 0:
        return model

    gen: np.random.Generator = as_generator(rng)
    report: TrainBatchReport | None = None
    logger.info(
        "Training denoiser: %d steps, batch %d, SNR %s dB, %s channel.",
        cfg.steps,
        cfg.batch_size,
        cfg.snr_db_range,
        channel,
    )

    for step in range(cfg.steps):
        x, ch, t, eps = draw_batch(model, source, s, cfg, gen, channel)
        loss, grad = cddm_loss_and_grad(model, x, ch, t, eps, s, cfg.weighted_loss)
        if not np.isfinite(loss):
            raise TrainingError(
                f"non-finite loss {loss}", stage=stage, step=step, report=report
            )

        lr: float = learning_rate_at(step, cfg.steps, cfg.lr)
        model.opt_step(grad, lr, stage)
        report = TrainBatchReport(
            step=step,
            loss=loss,
            grad_norm=float(np.linalg.norm(grad)),
            t_drawn=int(t[0]),
            lr=lr,
        )
        if on_report is not None:
            on_report(report)
        if (step + 1) % cfg.log_every == 0 or step + 1 == cfg.steps:
            logger.info(
                "[%s] step %d/%d loss %.6g grad %.3g lr %.2g",
                stage,
                step + 1,
                cfg.steps,
                report.loss,
                report.grad_norm,
                lr,
            )

    return model
