from __future__ import annotations

import logging
from collections.abc import Callable

import attrs
import numpy as np

import cddmpy.resources
from cddmpy.channels import (
    ChannelRealization,
    receive,
    sample_channel,
    snr_db_to_sigma2,
)
from cddmpy.diffusion.process import sample
from cddmpy.diffusion.schedule import (
    TARGET_FACTOR_DEFAULT,
    NoiseSchedule,
    select_m,
)
from cddmpy.diffusion.training import (
    CHANNEL_DEFAULT,
    SNR_DB_RANGE_DEFAULT,
    TrainBatchReport,
    TrainConfig,
    convert_snr_range,
    train_cddm,
    validate_snr_range,
)
from cddmpy.errors import TrainingError
from cddmpy.networks.adam import learning_rate_at
from cddmpy.networks.base import Network
from cddmpy.networks.denoiser import DenoiserModel
from cddmpy.networks.mlp import convert_widths
from cddmpy.streams import RngLike, RngStream, as_generator

from .codec import (
    CODEC_WIDTHS_DEFAULT,
    KL_WEIGHT_DEFAULT,
    JsccDecoder,
    JsccEncoder,
    encode,
    stage1_loss_and_grad,
    stage3_loss_and_grad,
)
from .sources import SourceSampler

logger = logging.getLogger(__name__)

STAGES: tuple[str, ...] = ("stage1", "stage2", "stage3")
STAGE_STEPS_DEFAULT: tuple[int, int, int] = (5_000, 20_000, 2_000)
EVAL_SNR_DB_DEFAULT: float = 5.0

ENCODER_CHECKPOINT: str = "stage1_encoder.npz"
DECODER_CHECKPOINT: str = "stage1_decoder.npz"
DENOISER_CHECKPOINT: str = "cddm.npz"
JOINT_DECODER_CHECKPOINT: str = "stage3_decoder.npz"

LossCallback = Callable[[str, int, float], None]
CheckpointCallback = Callable[[Network, str], object]


def convert_stage_steps(value: tuple[int, ...]) -> tuple[int, int, int]:
    steps = tuple(int(v) for v in value)
    if len(steps) != len(STAGES) or any(v < 0 for v in steps):
        raise ValueError("`stage_steps` must hold three non-negative counts.")
    return steps


@attrs.frozen(kw_only=True, weakref_slot=False, getstate_setstate=False)
class JsccConfig:
    encoder_widths: tuple[int, ...] = attrs.field(
        default=CODEC_WIDTHS_DEFAULT, converter=convert_widths
    )
    decoder_widths: tuple[int, ...] = attrs.field(
        default=CODEC_WIDTHS_DEFAULT, converter=convert_widths
    )
    use_sigma: bool = attrs.field(default=True, converter=bool)
    kl_weight: float = attrs.field(
        default=KL_WEIGHT_DEFAULT, converter=float, validator=attrs.validators.ge(0)
    )
    stage_steps: tuple[int, int, int] = attrs.field(
        default=STAGE_STEPS_DEFAULT, converter=convert_stage_steps
    )
    batch_size: int = attrs.field(
        default=64, converter=int, validator=attrs.validators.ge(1)
    )
    lr: float = attrs.field(
        default=1e-3, converter=float, validator=attrs.validators.gt(0)
    )
    snr_db_range: tuple[float, float] = attrs.field(
        default=SNR_DB_RANGE_DEFAULT,
        converter=convert_snr_range,
        validator=validate_snr_range,
    )
    eval_snr_db: float = attrs.field(default=EVAL_SNR_DB_DEFAULT, converter=float)
    target_factor: int = attrs.field(default=TARGET_FACTOR_DEFAULT, converter=int)
    log_every: int = attrs.field(
        default=500, converter=int, validator=attrs.validators.ge(1)
    )


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class EncodedSource:
    """Source of channel inputs: samples pushed through a fixed encoder."""

    encoder: JsccEncoder
    source: SourceSampler

    @property
    def dim(self) -> int:
        return 2 * self.encoder.k

    def sample(self, batch: int, rng: np.random.Generator) -> np.ndarray:
        return encode(self.encoder, self.source.sample(batch, rng), rng)


def check_loss(loss: float, stage: str, step: int) -> None:
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite loss {loss}", stage=stage, step=step)


def log_stage_boundary(stage: str, event: str) -> None:
    logger.info(
        "[%s] %s (rss %.1f MiB)", stage, event, cddmpy.resources.resident_memory_mb()
    )


def train_stage1(
    enc: JsccEncoder,
    dec: JsccDecoder,
    source: SourceSampler,
    cfg: JsccConfig,
    channel: str,
    rng: RngLike,
    on_loss: LossCallback | None = None,
) -> tuple[JsccEncoder, JsccDecoder]:
    """Train encoder and decoder through the equalized channel, no denoiser."""
    stage: str = STAGES[0]
    steps: int = cfg.stage_steps[0]
    gen: np.random.Generator = as_generator(rng)
    for step in range(steps):
        s_batch: np.ndarray = source.sample(cfg.batch_size, gen)
        sigma2: float = float(snr_db_to_sigma2(gen.uniform(*cfg.snr_db_range)))
        ch: ChannelRealization = sample_channel(
            channel, enc.k, sigma2, gen, (cfg.batch_size,)
        )
        loss, grad_enc, grad_dec = stage1_loss_and_grad(
            enc, dec, s_batch, ch, cfg.kl_weight, gen
        )
        check_loss(loss, stage, step)
        lr: float = learning_rate_at(step, steps, cfg.lr)
        enc.opt_step(grad_enc, lr, stage)
        dec.opt_step(grad_dec, lr, stage)
        if on_loss is not None:
            on_loss(stage, step, loss)
        if (step + 1) % cfg.log_every == 0:
            logger.info("[%s] step %d/%d loss %.6g", stage, step + 1, steps, loss)
    return enc, dec


def train_stage3(
    enc: JsccEncoder,
    dec: JsccDecoder,
    model: DenoiserModel,
    source: SourceSampler,
    s: NoiseSchedule,
    cfg: JsccConfig,
    channel: str,
    snr_db: float,
    rng: RngLike,
    on_loss: LossCallback | None = None,
) -> JsccDecoder:
    """Retrain the decoder on denoised signals at one evaluation SNR."""
    stage: str = STAGES[2]
    steps: int = cfg.stage_steps[2]
    sigma2: float = float(snr_db_to_sigma2(snr_db))
    m: int = select_m(s, sigma2, cfg.target_factor)
    gen: np.random.Generator = as_generator(rng)
    for step in range(steps):
        s_batch: np.ndarray = source.sample(cfg.batch_size, gen)
        x: np.ndarray = encode(enc, s_batch, gen)
        ch: ChannelRealization = sample_channel(
            channel, enc.k, sigma2, gen, (cfg.batch_size,)
        )
        y: np.ndarray = sample(model, receive(x, ch, gen), ch, s, m)
        loss, grad_dec = stage3_loss_and_grad(dec, s_batch, y)
        check_loss(loss, stage, step)
        dec.opt_step(grad_dec, learning_rate_at(step, steps, cfg.lr), stage)
        if on_loss is not None:
            on_loss(stage, step, loss)
        if (step + 1) % cfg.log_every == 0:
            logger.info(
                "[%s] %.3g dB m=%d step %d/%d loss %.6g",
                stage,
                snr_db,
                m,
                step + 1,
                steps,
                loss,
            )
    return dec


def train_joint(
    enc: JsccEncoder,
    dec: JsccDecoder,
    model: DenoiserModel,
    source: SourceSampler,
    s: NoiseSchedule,
    cfg: JsccConfig,
    train_cfg: TrainConfig,
    rng: RngStream,
    *,
    channel: str = CHANNEL_DEFAULT,
    on_checkpoint: CheckpointCallback | None = None,
    on_loss: LossCallback | None = None,
) -> tuple[JsccEncoder, JsccDecoder, DenoiserModel]:
    """Three-stage training; each stage draws from its own child stream."""
    log_stage_boundary(STAGES[0], "start")
    train_stage1(enc, dec, source, cfg, channel, rng.child(0), on_loss)
    if on_checkpoint is not None:
        on_checkpoint(enc, ENCODER_CHECKPOINT)
        on_checkpoint(dec, DECODER_CHECKPOINT)

    log_stage_boundary(STAGES[1], "start")
    encoder_hash: str = enc.param_hash()
    stage2_cfg: TrainConfig = attrs.evolve(train_cfg, steps=cfg.stage_steps[1])

    def report_loss(report: TrainBatchReport) -> None:
        if on_loss is not None:
            on_loss(STAGES[1], report.step, report.loss)

    train_cddm(
        model,
        EncodedSource(encoder=enc, source=source),
        s,
        stage2_cfg,
        rng.child(1),
        report_loss,
        channel=channel,
        stage=STAGES[1],
    )
    if enc.param_hash() != encoder_hash:
        raise TrainingError(
            "encoder parameters changed", stage=STAGES[1], step=cfg.stage_steps[1]
        )
    if on_checkpoint is not None:
        on_checkpoint(model, DENOISER_CHECKPOINT)

    log_stage_boundary(STAGES[2], "start")
    frozen_hashes: tuple[str, str] = (enc.param_hash(), model.param_hash())
    train_stage3(
        enc, dec, model, source, s, cfg, channel, cfg.eval_snr_db, rng.child(2), on_loss
    )
    if (enc.param_hash(), model.param_hash()) != frozen_hashes:
        raise TrainingError(
            "encoder or denoiser parameters changed",
            stage=STAGES[2],
            step=cfg.stage_steps[2],
        )
    if on_checkpoint is not None:
        on_checkpoint(dec, JOINT_DECODER_CHECKPOINT)
    log_stage_boundary(STAGES[2], "done")
    return enc, dec, model
