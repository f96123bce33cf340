from __future__ import annotations

import logging
from collections.abc import Callable

import numpy as np

from cddmpy.channels import (
    ChannelRealization,
    receive_reparam,
    sample_channel,
    snr_db_to_sigma2,
)
from cddmpy.diffusion.process import NoisePredictor, sample
from cddmpy.diffusion.schedule import NoiseSchedule, select_m
from cddmpy.errors import ConfigError
from cddmpy.jscc.codec import (
    JsccDecoder,
    JsccEncoder,
    decode,
    encode,
    psnr_from_mse,
)
from cddmpy.jscc.training import train_stage3
from cddmpy.streams import RngStream

from .config import ExperimentConfig
from .conformance import chunk_sizes
from .records import SweepRecord

logger = logging.getLogger(__name__)

STREAM_MSE_SWEEP: int = 5
STREAM_PSNR_SWEEP: int = 6
STREAM_STAGE3: int = 7

NoiseHook = Callable[[int, int, np.ndarray, ChannelRealization, np.ndarray], None]


def channel_inputs(
    cfg: ExperimentConfig,
    enc: JsccEncoder | None,
    size: int,
    gen: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Source batch and the matching transmitted signal."""
    s_batch: np.ndarray = cfg.source.sample(size, gen)
    if enc is None:
        if cfg.source.dim != 2 * cfg.k:
            raise ConfigError(
                f"Source dimension {cfg.source.dim} needs an encoder for k={cfg.k}."
            )
        return s_batch, s_batch
    return s_batch, encode(enc, s_batch, gen)


def mse_sweep(
    cfg: ExperimentConfig,
    model: NoisePredictor,
    enc: JsccEncoder | None = None,
    s: NoiseSchedule | None = None,
    on_noise: NoiseHook | None = None,
) -> list[SweepRecord]:
    """Per-SNR MSE of the channel input against `y` (denoised) and `y_r` (raw).

    Both arms see identical channel and noise draws. `on_noise` receives
    `(snr_index, chunk_index, x, channel, eps)` for every chunk.
    """
    if model is None:
        raise ConfigError("`mse_sweep` needs a trained denoiser.")
    s = s if s is not None else cfg.schedule.build()
    dim: int = 2 * cfg.k
    records: list[SweepRecord] = []

    for snr_index, snr_db in enumerate(cfg.sweep.snr_db):
        sigma2: float = float(snr_db_to_sigma2(snr_db))
        m: int = select_m(s, sigma2, cfg.schedule.target_factor)
        chunks: list[int] = chunk_sizes(cfg.sweep.trials, cfg.sweep.chunk_size)
        error_with: float = 0.0
        error_without: float = 0.0

        for chunk, size in enumerate(chunks):
            gen: np.random.Generator = RngStream(
                seed=cfg.seed, stream_id=STREAM_MSE_SWEEP, path=(snr_index, chunk)
            ).generator()
            _, x = channel_inputs(cfg, enc, size, gen)
            ch: ChannelRealization = sample_channel(
                cfg.channel, cfg.k, sigma2, gen, (size,)
            )
            y_r, eps = receive_reparam(x, ch, gen, return_noise=True)
            if on_noise is not None:
                on_noise(snr_index, chunk, x, ch, eps)
            y: np.ndarray = sample(model, y_r, ch, s, m)
            error_with += float(np.sum(np.square(y - x)))
            error_without += float(np.sum(np.square(y_r - x)))

        count: int = cfg.sweep.trials * dim
        record = SweepRecord(
            snr_db=snr_db,
            sigma2=sigma2,
            m=m,
            mse_with_cddm=error_with / count,
            mse_without_cddm=error_without / count,
            trials=cfg.sweep.trials,
            seed=cfg.seed,
        )
        logger.info(
            "MSE sweep %.3g dB (m=%d): with %.6g, without %.6g, gain %.3g dB",
            snr_db,
            m,
            record.mse_with_cddm,
            record.mse_without_cddm,
            record.gain_db,
        )
        records.append(record)
    return records


def psnr_sweep(
    cfg: ExperimentConfig,
    enc: JsccEncoder,
    dec: JsccDecoder,
    model: NoisePredictor,
    s: NoiseSchedule | None = None,
    joint_dec: JsccDecoder | None = None,
) -> list[SweepRecord]:
    """Per-SNR PSNR of the joint system against the codec-only path.

    `dec` is the decoder trained without the denoiser and serves the codec-only
    arm. When `cfg.sweep.retrain_decoder` is set, a copy of `dec` is retrained
    at every SNR on denoised signals; otherwise `joint_dec`, the decoder of the
    finished joint training, decodes the denoised arm. MSE columns hold
    source-domain MSE.
    """
    if enc is None or dec is None or model is None:
        raise ConfigError("`psnr_sweep` needs an encoder, a decoder and a denoiser.")
    if not cfg.sweep.retrain_decoder and joint_dec is None:
        raise ConfigError("`psnr_sweep` needs the joint decoder without retraining.")
    s = s if s is not None else cfg.schedule.build()
    peak: float = cfg.source.peak
    records: list[SweepRecord] = []

    for snr_index, snr_db in enumerate(cfg.sweep.snr_db):
        sigma2: float = float(snr_db_to_sigma2(snr_db))
        m: int = select_m(s, sigma2, cfg.schedule.target_factor)
        chunks: list[int] = chunk_sizes(cfg.sweep.trials, cfg.sweep.chunk_size)
        dec_with: JsccDecoder | None = joint_dec
        if cfg.sweep.retrain_decoder:
            dec_with = dec.copy()
            train_stage3(
                enc,
                dec_with,
                model,
                cfg.source,
                s,
                cfg.jscc,
                cfg.channel,
                snr_db,
                RngStream(seed=cfg.seed, stream_id=STREAM_STAGE3, path=(snr_index,)),
            )

        error_with: float = 0.0
        error_without: float = 0.0
        for chunk, size in enumerate(chunks):
            gen: np.random.Generator = RngStream(
                seed=cfg.seed, stream_id=STREAM_PSNR_SWEEP, path=(snr_index, chunk)
            ).generator()
            s_batch, x = channel_inputs(cfg, enc, size, gen)
            ch: ChannelRealization = sample_channel(
                cfg.channel, cfg.k, sigma2, gen, (size,)
            )
            y_r: np.ndarray = receive_reparam(x, ch, gen)
            s_with: np.ndarray = decode(dec_with, sample(model, y_r, ch, s, m))
            s_without: np.ndarray = decode(dec, y_r)
            error_with += float(np.sum(np.square(s_with - s_batch)))
            error_without += float(np.sum(np.square(s_without - s_batch)))

        count: int = cfg.sweep.trials * cfg.source.dim
        mse_with: float = error_with / count
        mse_without: float = error_without / count
        record = SweepRecord(
            snr_db=snr_db,
            sigma2=sigma2,
            m=m,
            mse_with_cddm=mse_with,
            mse_without_cddm=mse_without,
            psnr_with=psnr_from_mse(mse_with, peak),
            psnr_without=psnr_from_mse(mse_without, peak),
            trials=cfg.sweep.trials,
            seed=cfg.seed,
        )
        logger.info(
            "PSNR sweep %.3g dB (m=%d): with %.4g dB, without %.4g dB",
            snr_db,
            m,
            record.psnr_with,
            record.psnr_without,
        )
        records.append(record)
    return records