from __future__ import annotations

import logging
from typing import ClassVar

import attrs
import numpy as np

from cddmpy.channels import (
    ChannelRealization,
    receive,
    sample_channel,
    snr_db_to_sigma2,
)
from cddmpy.data import write_npz
from cddmpy.diffusion.process import sample
from cddmpy.diffusion.schedule import NoiseSchedule, select_m
from cddmpy.diffusion.training import SignalSource, TrainBatchReport, train_cddm
from cddmpy.errors import ConfigError
from cddmpy.jscc.codec import JsccDecoder, JsccEncoder, init_decoder, init_encoder
from cddmpy.jscc.training import (
    DECODER_CHECKPOINT,
    DENOISER_CHECKPOINT,
    ENCODER_CHECKPOINT,
    JOINT_DECODER_CHECKPOINT,
    EncodedSource,
    train_joint,
)
from cddmpy.networks.denoiser import DenoiserModel, init_model
from cddmpy.streams import RngStream

from .base import STREAM_INIT, STREAM_SAMPLE, STREAM_TRAIN, Experiment
from .conformance import check_distribution
from .sweeps import channel_inputs, mse_sweep, psnr_sweep

logger = logging.getLogger(__name__)

CONFORMANCE_NAME: str = "conformance.json"
SAMPLES_NAME: str = "samples.npz"
MSE_SWEEP_NAME: str = "mse_sweep.csv"
PSNR_SWEEP_NAME: str = "psnr_sweep.csv"


def init_stream(cfg_seed: int, index: int) -> RngStream:
    return RngStream(seed=cfg_seed, stream_id=STREAM_INIT, path=(index,))


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class CheckDistExperiment(Experiment):
    command: ClassVar[str] = "check-dist"

    noise_scale: float = attrs.field(default=1.0, converter=float)

    def plan(self) -> list[str]:
        conf = self.config.conformance
        return [
            f"receiver moments: modes {conf.modes}, sigma2 {conf.sigma2}, "
            f"k={conf.k}, {conf.trials} trials",
            f"forward process: t in {conf.forward_steps}, k={conf.forward_k}, "
            f"{conf.forward_trials} trials",
            f"write {CONFORMANCE_NAME}",
        ]

    def execute(self) -> int:
        report = check_distribution(
            self.config.conformance,
            self.config.seed,
            self.config.schedule.build(),
            noise_scale=self.noise_scale,
        )
        self.save_json(CONFORMANCE_NAME, report.to_dict())
        logger.info("Conformance %s.", "passed" if report.passed else "FAILED")
        return 0 if report.passed else 1


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class TrainCddmExperiment(Experiment):
    command: ClassVar[str] = "train-cddm"

    def plan(self) -> list[str]:
        train = self.config.train
        return [
            f"train denoiser: {train.steps} steps, batch {train.batch_size}, "
            f"{self.config.channel} channel",
            f"write checkpoints/{DENOISER_CHECKPOINT}",
        ]

    def training_source(self) -> SignalSource:
        if self.has_checkpoint(ENCODER_CHECKPOINT):
            enc: JsccEncoder = self.load_checkpoint(ENCODER_CHECKPOINT, JsccEncoder)
            return EncodedSource(encoder=enc, source=self.config.source)
        if self.config.source.dim != 2 * self.config.k:
            raise ConfigError(
                f"No `{ENCODER_CHECKPOINT}` and source dimension "
                f"{self.config.source.dim} != 2k; run `train-jscc` first."
            )
        return self.config.source

    def execute(self) -> int:
        cfg = self.config
        s: NoiseSchedule = cfg.schedule.build()
        source: SignalSource = self.training_source()
        model: DenoiserModel = init_model(
            cfg.k,
            cfg.denoiser.hidden_widths,
            init_stream(cfg.seed, 0),
            num_steps=s.num_steps,
            time_dim=cfg.denoiser.time_dim,
        )
        curve: list[tuple[str, int, float]] = []

        def record(report: TrainBatchReport) -> None:
            curve.append(("cddm", report.step, report.loss))

        train_cddm(
            model,
            source,
            s,
            cfg.train,
            RngStream(seed=cfg.seed, stream_id=STREAM_TRAIN, path=(1,)),
            record,
            channel=cfg.channel,
        )
        self.save_checkpoint(model, DENOISER_CHECKPOINT)
        self.save_curves(curve)
        return 0


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class TrainJsccExperiment(Experiment):
    command: ClassVar[str] = "train-jscc"

    def plan(self) -> list[str]:
        jscc = self.config.jscc
        return [
            f"stage 1: encoder+decoder, {jscc.stage_steps[0]} steps",
            f"stage 2: denoiser on encoded source, {jscc.stage_steps[1]} steps",
            f"stage 3: decoder at {jscc.eval_snr_db} dB, {jscc.stage_steps[2]} steps",
            "write stage checkpoints and training curves",
        ]

    def execute(self) -> int:
        cfg = self.config
        s: NoiseSchedule = cfg.schedule.build()
        enc: JsccEncoder = init_encoder(
            cfg.n,
            cfg.k,
            cfg.jscc.encoder_widths,
            init_stream(cfg.seed, 1),
            use_sigma=cfg.jscc.use_sigma,
        )
        dec: JsccDecoder = init_decoder(
            cfg.n, cfg.k, cfg.jscc.decoder_widths, init_stream(cfg.seed, 2)
        )
        model: DenoiserModel = init_model(
            cfg.k,
            cfg.denoiser.hidden_widths,
            init_stream(cfg.seed, 0),
            num_steps=s.num_steps,
            time_dim=cfg.denoiser.time_dim,
        )
        curve: list[tuple[str, int, float]] = []
        train_joint(
            enc,
            dec,
            model,
            cfg.source,
            s,
            cfg.jscc,
            cfg.train,
            RngStream(seed=cfg.seed, stream_id=STREAM_TRAIN),
            channel=cfg.channel,
            on_checkpoint=self.save_checkpoint,
            on_loss=lambda stage, step, loss: curve.append((stage, step, loss)),
        )
        self.save_curves(curve)
        return 0


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class SampleExperiment(Experiment):
    command: ClassVar[str] = "sample"

    def plan(self) -> list[str]:
        return [
            f"denoise {self.config.sample.batch_size} signals at "
            f"{self.config.sample.snr_db} dB",
            f"write {SAMPLES_NAME}",
        ]

    def execute(self) -> int:
        cfg = self.config
        s: NoiseSchedule = cfg.schedule.build()
        model: DenoiserModel = self.load_checkpoint(DENOISER_CHECKPOINT, DenoiserModel)
        enc: JsccEncoder | None = (
            self.load_checkpoint(ENCODER_CHECKPOINT, JsccEncoder)
            if self.has_checkpoint(ENCODER_CHECKPOINT)
            else None
        )

        sigma2: float = float(snr_db_to_sigma2(cfg.sample.snr_db))
        m: int = select_m(s, sigma2, cfg.schedule.target_factor)
        gen: np.random.Generator = RngStream(
            seed=cfg.seed, stream_id=STREAM_SAMPLE
        ).generator()
        _, x = channel_inputs(cfg, enc, cfg.sample.batch_size, gen)
        ch: ChannelRealization = sample_channel(
            cfg.channel, cfg.k, sigma2, gen, (cfg.sample.batch_size,)
        )
        y_r: np.ndarray = receive(x, ch, gen)
        y: np.ndarray = sample(model, y_r, ch, s, m)
        logger.info(
            "Sample at %.3g dB (m=%d): MSE with %.6g, without %.6g",
            cfg.sample.snr_db,
            m,
            float(np.mean(np.square(y - x))),
            float(np.mean(np.square(y_r - x))),
        )

        path = self.out_dir / SAMPLES_NAME
        with open(path, "wb") as file:
            write_npz(
                file,
                {
                    "x": x,
                    "y_r": y_r,
                    "y": y,
                    "h_r": ch.h_r,
                    "m": np.array(m, dtype=np.int64),
                    "sigma2": np.array(sigma2),
                },
            )
        self.outputs.append(path)
        return 0


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class SweepMseExperiment(Experiment):
    command: ClassVar[str] = "sweep-mse"

    def plan(self) -> list[str]:
        sweep = self.config.sweep
        return [
            f"MSE sweep over {sweep.snr_db} dB, {sweep.trials} trials each",
            f"write {MSE_SWEEP_NAME}",
        ]

    def execute(self) -> int:
        model: DenoiserModel = self.load_checkpoint(DENOISER_CHECKPOINT, DenoiserModel)
        enc: JsccEncoder | None = None
        if self.config.source.dim != 2 * self.config.k:
            enc = self.load_checkpoint(ENCODER_CHECKPOINT, JsccEncoder)
        self.save_records(MSE_SWEEP_NAME, mse_sweep(self.config, model, enc))
        return 0


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class SweepPsnrExperiment(Experiment):
    command: ClassVar[str] = "sweep-psnr"

    def plan(self) -> list[str]:
        sweep = self.config.sweep
        retrain: str = "retrain decoder per SNR, " if sweep.retrain_decoder else ""
        return [
            f"PSNR sweep over {sweep.snr_db} dB, {retrain}{sweep.trials} trials each",
            f"write {PSNR_SWEEP_NAME}",
        ]

    def execute(self) -> int:
        model: DenoiserModel = self.load_checkpoint(DENOISER_CHECKPOINT, DenoiserModel)
        enc: JsccEncoder = self.load_checkpoint(ENCODER_CHECKPOINT, JsccEncoder)
        dec: JsccDecoder = self.load_checkpoint(DECODER_CHECKPOINT, JsccDecoder)
        joint_dec: JsccDecoder | None = None
        if not self.config.sweep.retrain_decoder:
            joint_dec = self.load_checkpoint(JOINT_DECODER_CHECKPOINT, JsccDecoder)
        records = psnr_sweep(self.config, enc, dec, model, joint_dec=joint_dec)
        self.save_records(PSNR_SWEEP_NAME, records)
        return 0
