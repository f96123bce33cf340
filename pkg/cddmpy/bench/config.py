from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import attrs
import cattrs

import cddmpy.conversion
from cddmpy.channels import lookup_channel_model
from cddmpy.conversion import CDDM_CONVERTER, as_sequence
from cddmpy.diffusion.schedule import (
    ALPHA_FIRST_DEFAULT,
    ALPHA_LAST_DEFAULT,
    NUM_STEPS_DEFAULT,
    TARGET_FACTOR_DEFAULT,
    NoiseSchedule,
    linear_schedule,
    validate_target_factor,
)
from cddmpy.diffusion.training import TrainConfig
from cddmpy.errors import ConfigError, DomainError
from cddmpy.jscc.sources import GaussianMixtureSource, SourceSampler
from cddmpy.jscc.training import JsccConfig
from cddmpy.networks.denoiser import HIDDEN_WIDTHS_DEFAULT, TIME_DIM_DEFAULT
from cddmpy.networks.mlp import convert_widths, validate_widths
from cddmpy.streams import validate_u64

SNR_GRID_DEFAULT: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
CONFORMANCE_SIGMA2_DEFAULT: tuple[float, ...] = (0.005, 0.05, 0.5)
CONFORMANCE_MODES_DEFAULT: tuple[str, ...] = ("awgn", "rayleigh")
FORWARD_STEPS_DEFAULT: tuple[int, ...] = (1, 100, 1000)
MEAN_TOLERANCE_DEFAULT: float = 0.01
VARIANCE_TOLERANCE_DEFAULT: float = 0.02
OUTPUT_DIR_DEFAULT: str = "output"


def convert_floats(values: Any) -> tuple[float, ...]:
    return tuple(float(value) for value in as_sequence(values))


def convert_ints(values: Any) -> tuple[int, ...]:
    return tuple(int(value) for value in as_sequence(values))


def convert_strings(values: Any) -> tuple[str, ...]:
    return tuple(str(value) for value in as_sequence(values))


def validate_channel_mode(_, __, mode: str) -> None:
    lookup_channel_model(mode)


def validate_channel_modes(_, __, modes: tuple[str, ...]) -> None:
    for mode in modes:
        lookup_channel_model(mode)


def validate_non_empty(_, attr: attrs.Attribute, values: tuple) -> None:
    if len(values) == 0:
        raise ValueError(f"`{attr.name}` must not be empty.")


@attrs.frozen(kw_only=True, weakref_slot=False, getstate_setstate=False)
class ScheduleConfig:
    num_steps: int = attrs.field(
        default=NUM_STEPS_DEFAULT, converter=int, validator=attrs.validators.ge(1)
    )
    alpha_first: float = attrs.field(default=ALPHA_FIRST_DEFAULT, converter=float)
    alpha_last: float = attrs.field(default=ALPHA_LAST_DEFAULT, converter=float)
    target_factor: int = attrs.field(
        default=TARGET_FACTOR_DEFAULT,
        converter=int,
        validator=lambda _, __, value: validate_target_factor(value),
    )

    def build(self) -> NoiseSchedule:
        return linear_schedule(self.num_steps, self.alpha_first, self.alpha_last)


@attrs.frozen(kw_only=True, weakref_slot=False, getstate_setstate=False)
class DenoiserConfig:
    hidden_widths: tuple[int, ...] = attrs.field(
        default=HIDDEN_WIDTHS_DEFAULT,
        converter=convert_widths,
        validator=validate_widths,
    )
    time_dim: int = attrs.field(default=TIME_DIM_DEFAULT, converter=int)


@attrs.frozen(kw_only=True, weakref_slot=False, getstate_setstate=False)
class SweepConfig:
    snr_db: tuple[float, ...] = attrs.field(
        default=SNR_GRID_DEFAULT, converter=convert_floats, validator=validate_non_empty
    )
    trials: int = attrs.field(
        default=10_000, converter=int, validator=attrs.validators.ge(1)
    )
    chunk_size: int = attrs.field(
        default=1_000, converter=int, validator=attrs.validators.ge(1)
    )
    retrain_decoder: bool = attrs.field(default=True, converter=bool)


@attrs.frozen(kw_only=True, weakref_slot=False, getstate_setstate=False)
class ConformanceConfig:
    k: int = attrs.field(default=32, converter=int, validator=attrs.validators.ge(1))
    sigma2: tuple[float, ...] = attrs.field(
        default=CONFORMANCE_SIGMA2_DEFAULT,
        converter=convert_floats,
        validator=validate_non_empty,
    )
    modes: tuple[str, ...] = attrs.field(
        default=CONFORMANCE_MODES_DEFAULT,
        converter=convert_strings,
        validator=validate_channel_modes,
    )
    trials: int = attrs.field(
        default=100_000, converter=int, validator=attrs.validators.ge(2)
    )
    chunk_size: int = attrs.field(
        default=10_000, converter=int, validator=attrs.validators.ge(1)
    )
    forward_k: int = attrs.field(
        default=8, converter=int, validator=attrs.validators.ge(1)
    )
    forward_steps: tuple[int, ...] = attrs.field(
        default=FORWARD_STEPS_DEFAULT, converter=convert_ints
    )
    forward_trials: int = attrs.field(
        default=100_000, converter=int, validator=attrs.validators.ge(2)
    )
    mean_tolerance: float = attrs.field(
        default=MEAN_TOLERANCE_DEFAULT,
        converter=float,
        validator=attrs.validators.gt(0),
    )
    variance_tolerance: float = attrs.field(
        default=VARIANCE_TOLERANCE_DEFAULT,
        converter=float,
        validator=attrs.validators.gt(0),
    )


@attrs.frozen(kw_only=True, weakref_slot=False, getstate_setstate=False)
class SampleConfig:
    snr_db: float = attrs.field(default=10.0, converter=float)
    batch_size: int = attrs.field(
        default=16, converter=int, validator=attrs.validators.ge(1)
    )


@attrs.frozen(kw_only=True, weakref_slot=False, getstate_setstate=False)
class ExperimentConfig:
    channel: str = attrs.field(
        default="awgn",
        converter=cddmpy.conversion.to_registry_key,
        validator=validate_channel_mode,
    )
    k: int = attrs.field(default=32, converter=int, validator=attrs.validators.ge(1))
    seed: int = attrs.field(
        default=0, converter=int, validator=validate_u64
    )
    out: str = attrs.field(default=OUTPUT_DIR_DEFAULT, converter=str)
    source: SourceSampler = attrs.field(factory=GaussianMixtureSource)

    schedule: ScheduleConfig = attrs.field(factory=ScheduleConfig)
    denoiser: DenoiserConfig = attrs.field(factory=DenoiserConfig)
    train: TrainConfig = attrs.field(factory=TrainConfig)
    jscc: JsccConfig = attrs.field(factory=JsccConfig)
    sweep: SweepConfig = attrs.field(factory=SweepConfig)
    conformance: ConformanceConfig = attrs.field(factory=ConformanceConfig)
    sample: SampleConfig = attrs.field(factory=SampleConfig)

    @property
    def n(self) -> int:
        return self.source.dim

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def unstructure(self) -> dict[str, Any]:
        return CDDM_CONVERTER.unstructure(self)

    def config_hash(self) -> str:
        """Hash of every setting except the output directory."""
        payload: dict[str, Any] = self.unstructure()
        payload.pop("out", None)
        return cddmpy.conversion.hash_json(payload)


def structure_config(src: dict[str, Any]) -> ExperimentConfig:
    try:
        return CDDM_CONVERTER.structure(src, ExperimentConfig)
    except (
        cattrs.BaseValidationError,
        cattrs.ForbiddenExtraKeysError,
        KeyError,
        TypeError,
        ValueError,
    ) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"Invalid experiment config: {exc}") from exc


def load_config(path: str | Path | None = None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        with open(path) as file:
            src: Any = json.load(file)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"Cannot read config `{path}`: {exc}") from exc
    if not isinstance(src, dict):
        raise ConfigError(f"Config `{path}` must hold a JSON object.")
    return structure_config(src)


def apply_overrides(
    cfg: ExperimentConfig, *, seed: int | None = None, out: str | Path | None = None
) -> ExperimentConfig:
    changes: dict[str, Any] = {}
    if seed is not None:
        changes["seed"] = seed
    if out is not None:
        changes["out"] = str(out)
    try:
        return attrs.evolve(cfg, **changes)
    except (DomainError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
