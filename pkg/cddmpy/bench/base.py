from __future__ import annotations

import inspect
import json
import logging
from abc import ABC, abstractmethod
from collections.abc import Sequence
from pathlib import Path
from typing import Any, ClassVar, TypeVar

import attrs

import cddmpy.conversion
import cddmpy.resources
from cddmpy.data import Data
from cddmpy.errors import ConfigError

from .config import ExperimentConfig
from .records import CURVE_COLUMNS, SweepRecord, write_records, write_rows

logger = logging.getLogger(__name__)

DataT = TypeVar("DataT", bound=Data)

REGISTRY: dict[str, type[Experiment]] = {}

CHECKPOINT_DIR: str = "checkpoints"
MANIFEST_NAME: str = "manifest.json"
CURVES_NAME: str = "training_curves.csv"
SNR_CONVENTION: str = "snr_db = 10 log10(1 / (2 sigma2)), sigma2 per real dimension"

STREAM_INIT: int = 3
STREAM_TRAIN: int = 4
STREAM_SAMPLE: int = 8


def lookup_experiment(command: str) -> type[Experiment]:
    key: str = cddmpy.conversion.to_registry_key(command)
    if key not in REGISTRY:
        raise ConfigError(f"Unknown command `{command}`; known: {sorted(REGISTRY)}.")
    return REGISTRY[key]


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class Experiment(ABC):
    command: ClassVar[str] = "experiment"

    config: ExperimentConfig

    outputs: list[Path] = attrs.field(factory=list, init=False, repr=False)
    metadata: dict[str, Any] = attrs.field(factory=dict, init=False, repr=False)

    def __attrs_post_init__(self) -> None:
        self.metadata["command"] = type(self).command
        self.metadata["config_hash"] = self.config_hash
        self.metadata["seed"] = self.config.seed

    @classmethod
    def __attrs_init_subclass__(cls) -> None:
        if not inspect.isabstract(cls):
            REGISTRY[cddmpy.conversion.to_registry_key(cls.command)] = cls

    @classmethod
    def create(cls, command: str, config: ExperimentConfig) -> Experiment:
        return lookup_experiment(command)(config=config)

    @property
    def config_hash(self) -> str:
        return self.config.config_hash()

    @property
    def out_dir(self) -> Path:
        return self.config.out_dir

    @property
    def checkpoint_dir(self) -> Path:
        return self.out_dir / CHECKPOINT_DIR

    @abstractmethod
    def plan(self) -> list[str]:
        pass

    @abstractmethod
    def execute(self) -> int:
        pass

    def run(self, dry_run: bool = False, write_manifest: bool = True) -> int:
        if dry_run:
            for line in self.plan():
                logger.info("[dry-run] %s", line)
            return 0

        self.out_dir.mkdir(parents=True, exist_ok=True)
        logger.info(
            "Running `%s` (config %s, seed %d, rss %.1f MiB).",
            type(self).command,
            self.config_hash,
            self.config.seed,
            cddmpy.resources.resident_memory_mb(),
        )
        status: int = self.execute()
        if write_manifest:
            self.save_manifest()
        return status

    def checkpoint_path(self, name: str) -> Path:
        return self.checkpoint_dir / name

    def has_checkpoint(self, name: str) -> bool:
        return self.checkpoint_path(name).is_file()

    def load_checkpoint(self, name: str, cls: type[DataT]) -> DataT:
        path: Path = self.checkpoint_path(name)
        if not path.is_file():
            raise ConfigError(f"Missing checkpoint `{path}`.")
        return cls.load(path)

    def save_checkpoint(self, data: Data, name: str) -> Path:
        data.metadata["config_hash"] = self.config_hash
        path: Path = data.save(self.checkpoint_path(name))
        self.outputs.append(path)
        return path

    def save_records(self, name: str, records: Sequence[SweepRecord]) -> Path:
        path: Path = write_records(
            self.out_dir / name, records, self.config_hash, self.config.seed
        )
        self.outputs.append(path)
        return path

    def save_curves(self, rows: Sequence[tuple[str, int, float]]) -> Path:
        path: Path = write_rows(
            self.out_dir / CURVES_NAME,
            CURVE_COLUMNS,
            rows,
            self.config_hash,
            self.config.seed,
        )
        self.outputs.append(path)
        return path

    def save_json(self, name: str, payload: dict[str, Any]) -> Path:
        path: Path = self.out_dir / name
        with open(path, "w") as file:
            json.dump(payload, file, indent=4, sort_keys=True, default=str)
        self.outputs.append(path)
        return path

    def manifest(self) -> dict[str, Any]:
        checkpoints: dict[str, str] = {}
        if self.checkpoint_dir.is_dir():
            checkpoints = {
                path.name: cddmpy.conversion.hash_file(path)
                for path in sorted(self.checkpoint_dir.glob("*.npz"))
            }
        outputs: list[str] = sorted(
            {str(path.relative_to(self.out_dir)) for path in self.outputs}
        )
        return {
            **self.metadata,
            "config": self.config.unstructure(),
            "snr_convention": SNR_CONVENTION,
            "checkpoints": checkpoints,
            "outputs": outputs,
            "host": cddmpy.resources.host_info(),
        }

    def save_manifest(self) -> Path:
        path: Path = self.out_dir / MANIFEST_NAME
        with open(path, "w") as file:
            json.dump(self.manifest(), file, indent=4, default=str)
        return path
