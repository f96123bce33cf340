from __future__ import annotations

import inspect
import json
import os
import shutil
import zipfile
from pathlib import Path
from typing import Any, BinaryIO, ClassVar

import attrs
import numpy as np

import cddmpy.conversion
from cddmpy.conversion import CDDM_CONVERTER

REGISTRY: dict[str, type[Data]] = {}

FORMAT_VERSION: int = 1
RESERVED_KEYS: tuple[str, ...] = ("name", "format_version", "metadata")
# Fixed member timestamps keep archives byte-identical across runs.
NPZ_TIMESTAMP: tuple[int, ...] = (1980, 1, 1, 0, 0, 0)


def registry_key(cls: type) -> str:
    return cddmpy.conversion.insert_underscores(cls.__name__).lower()


def as_saved_array(value: Any) -> np.ndarray:
    if isinstance(value, tuple):
        return np.array(value, dtype=np.int64)
    return np.asarray(value)


def normalize_saved_value(value: Any) -> Any:
    if isinstance(value, np.ndarray) and value.shape == ():
        return value.item()
    return value


def write_npz(file: BinaryIO, arrays: dict[str, np.ndarray]) -> None:
    with zipfile.ZipFile(file, "w", compression=zipfile.ZIP_STORED) as archive:
        for name in sorted(arrays):
            info = zipfile.ZipInfo(f"{name}.npy", date_time=NPZ_TIMESTAMP)
            with archive.open(info, "w", force_zip64=True) as member:
                np.lib.format.write_array(member, arrays[name], allow_pickle=False)


def read_npz(path: str | Path) -> dict[str, np.ndarray]:
    with np.load(path, allow_pickle=False) as data:
        return {key: data[key] for key in data.files}


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class Data:
    format_version: ClassVar[int] = FORMAT_VERSION

    metadata: dict[str, Any] = attrs.field(
        factory=dict,
        init=False,
        repr=False,
    )

    def __attrs_post_init__(self) -> None:
        self.metadata["name"] = registry_key(type(self))

    @classmethod
    def __attrs_init_subclass__(cls) -> None:
        if not inspect.isabstract(cls):
            REGISTRY[registry_key(cls)] = cls

    @classmethod
    def load(cls, path: str | Path) -> Data:
        data: Data = CDDM_CONVERTER.structure(Path(path), cls)
        if not isinstance(data, cls):
            raise TypeError(f"Expected {cls.__name__}, got {type(data).__name__}.")
        return data

    def to_arrays(self) -> dict[str, np.ndarray]:
        arrays: dict[str, np.ndarray] = {
            name: as_saved_array(getattr(self, name))
            for name, attr in attrs.fields_dict(type(self)).items()
            if attr.init
        }
        arrays["name"] = np.array(registry_key(type(self)))
        arrays["format_version"] = np.array(type(self).format_version, dtype=np.int64)
        arrays["metadata"] = np.array(json.dumps(self.metadata, sort_keys=True))
        return arrays

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp_path: Path = path.with_suffix(path.suffix + ".tmp")
        with open(tmp_path, "wb") as file:
            write_npz(file, self.to_arrays())
            file.flush()
            os.fsync(file.fileno())
        shutil.move(tmp_path, path)
        return path


def data_structure_hook(src: str | Path | dict[str, Any] | Data, _) -> Data:
    if isinstance(src, Data):
        return src
    if isinstance(src, (str, Path)):
        src = read_npz(src)
    if not isinstance(src, dict):
        raise TypeError(f"Expected path or dict, got {type(src).__name__}.")

    key: str = str(normalize_saved_value(src["name"]))
    if key not in REGISTRY:
        raise ValueError(f"No registered Data class named `{key}`.")
    version: int = int(normalize_saved_value(src.get("format_version", FORMAT_VERSION)))
    data_cls: type[Data] = REGISTRY[key]
    if version != data_cls.format_version:
        raise ValueError(
            f"`{key}` format version {version} is not {data_cls.format_version}."
        )

    init_kwargs: dict[str, Any] = {
        name: normalize_saved_value(src[name])
        for name, attr in attrs.fields_dict(data_cls).items()
        if attr.init and name in src and name not in RESERVED_KEYS
    }
    data: Data = data_cls(**init_kwargs)
    if "metadata" in src:
        data.metadata.update(json.loads(str(normalize_saved_value(src["metadata"]))))
    return data


CDDM_CONVERTER.register_structure_hook(Data, data_structure_hook)
