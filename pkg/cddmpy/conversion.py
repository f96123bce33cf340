import hashlib
import json
import re
from pathlib import Path
from typing import Any

import attrs
import cattrs
import numpy as np

CDDM_CONVERTER: cattrs.Converter = cattrs.Converter(forbid_extra_keys=True)

# Element types are left to the attrs converters of the fields.
SEQUENCE_TYPES: tuple[Any, ...] = (tuple[int, ...], tuple[float, ...], tuple[str, ...])

HASH_HEX_DIGITS: int = 16


def create_hashed_id(array: np.ndarray, num_hex: int = HASH_HEX_DIGITS) -> str:
    hash_object = hashlib.sha256()
    hash_object.update(str(array.dtype).encode())
    hash_object.update(str(array.shape).encode())
    hash_object.update(np.ascontiguousarray(array).tobytes())
    return hash_object.hexdigest()[:num_hex]


def hash_json(payload: Any, num_hex: int = HASH_HEX_DIGITS) -> str:
    text: str = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:num_hex]


def hash_file(path: str | Path) -> str:
    hash_object = hashlib.sha256()
    with open(path, "rb") as file:
        for block in iter(lambda: file.read(1 << 20), b""):
            hash_object.update(block)
    return hash_object.hexdigest()


def insert_underscores(string: str) -> str:
    string = re.sub(r"([a-z0-9])([A-Z])", r"\1_\2", string)
    return re.sub(r"([A-Z]+)([A-Z][a-z])", r"\1_\2", string)


def normalize_dict(src: dict[str, Any], registry: dict[str, type]) -> dict[str, Any]:
    if not isinstance(src, dict):
        raise TypeError(f"Expected a dictionary, got {type(src).__name__}.")

    name: str | None = src.get("name")
    if name is None or to_registry_key(name) not in registry:
        raise KeyError(f"Registered class name not found in {sorted(registry)}.")

    registered_cls: type = registry[to_registry_key(name)]
    cls_args: set[str] = {
        arg for arg, attr in attrs.fields_dict(registered_cls).items() if attr.init
    }
    args: dict[str, Any] = dict(src.get("args", {}))
    unknown: set[str] = set(args) - cls_args
    if unknown:
        raise KeyError(f"Unknown arguments for `{name}`: {sorted(unknown)}.")

    return {"name": registered_cls.__name__, "args": args}


def to_registry_key(string: str) -> str:
    return re.sub(r"[_\- ]", "", string).lower()


def as_sequence(values: Any) -> tuple:
    """A bare string or scalar becomes a one-element tuple."""
    if isinstance(values, str) or np.ndim(values) == 0:
        return (values,)
    return tuple(values)


CDDM_CONVERTER.register_structure_hook_func(
    lambda cls: cls in SEQUENCE_TYPES, lambda values, _: as_sequence(values)
)
