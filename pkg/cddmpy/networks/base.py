from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Any, TypeVar

import attrs
import numpy as np

import cddmpy.conversion
from cddmpy.data import Data

from .adam import adam_update
from .mlp import MlpLayout, convert_widths, validate_widths

NetworkT = TypeVar("NetworkT", bound="Network")


def as_float_array(value: Any) -> np.ndarray:
    return np.array(value, dtype=np.float64).reshape(-1)


def as_step_count(value: Any) -> np.ndarray:
    return np.array(value, dtype=np.int64).reshape(1)


def zeros_like_params(network: Network) -> np.ndarray:
    return np.zeros_like(network.params)


def compute_layout(network: Network) -> MlpLayout:
    return network.build_layout()


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class Network(Data, ABC):
    """Flat parameters plus adaptive-moment state.

    Subclasses declare their dimension fields and a non-init `layout` field
    built with `compute_layout`.
    """

    hidden_widths: tuple[int, ...] = attrs.field(
        converter=convert_widths, validator=validate_widths
    )
    params: np.ndarray = attrs.field(converter=as_float_array, repr=False)
    adam_m: np.ndarray = attrs.field(
        default=attrs.Factory(zeros_like_params, takes_self=True),
        converter=as_float_array,
        repr=False,
    )
    adam_v: np.ndarray = attrs.field(
        default=attrs.Factory(zeros_like_params, takes_self=True),
        converter=as_float_array,
        repr=False,
    )
    step_count: np.ndarray = attrs.field(
        default=0,
        converter=as_step_count,
        repr=False,
    )

    @abstractmethod
    def build_layout(self) -> MlpLayout:
        pass

    def __attrs_post_init__(self) -> None:
        super().__attrs_post_init__()
        for name in ("params", "adam_m", "adam_v"):
            size: int = getattr(self, name).size
            if size != self.layout.num_params:
                raise ValueError(
                    f"`{name}` has {size} entries, layout needs "
                    f"{self.layout.num_params}."
                )

    @property
    def num_params(self) -> int:
        return self.layout.num_params

    @property
    def steps_taken(self) -> int:
        return int(self.step_count[0])

    def param_hash(self) -> str:
        return cddmpy.conversion.create_hashed_id(self.params)

    def copy(self: NetworkT) -> NetworkT:
        kwargs: dict[str, Any] = {
            name: (
                np.copy(getattr(self, name))
                if isinstance(getattr(self, name), np.ndarray)
                else getattr(self, name)
            )
            for name, attr in attrs.fields_dict(type(self)).items()
            if attr.init
        }
        clone: NetworkT = type(self)(**kwargs)
        clone.metadata.update(self.metadata)
        return clone

    def opt_step(self: NetworkT, grad: np.ndarray, lr: float, stage: str) -> NetworkT:
        adam_update(
            self.params,
            self.adam_m,
            self.adam_v,
            self.step_count,
            np.asarray(grad, dtype=np.float64),
            lr,
            stage=stage,
        )
        return self
