from __future__ import annotations

from collections.abc import Iterator
from typing import Any

import attrs
import numpy as np
from scipy.special import expit

import cddmpy.validators


def silu(x: np.ndarray) -> np.ndarray:
    return x * expit(x)


def silu_derivative(x: np.ndarray) -> np.ndarray:
    sigmoid: np.ndarray = expit(x)
    return sigmoid * (1.0 + x * (1.0 - sigmoid))


def convert_widths(widths: Any) -> tuple[int, ...]:
    return tuple(int(width) for width in np.asarray(widths).reshape(-1))


def validate_widths(_, __, widths: tuple[int, ...]) -> None:
    if any(width < 1 for width in widths):
        raise ValueError("`hidden_widths` entries must be at least 1.")


@attrs.frozen(kw_only=True, weakref_slot=False, getstate_setstate=False)
class ParamBlock:
    name: str
    shape: tuple[int, ...]
    offset: int

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


def compute_blocks(layout: MlpLayout) -> tuple[ParamBlock, ...]:
    blocks: list[ParamBlock] = []
    offset: int = 0

    def add(name: str, shape: tuple[int, ...]) -> None:
        nonlocal offset
        blocks.append(ParamBlock(name=name, shape=shape, offset=offset))
        offset += int(np.prod(shape))

    fan_in: int = layout.input_dim
    for index, width in enumerate(layout.hidden_widths):
        add(f"hidden_{index}.weight", (width, fan_in))
        add(f"hidden_{index}.bias", (width,))
        if layout.cond_dim > 0:
            add(f"hidden_{index}.cond", (width, layout.cond_dim))
        fan_in = width
    add("output.weight", (layout.output_dim, fan_in))
    add("output.bias", (layout.output_dim,))
    return tuple(blocks)


@attrs.frozen(kw_only=True, weakref_slot=False, getstate_setstate=False)
class MlpLayout:
    """Flat-vector layout of a residual SiLU perceptron.

    Each hidden layer computes `silu(W a + b + U c)` where `c` is the optional
    conditioning vector; layers whose width equals their fan-in add the skip
    connection `a`. With no hidden layers the map is affine.
    """

    input_dim: int = attrs.field(converter=int, validator=attrs.validators.ge(1))
    output_dim: int = attrs.field(converter=int, validator=attrs.validators.ge(1))
    hidden_widths: tuple[int, ...] = attrs.field(
        default=(), converter=convert_widths, validator=validate_widths
    )
    cond_dim: int = attrs.field(
        default=0, converter=int, validator=attrs.validators.ge(0)
    )

    blocks: tuple[ParamBlock, ...] = attrs.field(
        default=attrs.Factory(compute_blocks, takes_self=True),
        init=False,
        repr=False,
        eq=False,
    )

    @property
    def num_params(self) -> int:
        last: ParamBlock = self.blocks[-1]
        return last.offset + last.size

    def is_residual(self, index: int) -> bool:
        fan_in: int = self.input_dim if index == 0 else self.hidden_widths[index - 1]
        return index > 0 and fan_in == self.hidden_widths[index]

    def views(self, flat: np.ndarray) -> dict[str, np.ndarray]:
        cddmpy.validators.validate_matching_length("params", flat.size, self.num_params)
        return {
            block.name: flat[block.offset : block.offset + block.size].reshape(
                block.shape
            )
            for block in self.blocks
        }

    def iter_weight_blocks(self) -> Iterator[ParamBlock]:
        return (block for block in self.blocks if not block.name.endswith(".bias"))


def init_params(layout: MlpLayout, rng: np.random.Generator) -> np.ndarray:
    params: np.ndarray = np.zeros(layout.num_params, dtype=np.float64)
    for block in layout.iter_weight_blocks():
        fan_in: int = block.shape[1]
        params[block.offset : block.offset + block.size] = rng.normal(
            0.0, 1.0 / np.sqrt(fan_in), size=block.size
        )
    return params


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class ForwardCache:
    activations: list[np.ndarray]
    pre_activations: list[np.ndarray]
    cond: np.ndarray | None


def forward(
    layout: MlpLayout,
    params: np.ndarray,
    inputs: np.ndarray,
    cond: np.ndarray | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    weights: dict[str, np.ndarray] = layout.views(params)
    activation: np.ndarray = np.atleast_2d(inputs)
    activations: list[np.ndarray] = [activation]
    pre_activations: list[np.ndarray] = []

    for index in range(len(layout.hidden_widths)):
        pre: np.ndarray = (
            activation @ weights[f"hidden_{index}.weight"].T
            + weights[f"hidden_{index}.bias"]
        )
        if layout.cond_dim > 0:
            pre = pre + cond @ weights[f"hidden_{index}.cond"].T
        output: np.ndarray = silu(pre)
        if layout.is_residual(index):
            output = output + activation
        pre_activations.append(pre)
        activations.append(output)
        activation = output

    result: np.ndarray = (
        activation @ weights["output.weight"].T + weights["output.bias"]
    )
    return result, ForwardCache(
        activations=activations, pre_activations=pre_activations, cond=cond
    )


def backward(
    layout: MlpLayout,
    params: np.ndarray,
    cache: ForwardCache,
    grad_output: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients w.r.t. the flat parameters and the network inputs."""
    weights: dict[str, np.ndarray] = layout.views(params)
    grad_params: np.ndarray = np.zeros_like(params)
    grads: dict[str, np.ndarray] = layout.views(grad_params)

    grad_output = np.atleast_2d(grad_output)
    grads["output.weight"][...] = grad_output.T @ cache.activations[-1]
    grads["output.bias"][...] = grad_output.sum(axis=0)
    grad_act: np.ndarray = grad_output @ weights["output.weight"]

    for index in reversed(range(len(layout.hidden_widths))):
        grad_pre: np.ndarray = grad_act * silu_derivative(cache.pre_activations[index])
        grads[f"hidden_{index}.weight"][...] = grad_pre.T @ cache.activations[index]
        grads[f"hidden_{index}.bias"][...] = grad_pre.sum(axis=0)
        if layout.cond_dim > 0:
            grads[f"hidden_{index}.cond"][...] = grad_pre.T @ cache.cond
        grad_in: np.ndarray = grad_pre @ weights[f"hidden_{index}.weight"]
        if layout.is_residual(index):
            grad_in = grad_in + grad_act
        grad_act = grad_in

    return grad_params, grad_act
