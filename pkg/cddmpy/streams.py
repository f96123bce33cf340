from __future__ import annotations

from typing import TypeAlias

import attrs
import numpy as np

SEED_MAX: int = 2**64 - 1


def validate_u64(_, attribute: attrs.Attribute, value: int) -> None:
    if not 0 <= value <= SEED_MAX:
        raise ValueError(f"`{attribute.name}` must be an unsigned 64-bit integer.")


@attrs.frozen(kw_only=True, weakref_slot=False, getstate_setstate=False)
class RngStream:
    """Named random stream; equal `(seed, stream_id, path)` give equal draws."""

    seed: int = attrs.field(converter=int, validator=validate_u64)
    stream_id: int = attrs.field(default=0, converter=int, validator=validate_u64)
    path: tuple[int, ...] = attrs.field(
        default=(), converter=lambda path: tuple(int(index) for index in path)
    )

    def child(self, index: int) -> RngStream:
        return attrs.evolve(self, path=(*self.path, int(index)))

    def generator(self) -> np.random.Generator:
        seed_seq = np.random.SeedSequence(
            self.seed, spawn_key=(self.stream_id, *self.path)
        )
        return np.random.Generator(np.random.PCG64(seed_seq))


RngLike: TypeAlias = RngStream | np.random.Generator


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    raise TypeError(f"Expected RngStream or Generator, got {type(rng).__name__}.")
