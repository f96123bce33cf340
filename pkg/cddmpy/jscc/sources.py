from __future__ import annotations

import inspect
from abc import ABC, abstractmethod
from typing import Any, ClassVar

import attrs
import numpy as np

import cddmpy.conversion
from cddmpy.conversion import CDDM_CONVERTER
from cddmpy.streams import RngLike, as_generator

KIND: str = "source"

REGISTRY: dict[str, type[SourceSampler]] = {}

DIM_DEFAULT: int = 256
COMPONENTS_DEFAULT: int = 4
SPREAD_DEFAULT: float = 1.0
NOISE_STD_DEFAULT: float = 0.3
MIXTURE_SEED_DEFAULT: int = 0
SPARSITY_DEFAULT: float = 0.05
AMPLITUDE_DEFAULT: float = 1.0
SIDE_DEFAULT: int = 8

# Patch pixels: uniform offset in [0.3, 0.7] plus a cosine of amplitude <= 0.3.
PATCH_OFFSET_RANGE: tuple[float, float] = (0.3, 0.7)
PATCH_AMPLITUDE_MAX: float = 0.3
PATCH_MAX_FREQUENCY: int = 2


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class SourceSampler(ABC):
    """Generator of source vectors `s` of fixed length `dim`."""

    kind: ClassVar[str] = KIND

    @classmethod
    def __attrs_init_subclass__(cls) -> None:
        if inspect.isabstract(cls):
            return

        REGISTRY[cddmpy.conversion.to_registry_key(cls.kind)] = cls

    @classmethod
    def create(cls, src: dict[str, Any] | SourceSampler) -> SourceSampler:
        return CDDM_CONVERTER.structure(src, cls)

    @property
    @abstractmethod
    def dim(self) -> int:
        pass

    @property
    @abstractmethod
    def peak(self) -> float:
        """Range width used as the PSNR peak value."""

    @property
    @abstractmethod
    def variance(self) -> float:
        """Per-dimension variance averaged over dimensions."""

    @abstractmethod
    def draw(self, batch: int, gen: np.random.Generator) -> np.ndarray:
        pass

    def sample(self, batch: int, rng: RngLike) -> np.ndarray:
        if int(batch) < 1:
            raise ValueError("`batch` must be at least 1.")
        return self.draw(int(batch), as_generator(rng))

    def unstructure(self) -> dict[str, Any]:
        return CDDM_CONVERTER.unstructure(self, SourceSampler)


def compute_mixture_means(source: GaussianMixtureSource) -> np.ndarray:
    gen: np.random.Generator = np.random.default_rng(source.mixture_seed)
    means: np.ndarray = gen.normal(0.0, source.spread, (source.components, source.n))
    means.setflags(write=False)
    return means


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class GaussianMixtureSource(SourceSampler):
    """Equal-weight mixture of isotropic Gaussians with fixed random means."""

    kind: ClassVar[str] = "gaussian_mixture"

    n: int = attrs.field(
        default=DIM_DEFAULT, converter=int, validator=attrs.validators.ge(1)
    )
    components: int = attrs.field(
        default=COMPONENTS_DEFAULT, converter=int, validator=attrs.validators.ge(1)
    )
    spread: float = attrs.field(
        default=SPREAD_DEFAULT, converter=float, validator=attrs.validators.ge(0)
    )
    noise_std: float = attrs.field(
        default=NOISE_STD_DEFAULT, converter=float, validator=attrs.validators.ge(0)
    )
    mixture_seed: int = attrs.field(default=MIXTURE_SEED_DEFAULT, converter=int)

    means: np.ndarray = attrs.field(
        default=attrs.Factory(compute_mixture_means, takes_self=True),
        init=False,
        repr=False,
    )

    @property
    def dim(self) -> int:
        return self.n

    @property
    def peak(self) -> float:
        return 2.0 * (float(np.max(np.abs(self.means))) + 3.0 * self.noise_std)

    @property
    def variance(self) -> float:
        centered: np.ndarray = self.means - self.means.mean(axis=0)
        return float(np.mean(np.square(centered))) + self.noise_std**2

    def draw(self, batch: int, gen: np.random.Generator) -> np.ndarray:
        labels: np.ndarray = gen.integers(0, self.components, size=batch)
        return self.means[labels] + self.noise_std * gen.standard_normal(
            (batch, self.n)
        )


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class SparseSpikeSource(SourceSampler):
    """Entries are `+-amplitude` with probability `sparsity` and zero otherwise."""

    kind: ClassVar[str] = "sparse_spike"

    n: int = attrs.field(
        default=DIM_DEFAULT, converter=int, validator=attrs.validators.ge(1)
    )
    sparsity: float = attrs.field(
        default=SPARSITY_DEFAULT,
        converter=float,
        validator=[attrs.validators.ge(0), attrs.validators.le(1)],
    )
    amplitude: float = attrs.field(
        default=AMPLITUDE_DEFAULT, converter=float, validator=attrs.validators.gt(0)
    )

    @property
    def dim(self) -> int:
        return self.n

    @property
    def peak(self) -> float:
        return 2.0 * self.amplitude

    @property
    def variance(self) -> float:
        return self.sparsity * self.amplitude**2

    def draw(self, batch: int, gen: np.random.Generator) -> np.ndarray:
        active: np.ndarray = gen.random((batch, self.n)) < self.sparsity
        signs: np.ndarray = np.where(gen.random((batch, self.n)) < 0.5, -1.0, 1.0)
        return self.amplitude * active * signs


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class TinyImageSource(SourceSampler):
    """Flattened `side x side` grayscale patches in [0, 1]."""

    kind: ClassVar[str] = "tiny_image"

    side: int = attrs.field(
        default=SIDE_DEFAULT, converter=int, validator=attrs.validators.ge(1)
    )

    @property
    def dim(self) -> int:
        return self.side**2

    @property
    def peak(self) -> float:
        return 1.0

    @property
    def variance(self) -> float:
        low, high = PATCH_OFFSET_RANGE
        return (high - low) ** 2 / 12.0 + PATCH_AMPLITUDE_MAX**2 / 6.0

    def draw(self, batch: int, gen: np.random.Generator) -> np.ndarray:
        offset: np.ndarray = gen.uniform(*PATCH_OFFSET_RANGE, size=(batch, 1, 1))
        amplitude: np.ndarray = gen.uniform(0.0, PATCH_AMPLITUDE_MAX, (batch, 1, 1))
        freqs: np.ndarray = gen.integers(0, PATCH_MAX_FREQUENCY + 1, (batch, 2, 1, 1))
        phase: np.ndarray = gen.uniform(0.0, 2.0 * np.pi, (batch, 1, 1))

        rows, cols = np.meshgrid(
            np.arange(self.side), np.arange(self.side), indexing="ij"
        )
        angle: np.ndarray = (
            2.0 * np.pi * (freqs[:, 0] * rows + freqs[:, 1] * cols) / self.side + phase
        )
        patches: np.ndarray = offset + amplitude * np.cos(angle)
        return patches.reshape(batch, self.dim)


@CDDM_CONVERTER.register_structure_hook
def structure_hook_for_source(src: dict | Any, _) -> SourceSampler:
    if type(src) in REGISTRY.values():
        return src

    source_dict: dict[str, Any] = cddmpy.conversion.normalize_dict(src, REGISTRY)
    key: str = cddmpy.conversion.to_registry_key(src["name"])
    return REGISTRY[key](**source_dict["args"])


@CDDM_CONVERTER.register_unstructure_hook
def unstructure_hook_for_source(source: SourceSampler) -> dict[str, Any]:
    args: dict[str, Any] = {
        name: CDDM_CONVERTER.unstructure(getattr(source, name))
        for name, attr in attrs.fields_dict(type(source)).items()
        if attr.init
    }
    return {"name": type(source).kind, "args": args}
