from typing import TypeAlias

import numpy as np

import cddmpy.validators

RealSignal: TypeAlias = np.ndarray
ComplexSignal: TypeAlias = np.ndarray

POWER_TOLERANCE: float = 1e-6


def channel_uses(x: RealSignal) -> int:
    length: int = np.shape(x)[-1]
    cddmpy.validators.validate_even_length(length)
    return length // 2


def complex_from_real(x: RealSignal) -> ComplexSignal:
    x = np.asarray(x, dtype=np.float64)
    k: int = channel_uses(x)
    return x[..., :k] + 1j * x[..., k:]


def real_from_complex(y: ComplexSignal) -> RealSignal:
    y = np.asarray(y, dtype=np.complex128)
    return np.concatenate([y.real, y.imag], axis=-1)


def stack_halves(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    return np.concatenate([values, values], axis=-1)


def complex_symbol_power(x: RealSignal) -> float:
    """Average power per complex symbol over every leading axis."""
    x = np.asarray(x, dtype=np.float64)
    return float(2.0 * np.mean(np.square(x)))


def satisfies_power_constraint(x: RealSignal, tol: float = POWER_TOLERANCE) -> bool:
    return complex_symbol_power(x) <= 1.0 + tol
