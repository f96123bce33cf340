import numpy as np

from .errors import DimensionError, DomainError


def validate_even_length(length: int) -> None:
    if length % 2 != 0 or length < 2:
        raise DimensionError("Real signals must have an even length 2k with k >= 1.")


def validate_matching_length(name: str, actual: int, expected: int) -> None:
    if actual != expected:
        raise DimensionError(f"`{name}` has length {actual}, expected {expected}.")


def validate_non_negative(name: str, value: float) -> None:
    if not np.isfinite(value) or value < 0.0:
        raise DomainError(f"`{name}` must be a finite non-negative number.")


def validate_step(t: int | np.ndarray, lower: int, upper: int) -> None:
    steps = np.asarray(t)
    if np.any(steps < lower) or np.any(steps > upper):
        raise DomainError(f"Step index must lie in [{lower}, {upper}].")
