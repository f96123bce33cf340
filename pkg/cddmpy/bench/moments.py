from __future__ import annotations

import attrs
import numba
import numpy as np


@numba.njit(cache=True)
def accumulate_moments(
    samples: np.ndarray, count: np.ndarray, mean: np.ndarray, m2: np.ndarray
) -> None:
    for row in range(samples.shape[0]):
        count[0] += 1
        total = count[0]
        for col in range(samples.shape[1]):
            delta = samples[row, col] - mean[col]
            mean[col] += delta / total
            m2[col] += delta * (samples[row, col] - mean[col])


def create_zeroed_moments(acc: MomentAccumulator) -> np.ndarray:
    return np.zeros(acc.dim, dtype=np.float64)


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class MomentAccumulator:
    """Running per-dimension mean and variance over streamed sample rows."""

    dim: int = attrs.field(converter=int, validator=attrs.validators.gt(0))

    mean: np.ndarray = attrs.field(
        default=attrs.Factory(create_zeroed_moments, takes_self=True),
        init=False,
        repr=False,
    )
    _m2: np.ndarray = attrs.field(
        default=attrs.Factory(create_zeroed_moments, takes_self=True),
        init=False,
        repr=False,
    )
    _count: np.ndarray = attrs.field(
        init=False, factory=lambda: np.zeros((1,), dtype=np.int64)
    )

    @property
    def count(self) -> int:
        return int(self._count[0])

    @property
    def variance(self) -> np.ndarray:
        if self.count < 2:
            return np.full(self.dim, np.nan)
        return self._m2 / (self.count - 1)

    def add(self, samples: np.ndarray) -> None:
        rows: np.ndarray = np.ascontiguousarray(
            np.asarray(samples, dtype=np.float64).reshape(-1, self.dim)
        )
        accumulate_moments(rows, self._count, self.mean, self._m2)


def relative_moment_errors(
    mean: np.ndarray,
    variance: np.ndarray,
    expected_mean: np.ndarray,
    expected_variance: np.ndarray,
) -> tuple[float, float]:
    """Worst-dimension mean and variance errors.

    Mean errors are scaled by the root-mean-square size of a draw so that
    near-zero means do not blow up; variance errors are relative per dimension.
    """
    scale: float = float(
        np.sqrt(np.mean(np.square(expected_mean) + expected_variance))
    )
    mean_error: float = float(np.max(np.abs(mean - expected_mean))) / scale
    live: np.ndarray = expected_variance > 0.0
    if not np.any(live):
        return mean_error, float(np.max(np.abs(variance)))
    expected: np.ndarray = expected_variance[live]
    var_error: float = float(np.max(np.abs(variance[live] - expected) / expected))
    return mean_error, var_error
