from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from pathlib import Path

import attrs
import numpy as np

from cddmpy.channels import snr_db_to_sigma2

CSV_COLUMNS: tuple[str, ...] = (
    "snr_db",
    "sigma2",
    "m",
    "mse_with_cddm",
    "mse_without_cddm",
    "psnr_with",
    "psnr_without",
    "trials",
    "seed",
)
CURVE_COLUMNS: tuple[str, ...] = ("stage", "step", "loss")
FLOAT_FORMAT: str = "%.9g"


def validate_sigma2(record: SweepRecord, _, sigma2: float) -> None:
    expected: float = float(snr_db_to_sigma2(record.snr_db))
    if not math.isclose(sigma2, expected, rel_tol=1e-9, abs_tol=0.0):
        raise ValueError(f"`sigma2`={sigma2} does not match {record.snr_db} dB.")


@attrs.frozen(kw_only=True, weakref_slot=False, getstate_setstate=False)
class SweepRecord:
    snr_db: float = attrs.field(converter=float)
    sigma2: float = attrs.field(converter=float, validator=validate_sigma2)
    m: int = attrs.field(converter=int, validator=attrs.validators.ge(1))
    mse_with_cddm: float = attrs.field(
        converter=float, validator=attrs.validators.ge(0)
    )
    mse_without_cddm: float = attrs.field(
        converter=float, validator=attrs.validators.ge(0)
    )
    psnr_with: float | None = attrs.field(
        default=None, converter=attrs.converters.optional(float)
    )
    psnr_without: float | None = attrs.field(
        default=None, converter=attrs.converters.optional(float)
    )
    trials: int = attrs.field(converter=int, validator=attrs.validators.ge(1))
    seed: int = attrs.field(converter=int)

    @property
    def gain_db(self) -> float:
        return gain_db(self.mse_without_cddm, self.mse_with_cddm)


def gain_db(mse_without: float, mse_with: float) -> float:
    if mse_with == 0.0:
        return math.inf if mse_without > 0.0 else 0.0
    if mse_without == 0.0:
        return -math.inf
    return float(10.0 * np.log10(mse_without / mse_with))


def format_field(value: float | int | str | None) -> str:
    """Empty for missing or infinite values; floats to nine significant digits."""
    if value is None:
        return ""
    if isinstance(value, (bool, int, np.integer, str)):
        return str(value)
    if not math.isfinite(value):
        return ""
    return FLOAT_FORMAT % value


def comment_line(config_hash: str, seed: int) -> str:
    return f"# config_hash={config_hash} seed={seed}\n"


def write_rows(
    path: str | Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[float | int | str | None]],
    config_hash: str,
    seed: int,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines: list[str] = [comment_line(config_hash, seed), ",".join(columns) + "\n"]
    lines.extend(",".join(format_field(value) for value in row) + "\n" for row in rows)
    with open(path, "w", newline="") as file:
        file.writelines(lines)
    return path


def write_records(
    path: str | Path, records: Sequence[SweepRecord], config_hash: str, seed: int
) -> Path:
    rows = (
        tuple(getattr(record, column) for column in CSV_COLUMNS) for record in records
    )
    return write_rows(path, CSV_COLUMNS, rows, config_hash, seed)


def read_records(path: str | Path) -> list[dict[str, str]]:
    with open(path) as file:
        lines: list[str] = [
            line.rstrip("\n") for line in file if not line.startswith("#")
        ]
    header: list[str] = lines[0].split(",")
    return [dict(zip(header, line.split(","), strict=True)) for line in lines[1:]]
