from __future__ import annotations

from typing import Any


class CddmError(Exception):
    pass


class DimensionError(CddmError, ValueError):
    pass


class DomainError(CddmError, ValueError):
    pass


class SingularityError(CddmError, ArithmeticError):
    pass


class EvaluationError(CddmError, ValueError):
    pass


class ConfigError(CddmError, ValueError):
    pass


class TrainingError(CddmError, RuntimeError):
    def __init__(
        self,
        message: str,
        *,
        stage: str,
        step: int,
        report: Any | None = None,
    ) -> None:
        super().__init__(f"[{stage}] step {step}: {message} (last report: {report})")
        self.stage = stage
        self.step = step
        self.report = report
