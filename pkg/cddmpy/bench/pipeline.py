from __future__ import annotations

import logging
from typing import ClassVar

import attrs

from cddmpy.errors import CddmError

from .base import MANIFEST_NAME, Experiment
from .config import ExperimentConfig
from .experiments import SweepMseExperiment, SweepPsnrExperiment, TrainJsccExperiment

logger = logging.getLogger(__name__)

PIPELINE_STAGES: tuple[type[Experiment], ...] = (
    TrainJsccExperiment,
    SweepMseExperiment,
    SweepPsnrExperiment,
)


def run_pipeline(cfg: ExperimentConfig, dry_run: bool = False) -> int:
    return PipelineExperiment(config=cfg).run(dry_run=dry_run)


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class PipelineExperiment(Experiment):
    """Joint training followed by both sweeps, under a single manifest."""

    command: ClassVar[str] = "pipeline"

    def stages(self) -> list[Experiment]:
        return [stage_cls(config=self.config) for stage_cls in PIPELINE_STAGES]

    def plan(self) -> list[str]:
        lines: list[str] = [
            f"{type(stage).command}: {line}"
            for stage in self.stages()
            for line in stage.plan()
        ]
        return [*lines, f"write {MANIFEST_NAME}"]

    def execute(self) -> int:
        for stage in self.stages():
            command: str = type(stage).command
            try:
                status: int = stage.run(write_manifest=False)
            except CddmError:
                logger.error("Pipeline stage `%s` failed.", command)
                raise
            self.outputs.extend(stage.outputs)
            if status != 0:
                logger.error("Pipeline stage `%s` exited with %d.", command, status)
                return status
        return 0
