from .base import Experiment, lookup_experiment
from .config import ExperimentConfig, apply_overrides, load_config
from .conformance import ConformanceReport, check_distribution
from .experiments import (
    CheckDistExperiment,
    SampleExperiment,
    SweepMseExperiment,
    SweepPsnrExperiment,
    TrainCddmExperiment,
    TrainJsccExperiment,
)
from .moments import MomentAccumulator
from .pipeline import PipelineExperiment, run_pipeline
from .records import SweepRecord, gain_db, write_records
from .sweeps import mse_sweep, psnr_sweep

__all__ = [
    "CheckDistExperiment",
    "ConformanceReport",
    "Experiment",
    "ExperimentConfig",
    "MomentAccumulator",
    "PipelineExperiment",
    "SampleExperiment",
    "SweepMseExperiment",
    "SweepPsnrExperiment",
    "SweepRecord",
    "TrainCddmExperiment",
    "TrainJsccExperiment",
    "apply_overrides",
    "check_distribution",
    "gain_db",
    "load_config",
    "lookup_experiment",
    "mse_sweep",
    "psnr_sweep",
    "run_pipeline",
    "write_records",
]
