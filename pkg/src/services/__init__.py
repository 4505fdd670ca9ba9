"""Experiment services behind the command-line interface."""

from .benchmark import BenchmarkService
from .generation import GenerationService, TrainedModel
from .sweep import SweepService, oracle_step_sweep
from .verification import VerificationService

__all__ = ["BenchmarkService", "GenerationService", "SweepService", "TrainedModel", "VerificationService", "oracle_step_sweep"]
