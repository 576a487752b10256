"""Verification harness: experiments, reports and the command line."""

from .config import EXPERIMENTS, ConstraintError, ExperimentConfig, default_config
from .experiments import (freeze_brackets, freeze_report, run_entropy, run_experiment, run_grazing, run_lower_bound,
                          run_refinement, run_upper_bound_aniso, run_upper_bound_boltzmann)
from .families import build_family, family_ids, positive_ids
from .report import CSV_HEADER, ExperimentReport, Row, emit_report, read_csv

__all__ = [
    "EXPERIMENTS", "ConstraintError", "ExperimentConfig", "default_config", "freeze_brackets", "freeze_report",
    "run_entropy", "run_experiment", "run_grazing", "run_lower_bound", "run_refinement",
    "run_upper_bound_aniso", "run_upper_bound_boltzmann", "build_family", "family_ids",
    "positive_ids", "CSV_HEADER", "ExperimentReport", "Row", "emit_report", "read_csv",
]
