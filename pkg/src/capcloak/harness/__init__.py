"""Experiment orchestration: configs, runners, reports."""

from .config import CellSpec, ExperimentConfig, resolve_attack_config
from .report import (
    CELL_FIELDS,
    SAMPLE_FIELDS,
    CsvAppender,
    JsonlAppender,
    MetricReport,
    emit_report,
    plot_sweep,
    read_csv,
    render_table,
    write_csv,
)
from .runner import (
    evaluate_captions,
    run_experiment,
    sweep_epsilon,
    sweep_lambda1,
)

__all__ = [
    "CellSpec",
    "ExperimentConfig",
    "resolve_attack_config",
    "CELL_FIELDS",
    "SAMPLE_FIELDS",
    "CsvAppender",
    "JsonlAppender",
    "MetricReport",
    "emit_report",
    "plot_sweep",
    "read_csv",
    "render_table",
    "write_csv",
    "evaluate_captions",
    "run_experiment",
    "sweep_epsilon",
    "sweep_lambda1",
]
