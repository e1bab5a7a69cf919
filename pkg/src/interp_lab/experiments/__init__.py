from .artifacts import (
    barplot_rows,
    calibrate_constants,
    dump_det_con,
    export_classifier,
    repro_barplot,
)
from .config import PRESETS, SweepConfig, from_dict, load_config, preset
from .plot import plot_csv
from .sweep import COLUMNS, read_rows, run_sweep, run_trial, summarize, write_summary

__all__ = [
    "COLUMNS",
    "PRESETS",
    "SweepConfig",
    "barplot_rows",
    "calibrate_constants",
    "dump_det_con",
    "export_classifier",
    "from_dict",
    "load_config",
    "plot_csv",
    "preset",
    "read_rows",
    "repro_barplot",
    "run_sweep",
    "run_trial",
    "summarize",
    "write_summary",
]
