"""Experiment harness: sweep configuration, network scenario assembly,
Monte Carlo sweeps, CSV emission, and the command-line interface."""

from .config import SweepConfig, load_config, config_from_dict, load_preset, PRESET_NAMES
from .scenario import Scenario
from .sweep import (
    SweepRow,
    run_cdgnss_sweep,
    run_crtk_sweep,
    emit_csv,
    emit_bounds_csv,
    bounds_rows,
)

__all__ = [
    "SweepConfig",
    "load_config",
    "config_from_dict",
    "load_preset",
    "PRESET_NAMES",
    "Scenario",
    "SweepRow",
    "run_cdgnss_sweep",
    "run_crtk_sweep",
    "emit_csv",
    "emit_bounds_csv",
    "bounds_rows",
]
