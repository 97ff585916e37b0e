"""Command-line harness: configuration, sweeps and table output."""
from .commands import COMMANDS, rerun_from_metadata, run_command
from .config import PRESETS, ConfigError, RunConfig, parse_config
from .tables import ResultTable, SweepSpec, read_csv, read_json

__all__ = ["COMMANDS", "PRESETS", "ConfigError", "ResultTable", "RunConfig", "SweepSpec",
           "parse_config", "read_csv", "read_json", "rerun_from_metadata", "run_command"]
