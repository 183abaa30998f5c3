"""Experiment runner: configuration, scenarios, output, and the command line."""

from __future__ import annotations

from .config import ConfigError, SimConfig, emit, load_config, parse_config
from .scenarios import Check, ScenarioResult, initial_data, run_scenario

__all__ = ["Check", "ConfigError", "ScenarioResult", "SimConfig", "emit", "initial_data",
           "load_config", "parse_config", "run_scenario"]
