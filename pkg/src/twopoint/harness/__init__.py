"""Configuration, command line and report files."""

from __future__ import annotations

from twopoint.harness.config import RunConfig, config_hash, load_config, parse_config, serialize
from twopoint.harness.functions import get_function, list_functions
from twopoint.harness.runner import RunResult, run

__all__ = ["RunConfig", "RunResult", "config_hash", "get_function", "list_functions",
           "load_config", "parse_config", "run", "serialize"]
