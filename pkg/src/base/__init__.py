"""Shared models, errors and check framework for the experiment scenarios."""

from .errors import CocycleError, ConfigError, DomainError, NUMERICAL_ERRORS
from .evaluator import BaseCheck, CheckFramework
from .state import COLLAPSED, ExperimentConfig, RunReport, ScenarioResult

__all__ = [
    "BaseCheck",
    "CheckFramework",
    "COLLAPSED",
    "CocycleError",
    "ConfigError",
    "DomainError",
    "ExperimentConfig",
    "NUMERICAL_ERRORS",
    "RunReport",
    "ScenarioResult",
]
