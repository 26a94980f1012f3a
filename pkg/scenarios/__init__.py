"""Experiment scenarios, one module per entry of the `scenario` config field."""

from typing import Dict, Type

from src.base.errors import ConfigError
from src.base.scenario import BaseScenario

from .appendix_example import AppendixExampleScenario
from .gaussian_collapse import GaussianCollapseScenario
from .phase_scan import PhaseScanScenario
from .projection_norms import ProjectionNormsScenario
from .spectrum import SpectrumScenario
from .stability import StabilityScenario
from .uniform_collapse import UniformCollapseScenario

SCENARIO_CLASSES: Dict[str, Type[BaseScenario]] = {
    cls.name: cls
    for cls in (
        SpectrumScenario,
        PhaseScanScenario,
        GaussianCollapseScenario,
        UniformCollapseScenario,
        StabilityScenario,
        ProjectionNormsScenario,
        AppendixExampleScenario,
    )
}


def get_scenario_class(name: str) -> Type[BaseScenario]:
    """Get scenario class by name."""
    if name not in SCENARIO_CLASSES:
        raise ConfigError(f"Unknown scenario: {name}. Available: {list(SCENARIO_CLASSES)}")
    return SCENARIO_CLASSES[name]


__all__ = ["SCENARIO_CLASSES", "get_scenario_class"]
