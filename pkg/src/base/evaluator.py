"""Numerical checks evaluated on scenario results."""

import logging
import math
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, List, Optional

from .state import CheckOutcome, ScenarioResult, is_collapsed

logger = logging.getLogger(__name__)


class BaseCheck(ABC):
    """Base class for named acceptance checks."""

    @abstractmethod
    def evaluate(self, result: ScenarioResult) -> CheckOutcome:
        """Evaluate the check against a finished scenario."""

    @property
    @abstractmethod
    def name(self) -> str:
        """Check name."""


class BoundCheck(BaseCheck):
    """A summary value compared against a bound."""

    def __init__(self, name: str, key: str, bound: float, below: bool = True):
        self._name = name
        self.key = key
        self.bound = bound
        self.below = below

    @property
    def name(self) -> str:
        return self._name

    def evaluate(self, result: ScenarioResult) -> CheckOutcome:
        value = result.summary.get(self.key)
        if value is None:
            return CheckOutcome(name=self.name, passed=False, detail=f"{self.key} missing")
        numeric = -math.inf if is_collapsed(value) else float(value)
        passed = numeric < self.bound if self.below else numeric > self.bound
        relation = "<" if self.below else ">"
        return CheckOutcome(
            name=self.name,
            passed=passed,
            value=None if math.isinf(numeric) else numeric,
            detail=f"{self.key} = {value} {relation} {self.bound:g} required",
        )


class FlagCheck(BaseCheck):
    """A boolean summary entry that must hold."""

    def __init__(self, name: str, key: str, expected: bool = True):
        self._name = name
        self.key = key
        self.expected = expected

    @property
    def name(self) -> str:
        return self._name

    def evaluate(self, result: ScenarioResult) -> CheckOutcome:
        value = result.summary.get(self.key)
        return CheckOutcome(name=self.name, passed=value is self.expected, detail=f"{self.key} = {value}")


class PredicateCheck(BaseCheck):
    """Arbitrary predicate on the summary, returning (passed, value, detail)."""

    def __init__(self, name: str, predicate: Callable[[Dict[str, Any]], tuple]):
        self._name = name
        self.predicate = predicate

    @property
    def name(self) -> str:
        return self._name

    def evaluate(self, result: ScenarioResult) -> CheckOutcome:
        passed, value, detail = self.predicate(result.summary)
        return CheckOutcome(name=self.name, passed=bool(passed), value=value, detail=detail)


class CheckFramework:
    """Runs the registered checks of a scenario."""

    def __init__(self):
        self.checks: Dict[str, BaseCheck] = {}

    def add_check(self, check: BaseCheck) -> "CheckFramework":
        self.checks[check.name] = check
        return self

    def evaluate(self, result: ScenarioResult) -> List[CheckOutcome]:
        outcomes = []
        for name, check in self.checks.items():
            try:
                outcomes.append(check.evaluate(result))
            except Exception as e:
                logger.warning("check %s raised %s", name, e)
                outcomes.append(CheckOutcome(name=name, passed=False, detail=f"error: {e}"))
        return outcomes

    @staticmethod
    def pass_rate(outcomes: List[CheckOutcome]) -> Optional[float]:
        if not outcomes:
            return None
        return sum(o.passed for o in outcomes) / len(outcomes)
