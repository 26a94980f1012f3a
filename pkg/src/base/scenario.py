"""Base scenario implementation."""

import json
import logging
import time
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from src.base.errors import NUMERICAL_ERRORS, ConfigError, InfeasibleRadiusError
from src.base.evaluator import CheckFramework
from src.base.state import ExperimentConfig, ScenarioResult
from src.blaschke import BlaschkeProduct, admissible_radius, family_contraction
from src.driving import BernoulliLaw, CocycleFamily, Law, MarkovLaw, SymbolProcess
from src.hardy import HardyBasisSpec

logger = logging.getLogger(__name__)

Tables = Dict[str, List[Dict[str, Any]]]


def load_config(path: Path) -> ExperimentConfig:
    """Load an experiment configuration from JSON, or TOML when the suffix says so."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix == ".toml":
        with open(path, "rb") as f:
            data = tomllib.load(f)
    else:
        with open(path, "r") as f:
            data = json.load(f)
    return ExperimentConfig.model_validate(data)


class BaseScenario(ABC):
    """Base class for all experiment scenarios.

    A scenario splits its work into independent cells (one per grid point),
    runs them on a thread pool and merges the per-cell tables in cell order.
    """

    name: str = ""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.maps = self._load_family()
        self.resolved: Dict[str, Any] = {}
        self.R: Optional[float] = None
        self.spec: Optional[HardyBasisSpec] = None
        self.checks = self._setup_checks()

    def _load_family(self) -> List[BlaschkeProduct]:
        if self.config.family:
            return [BlaschkeProduct.from_dict(spec.model_dump()) for spec in self.config.family]
        return self.default_family()

    @abstractmethod
    def default_family(self) -> List[BlaschkeProduct]:
        """Maps by symbol when the config leaves `family` empty."""

    @abstractmethod
    def cells(self) -> List[Dict[str, Any]]:
        """Independent units of work, in output order."""

    @abstractmethod
    def process_cell(self, cell: Dict[str, Any]) -> Tables:
        """Run one cell; returns rows keyed by table name."""

    def summarize(self, tables: Tables) -> Dict[str, Any]:
        return {}

    def _setup_checks(self) -> CheckFramework:
        return CheckFramework()

    def option(self, key: str, default: Any) -> Any:
        return self.config.options.get(key, default)

    def resolve_radius(self, maps: Optional[Sequence[BlaschkeProduct]] = None) -> float:
        """Configured R, checked against the family, or the admissible midpoint for "auto"."""
        maps = list(maps if maps is not None else self.maps)
        if self.config.R == "auto":
            R = admissible_radius(maps)
        else:
            R = float(self.config.R)
            r = family_contraction(maps, R)
            if r >= R:
                raise InfeasibleRadiusError(f"configured R = {R:g} is not admissible: r(R) = {r:.6g} >= R")
        self.resolved["R"] = R
        self.resolved["r"] = family_contraction(maps, R)
        return R

    def basis_spec(self, R: float) -> HardyBasisSpec:
        spec = HardyBasisSpec(R=R, N=self.config.N, quadrature_points=self.config.quadrature_points)
        self.resolved.update({"N": spec.N, "M": spec.quadrature_points})
        return spec

    def law(self, p: Optional[float] = None) -> Law:
        """Bernoulli(p, 1-p) when a scan supplies p, else the configured law, else uniform."""
        if p is not None:
            return BernoulliLaw((p, 1.0 - p))
        law = self.config.law
        if law is None:
            return BernoulliLaw(tuple([1.0 / len(self.maps)] * len(self.maps)))
        if law.bernoulli is not None:
            return BernoulliLaw(tuple(law.bernoulli))
        return MarkovLaw(tuple(tuple(row) for row in law.markov.P))

    def process(self, p: Optional[float] = None, seed: Optional[int] = None) -> SymbolProcess:
        law = self.law(p)
        return SymbolProcess(law.alphabet_size, law, self.config.seed if seed is None else seed)

    def family(self, maps: Optional[Sequence[BlaschkeProduct]] = None, label: str = "") -> CocycleFamily:
        return CocycleFamily(maps=tuple(maps if maps is not None else self.maps), label=label or self.name)

    def run(self) -> ScenarioResult:
        """Run every cell; numerical failures abort, anything else is recorded per cell."""
        start_time = time.time()
        result = ScenarioResult(scenario=self.name)
        cells = self.cells()
        logger.info("%s: %d cell(s) on %d thread(s)", self.name, len(cells), self.config.threads)

        def guarded(cell: Dict[str, Any]) -> Tables:
            try:
                return self.process_cell(cell)
            except NUMERICAL_ERRORS:
                raise
            except Exception as e:
                logger.error("cell %s failed: %s", cell, e)
                result.errors.append(f"{type(e).__name__}: {cell}: {e}")
                return {}

        with ThreadPoolExecutor(max_workers=self.config.threads) as pool:
            outcomes = list(pool.map(guarded, cells))

        for outcome in outcomes:
            for table, rows in outcome.items():
                result.tables.setdefault(table, []).extend(rows)

        result.summary = self.summarize(result.tables)
        result.resolved = dict(self.resolved)
        result.checks = self.checks.evaluate(result)
        result.execution_time = time.time() - start_time
        return result
