"""Configuration and report models shared by the scenarios and the CLI."""

import math
from typing import Any, Dict, List, Literal, Optional, Tuple, Union, get_args

from pydantic import BaseModel, Field, field_validator, model_validator

#: tag for an exponent (or log term) equal to -∞; never a float in arithmetic paths
COLLAPSED = "-inf"

ExponentValue = Union[Literal["-inf"], float]

ScenarioName = Literal[
    "spectrum",
    "phase-scan",
    "gaussian-collapse",
    "uniform-collapse",
    "stability",
    "projection-norms",
    "appendix-example",
]
SCENARIOS = get_args(ScenarioName)


def is_collapsed(value: Any) -> bool:
    return isinstance(value, str) and value == COLLAPSED


class BlaschkeSpec(BaseModel):
    """A Blaschke product in parameter form: {"rotation_phase": float, "zeros": [[re, im], ...]}."""
    rotation_phase: float = Field(default=0.0, description="ζ = exp(2πi·phase); reduced mod 1")
    zeros: List[Tuple[float, float]] = Field(default_factory=list, description="Zeros as [re, im] pairs")

    @field_validator("zeros")
    @classmethod
    def zeros_inside_disc(cls, zeros: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
        for re, im in zeros:
            if math.hypot(re, im) > 1.0 - 1e-8:
                raise ValueError(f"zero ({re}, {im}) is not strictly inside the unit disc")
        return zeros


class MarkovConfig(BaseModel):
    P: List[List[float]] = Field(description="Row-stochastic transition matrix")


class LawConfig(BaseModel):
    """Exactly one of `bernoulli` or `markov`."""
    bernoulli: Optional[List[float]] = Field(default=None, description="Symbol weights summing to 1")
    markov: Optional[MarkovConfig] = Field(default=None, description="Stationary Markov law")

    @model_validator(mode="after")
    def exactly_one(self) -> "LawConfig":
        if (self.bernoulli is None) == (self.markov is None):
            raise ValueError("law needs exactly one of 'bernoulli' or 'markov'")
        rows = [self.bernoulli] if self.bernoulli is not None else self.markov.P
        for row in rows:
            if any(w < 0 for w in row) or abs(sum(row) - 1.0) > 1e-12:
                raise ValueError(f"{row} is not a probability vector")
        return self

    @property
    def alphabet(self) -> int:
        return len(self.bernoulli) if self.bernoulli is not None else len(self.markov.P)


class ExperimentConfig(BaseModel):
    """One experiment run."""
    scenario: ScenarioName = Field(description="Which experiment to run")
    family: List[BlaschkeSpec] = Field(default_factory=list, description="Maps by symbol; empty selects the scenario default")
    alphabet: Optional[int] = Field(default=None, description="Alphabet size; defaults to the law's")
    law: Optional[LawConfig] = Field(default=None, description="Symbol law; scenarios scanning p build their own")
    seed: int = Field(default=0, ge=0, lt=2**64, description="64-bit seed of the symbol stream")
    R: Union[float, Literal["auto"]] = Field(default="auto", description="Annulus parameter in (0,1) or 'auto'")
    N: int = Field(default=40, ge=2, le=400, description="Truncation order (modes -N..N)")
    quadrature_points: Optional[int] = Field(default=None, description="Trapezoid nodes M (>= 8N); default max(512, 16N)")
    n_steps: int = Field(default=10_000, ge=1, description="Steps per orbit after burn-in")
    burn_in: int = Field(default=100, ge=0, description="Steps discarded before accumulation")
    k: int = Field(default=5, ge=1, description="Number of exponents / frame columns")
    epsilons: List[float] = Field(default_factory=list, description="Noise or perturbation sizes")
    probabilities: List[float] = Field(default_factory=list, description="p = P([0]) values for Bernoulli scans")
    tol: float = Field(default=1e-12, gt=0, description="Random fixed point tolerance")
    threads: int = Field(default=1, ge=1, description="Worker threads for grid cells")
    output_dir: Optional[str] = Field(default=None, description="Directory for CSV/JSON artifacts")
    options: Dict[str, Any] = Field(default_factory=dict, description="Scenario-specific knobs")

    @field_validator("R")
    @classmethod
    def radius_in_range(cls, R: Union[float, str]) -> Union[float, str]:
        if not isinstance(R, str) and not 0.0 < R < 1.0:
            raise ValueError("R must lie in (0, 1)")
        return R

    @field_validator("epsilons")
    @classmethod
    def epsilons_positive(cls, eps: List[float]) -> List[float]:
        if any(not 0.0 <= e < 1.0 for e in eps):
            raise ValueError("every epsilon must lie in [0, 1)")
        return eps

    @field_validator("probabilities")
    @classmethod
    def probabilities_in_range(cls, ps: List[float]) -> List[float]:
        if any(not 0.0 <= p <= 1.0 for p in ps):
            raise ValueError("every p must lie in [0, 1]")
        return ps

    @model_validator(mode="after")
    def consistent(self) -> "ExperimentConfig":
        if self.quadrature_points is not None and self.quadrature_points < 8 * self.N:
            raise ValueError("quadrature_points must be at least 8N")
        if self.k > 2 * self.N + 1:
            raise ValueError("k cannot exceed 2N+1")
        if self.law is not None:
            if self.alphabet is not None and self.alphabet != self.law.alphabet:
                raise ValueError("alphabet disagrees with the law")
            if self.family and len(self.family) != self.law.alphabet:
                raise ValueError("family needs one map per symbol")
        return self


class LyapunovReport(BaseModel):
    """QR exponent estimates; collapsed columns carry the -inf tag."""
    exponents: List[ExponentValue]
    stderr: List[Optional[float]] = Field(description="Batch-means standard error (nats); ±2·stderr is the reported bar")
    collapsed_at: List[Optional[int]] = Field(description="Step at which each column collapsed, if it did")
    n_steps: int
    burn_in: int = 0
    N: int
    seed: Optional[int] = None


class CheckOutcome(BaseModel):
    """Result of one named numerical check."""
    name: str
    passed: bool
    value: Optional[float] = None
    detail: str = ""


class ScenarioResult(BaseModel):
    """What a scenario hands to the presenter."""
    scenario: str
    resolved: Dict[str, Any] = Field(default_factory=dict)
    tables: Dict[str, List[Dict[str, Any]]] = Field(default_factory=dict)
    summary: Dict[str, Any] = Field(default_factory=dict)
    checks: List[CheckOutcome] = Field(default_factory=list)
    errors: List[str] = Field(default_factory=list)
    execution_time: float = 0.0


class RunReport(BaseModel):
    """JSON report of a run; the only artifact carrying a timestamp."""
    version: str
    timestamp: str
    config: Dict[str, Any]
    resolved: Dict[str, Any]
    summary: Dict[str, Any]
    checks: List[CheckOutcome]
    tables: Dict[str, str] = Field(description="Table name -> CSV file")
    wall_time: float
