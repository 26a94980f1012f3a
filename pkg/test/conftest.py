"""Shared fixtures: the two reference families, a basis and seeded symbol processes."""

import json
from pathlib import Path

import pytest

from src.blaschke import square_map, squared_mobius, zero_fixing_product
from src.driving import BernoulliLaw, CocycleFamily, SymbolProcess
from src.hardy import HardyBasisSpec


@pytest.fixture
def collapse_family() -> CocycleFamily:
    return CocycleFamily(maps=(square_map(), squared_mobius(0.25)), label="T0T1")


@pytest.fixture
def stable_family() -> CocycleFamily:
    return CocycleFamily(maps=(zero_fixing_product(0.5), zero_fixing_product(0.6)), label="B")


@pytest.fixture
def spec() -> HardyBasisSpec:
    return HardyBasisSpec(R=0.5, N=20)


@pytest.fixture
def bernoulli():
    """Two-symbol Bernoulli process with P([0]) = p."""
    def build(p: float, seed: int = 0) -> SymbolProcess:
        return SymbolProcess(2, BernoulliLaw((p, 1.0 - p)), seed)
    return build


@pytest.fixture
def write_config(tmp_path):
    """Write a config dict to a JSON file and return its path."""
    def write(data: dict, name: str = "config.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path
    return write
