"""Uniform-noise collapse, with the nilpotency of the noisy z² block at dyadic ε."""

from typing import Any, Dict, List

import numpy as np

from src.base.evaluator import CheckFramework, PredicateCheck
from src.base.scenario import Tables
from src.blaschke import square_map
from src.hardy import assemble_transfer, compose_noise, nilpotency_index, noise_diagonal, restricted_norm, uniform_power_multiplier

from .gaussian_collapse import GaussianCollapseScenario

NILPOTENCY_BOUND = 1e-12


class UniformCollapseScenario(GaussianCollapseScenario):
    name = "uniform-collapse"
    noise_kind = "uniform"

    def _setup_checks(self) -> CheckFramework:
        def nilpotent(summary: Dict[str, Any]) -> tuple:
            rows = summary.get("nilpotency", [])
            worst = max((r["restricted_norm"] for r in rows), default=None)
            return bool(rows) and all(r["passed"] for r in rows), worst, f"bound {NILPOTENCY_BOUND:g}"

        return super()._setup_checks().add_check(PredicateCheck("dyadic_nilpotency", nilpotent))

    def default_epsilons(self) -> List[float]:
        return [0.125, 0.1875]

    def cells(self) -> List[Dict[str, Any]]:
        grid = super().cells()
        epsilons = sorted({c["epsilon"] for c in grid if c["epsilon"] > 0})
        return grid + [{"nilpotency": eps} for eps in epsilons]

    def process_cell(self, cell: Dict[str, Any]) -> Tables:
        if "nilpotency" not in cell:
            return super().process_cell(cell)
        eps = cell["nilpotency"]
        k = nilpotency_index(eps)
        if k is None:
            return {}
        step = compose_noise(assemble_transfer(square_map(), self.spec), noise_diagonal("uniform", eps, self.spec)).A
        product = np.linalg.matrix_power(step, k)
        norm = restricted_norm(product, self.spec)
        return {"nilpotency": [{
            "epsilon": eps,
            "k": k,
            "steps": k,
            "restricted_norm": norm,
            "closed_form_multiplier": uniform_power_multiplier(1, k, eps),
            "passed": norm < NILPOTENCY_BOUND,
        }]}

    def summarize(self, tables: Tables) -> Dict[str, Any]:
        summary = super().summarize(tables)
        summary["nilpotency"] = tables.get("nilpotency", [])
        return summary
