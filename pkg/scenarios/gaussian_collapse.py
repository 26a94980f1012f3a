"""Noise-driven spectrum collapse: μ̂₂ of the noisy {z², T1} transfer cocycle over a (p, ε) grid."""

import logging
from typing import Any, Dict, List

from src.base.evaluator import CheckFramework, PredicateCheck
from src.base.scenario import BaseScenario, Tables
from src.base.state import is_collapsed
from src.blaschke import BlaschkeProduct
from src.cocycle import collapse_criterion, lambda_birkhoff
from src.lyapunov import qr_exponents, transfer_source

from .common import collapse_pair, difference, exponent, noise_for

logger = logging.getLogger(__name__)


def _decreasing(values: List[Any]) -> bool:
    numeric = [float("-inf") if is_collapsed(v) else float(v) for v in values]
    return all(b <= a for a, b in zip(numeric, numeric[1:]))


class GaussianCollapseScenario(BaseScenario):
    name = "gaussian-collapse"
    noise_kind = "gaussian"

    def default_family(self) -> List[BlaschkeProduct]:
        return collapse_pair()

    def _setup_checks(self) -> CheckFramework:
        threshold = self.option("collapse_threshold", -5.0)

        def noisy_cells_decrease(summary: Dict[str, Any]) -> tuple:
            trends = summary.get("mu2_decreasing", {})
            return bool(trends) and all(trends.values()), None, f"{sum(trends.values())}/{len(trends)} cells"

        def criterion_agrees(summary: Dict[str, Any]) -> tuple:
            cells = summary.get("cells", [])
            agree = [c["collapsed"] == c["criterion_collapse"] for c in cells if c["epsilon"] > 0]
            return bool(agree) and all(agree), None, f"threshold {threshold:g} nats"

        return (CheckFramework()
                .add_check(PredicateCheck("mu2_decreasing_in_n", noisy_cells_decrease))
                .add_check(PredicateCheck("collapse_matches_criterion", criterion_agrees)))

    def default_epsilons(self) -> List[float]:
        return [0.0, 0.05]

    def horizons(self) -> List[int]:
        return sorted(self.option("horizons", [500, 1000, 2000]))

    def cells(self) -> List[Dict[str, Any]]:
        self.R = self.resolve_radius()
        self.spec = self.basis_spec(self.R)
        probabilities = self.config.probabilities or [0.4]
        epsilons = self.config.epsilons or self.default_epsilons()
        return [{"p": p, "epsilon": eps} for p in probabilities for eps in epsilons]

    def process_cell(self, cell: Dict[str, Any]) -> Tables:
        p, eps = cell["p"], cell["epsilon"]
        fam = self.family()
        proc = self.process(p=p)
        source = transfer_source(fam, proc, self.spec, noise_for(self.noise_kind, eps, self.spec))
        k = max(2, min(self.config.k, self.spec.dimension))
        threshold = self.option("collapse_threshold", -5.0)

        lam = None
        if eps == 0:
            lam = lambda_birkhoff(fam, proc, self.R, self.config.n_steps, self.config.burn_in,
                                  tol=self.config.tol).lambda_hat

        rows = []
        for n in self.horizons():
            report = qr_exponents(source, 0, n, k, burn_in=self.config.burn_in, seed=self.config.seed)
            mu2 = exponent(report, 2)
            rows.append({
                "p": p,
                "epsilon": eps,
                "n": n,
                "mu1_nats": exponent(report, 1),
                "mu2_nats": mu2,
                "mu2_stderr_nats": report.stderr[1],
                "collapsed": is_collapsed(mu2) or mu2 < threshold,
                "criterion_collapse": collapse_criterion(p, self.noise_kind) if eps > 0 else collapse_criterion(p),
                "lambda_hat_nats": lam,
                "mu2_minus_lambda_nats": difference(mu2, lam) if lam is not None else None,
            })
        logger.debug("cell p=%g eps=%g: mu2 %s", p, eps, [r["mu2_nats"] for r in rows])
        return {"collapse_grid": rows}

    def summarize(self, tables: Tables) -> Dict[str, Any]:
        rows = tables.get("collapse_grid", [])
        by_cell: Dict[tuple, List[Dict[str, Any]]] = {}
        for row in rows:
            by_cell.setdefault((row["p"], row["epsilon"]), []).append(row)
        cells, trends = [], {}
        for (p, eps), group in by_cell.items():
            last = group[-1]
            cells.append({
                "p": p,
                "epsilon": eps,
                "mu2": last["mu2_nats"],
                "collapsed": last["collapsed"],
                "criterion_collapse": last["criterion_collapse"],
                "mu2_minus_lambda": last["mu2_minus_lambda_nats"],
            })
            if eps > 0:
                trends[f"p={p:g},eps={eps:g}"] = _decreasing([r["mu2_nats"] for r in group])
        return {"cells": cells, "mu2_decreasing": trends}
