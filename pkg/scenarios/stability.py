"""Stability scenario: exponents of a base cocycle against its ε-perturbations."""

import logging
from typing import Any, Dict, List, Optional

from src.base.errors import ConfigError
from src.base.evaluator import BoundCheck, CheckFramework, PredicateCheck
from src.base.scenario import BaseScenario, Tables
from src.base.state import is_collapsed
from src.blaschke import BlaschkeProduct, sup_distance
from src.cocycle import (
    collapse_perturbation,
    lambda_birkhoff,
    quenched_perturbation,
    stabilize_perturbation,
    static_perturbation,
)
from src.driving import map_at
from src.hardy import noise_diagonal
from src.lyapunov import qr_exponents, transfer_source

from .common import difference, report_rows, stable_pair

logger = logging.getLogger(__name__)

SPECTRAL_KINDS = ("static", "quenched", "annealed")
FIXED_POINT_KINDS = ("collapse", "stabilize")


class StabilityScenario(BaseScenario):
    """Static Möbius, quenched rotation and annealed Gaussian perturbations compared with the base
    exponents; the collapse and stabilize constructions are compared through Λ̂."""

    name = "stability"

    def default_family(self) -> List[BlaschkeProduct]:
        return stable_pair()

    def kinds(self) -> List[str]:
        kinds = self.option("kinds", list(SPECTRAL_KINDS))
        unknown = set(kinds) - set(SPECTRAL_KINDS) - set(FIXED_POINT_KINDS)
        if unknown:
            raise ConfigError(f"unknown perturbation kinds {sorted(unknown)}")
        return kinds

    def _setup_checks(self) -> CheckFramework:
        framework = CheckFramework()
        if "static" in self.kinds():
            framework.add_check(PredicateCheck("static_monotone_in_eps", _monotone("static")))
            framework.add_check(BoundCheck("static_close_at_smallest_eps", "static_smallest_eps_difference", 0.1))
        if "collapse" in self.kinds():
            framework.add_check(PredicateCheck("collapse_sentinel", _sentinel))
        return framework

    def cells(self) -> List[Dict[str, Any]]:
        self.R = self.resolve_radius()
        self.spec = self.basis_spec(self.R)
        epsilons = sorted(self.config.epsilons or [0.1, 0.05, 0.025], reverse=True)
        kinds = self.kinds()
        cells = [{"kind": "base", "epsilon": 0.0}] if any(k in SPECTRAL_KINDS for k in kinds) else []
        return cells + [{"kind": kind, "epsilon": eps} for kind in kinds for eps in epsilons]

    def process_cell(self, cell: Dict[str, Any]) -> Tables:
        kind, eps = cell["kind"], cell["epsilon"]
        base = self.family()
        proc = self.process()
        if kind in FIXED_POINT_KINDS:
            return self._fixed_point_cell(kind, eps, base, proc)

        noise = None
        fam = base
        if kind == "static":
            fam = static_perturbation(base, eps)
        elif kind == "quenched":
            fam = quenched_perturbation(base, eps, noise_seed=self.config.seed)
        elif kind == "annealed":
            noise = noise_diagonal("gaussian", eps, self.spec)
        source = transfer_source(fam, proc, self.spec, noise)
        report = qr_exponents(source, 0, self.option("qr_steps", self.config.n_steps), self.config.k,
                              burn_in=self.config.burn_in, seed=self.config.seed)
        return {"stability": report_rows(report, kind=kind, epsilon=eps)}

    def _fixed_point_cell(self, kind: str, eps: float, base, proc) -> Tables:
        build = collapse_perturbation if kind == "collapse" else stabilize_perturbation
        fam = build(base, proc, self.R, eps, tol=self.config.tol)
        estimate = lambda_birkhoff(fam, proc, self.R, self.config.n_steps, self.config.burn_in, tol=self.config.tol)
        samples = self.option("sup_samples", 200)
        distance = max(sup_distance(map_at(fam, proc, i), map_at(base, proc, i)) for i in range(samples))
        return {"perturbed_lambda": [{
            "kind": kind,
            "epsilon": eps,
            "lambda_hat_nats": estimate.lambda_hat,
            "stderr_nats": estimate.stderr,
            "critical_positions": estimate.critical_positions,
            "first_critical": estimate.first_critical,
            "max_sup_distance": distance,
        }]}

    def summarize(self, tables: Tables) -> Dict[str, Any]:
        rows = tables.get("stability", [])
        base = {r["j"]: r["exponent_nats"] for r in rows if r["kind"] == "base"}
        summary: Dict[str, Any] = {"base_exponents": [base[j] for j in sorted(base)]}
        for kind in SPECTRAL_KINDS:
            per_eps: Dict[float, Optional[float]] = {}
            for r in rows:
                if r["kind"] != kind or r["j"] > 5:
                    continue
                d = difference(r["exponent_nats"], base[r["j"]]) if r["j"] in base else None
                current = per_eps.get(r["epsilon"], 0.0)
                per_eps[r["epsilon"]] = None if d is None or current is None else max(current, d)
            if per_eps:
                ordered = sorted(per_eps, reverse=True)
                summary[f"{kind}_epsilons"] = ordered
                summary[f"{kind}_max_difference"] = [per_eps[e] for e in ordered]
                summary[f"{kind}_smallest_eps_difference"] = per_eps[ordered[-1]]
        lam = tables.get("perturbed_lambda", [])
        if lam:
            summary["perturbed_lambda"] = [
                {k: r[k] for k in ("kind", "epsilon", "lambda_hat_nats", "critical_positions", "max_sup_distance")}
                for r in lam
            ]
        return summary


def _monotone(kind: str):
    def check(summary: Dict[str, Any]) -> tuple:
        values = summary.get(f"{kind}_max_difference", [])
        if not values or any(v is None for v in values):
            return False, None, "missing or collapsed exponents"
        ok = all(b <= a for a, b in zip(values, values[1:]))
        return ok, values[-1], "max_{j<=5} |mu_j^eps - mu_j| over decreasing eps: " + ", ".join(f"{v:.3g}" for v in values)
    return check


def _sentinel(summary: Dict[str, Any]) -> tuple:
    rows = [r for r in summary.get("perturbed_lambda", []) if r["kind"] == "collapse"]
    ok = bool(rows) and all(
        is_collapsed(r["lambda_hat_nats"]) and r["critical_positions"] > 0 and r["max_sup_distance"] <= r["epsilon"]
        for r in rows
    )
    return ok, None, f"{len(rows)} collapse cell(s)"
