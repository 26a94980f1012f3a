"""Worked example: {B_0.5, B_0.6} with equal weights, where Λ = log 0.5 + log 0.6 = log 0.3."""

import math
from typing import Any, Dict, List

from src.base.evaluator import CheckFramework, FlagCheck, PredicateCheck
from src.base.scenario import BaseScenario, Tables
from src.base.state import is_collapsed
from src.blaschke import BlaschkeProduct
from src.cocycle import lambda_birkhoff
from src.lyapunov import qr_exponents, transfer_source

from .common import exponent, stable_pair

TARGET = math.log(0.3)


class AppendixExampleScenario(BaseScenario):
    name = "appendix-example"

    def default_family(self) -> List[BlaschkeProduct]:
        return stable_pair()

    def _setup_checks(self) -> CheckFramework:
        def small_stderr(summary: Dict[str, Any]) -> tuple:
            stderr = summary.get("stderr")
            return stderr is not None and stderr < 0.01, stderr, "stderr < 0.01 nats"

        return (CheckFramework()
                .add_check(FlagCheck("lambda_within_3_stderr", "within_3_stderr"))
                .add_check(PredicateCheck("stderr_below_0.01", small_stderr)))

    def cells(self) -> List[Dict[str, Any]]:
        self.R = self.resolve_radius()
        self.spec = self.basis_spec(self.R)
        return [{"seed": self.config.seed}]

    def process_cell(self, cell: Dict[str, Any]) -> Tables:
        fam = self.family()
        proc = self.process(p=0.5, seed=cell["seed"])
        estimate = lambda_birkhoff(fam, proc, self.R, self.config.n_steps, self.config.burn_in, tol=self.config.tol)
        report = qr_exponents(transfer_source(fam, proc, self.spec), 0,
                              self.option("qr_steps", min(self.config.n_steps, 2000)), max(3, self.config.k),
                              burn_in=self.config.burn_in, seed=cell["seed"])
        lam = estimate.lambda_hat
        deviation = None if is_collapsed(lam) else lam - TARGET
        return {"appendix": [{
            "seed": cell["seed"],
            "n": estimate.n_steps,
            "lambda_hat_nats": lam,
            "stderr_nats": estimate.stderr,
            "target_nats": TARGET,
            "deviation_nats": deviation,
            "qr_lambda1_nats": exponent(report, 1),
            "qr_lambda2_nats": exponent(report, 2),
            "qr_lambda3_nats": exponent(report, 3),
        }]}

    def summarize(self, tables: Tables) -> Dict[str, Any]:
        rows = tables.get("appendix", [])
        if not rows:
            return {}
        row = rows[0]
        deviation, stderr = row["deviation_nats"], row["stderr_nats"]
        return {
            "lambda_hat": row["lambda_hat_nats"],
            "stderr": stderr,
            "target": TARGET,
            "deviation": deviation,
            "within_3_stderr": deviation is not None and stderr is not None and abs(deviation) <= 3 * stderr,
            "qr_lambda2": row["qr_lambda2_nats"],
        }
