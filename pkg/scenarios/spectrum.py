"""Spectrum scenario: Birkhoff Λ̂, the analytic spectrum it predicts, and QR exponents."""

from typing import Any, Dict, List

import numpy as np

from src.base.evaluator import BoundCheck, CheckFramework
from src.base.scenario import BaseScenario, Tables
from src.base.state import COLLAPSED, is_collapsed
from src.blaschke import BlaschkeProduct
from src.cocycle import analytic_spectrum, lambda_birkhoff
from src.lyapunov import qr_exponents, transfer_source

from .common import difference, stable_pair


class SpectrumScenario(BaseScenario):
    """Compares [0, Λ̂, Λ̂, 2Λ̂, 2Λ̂, ...] with QR exponents of the transfer cocycle.

    A one-map family is autonomous; its truncated matrix is also diagonalized
    and the log-moduli of the leading eigenvalues are reported alongside.
    """

    name = "spectrum"

    def default_family(self) -> List[BlaschkeProduct]:
        return stable_pair()

    def _setup_checks(self) -> CheckFramework:
        tolerance = self.option("tolerance", 0.05)
        return (CheckFramework()
                .add_check(BoundCheck("top_exponent_near_zero", "abs_top_exponent", 1e-2))
                .add_check(BoundCheck("qr_matches_analytic", "max_abs_difference", tolerance)))

    def cells(self) -> List[Dict[str, Any]]:
        return [{"seed": self.config.seed}]

    def process_cell(self, cell: Dict[str, Any]) -> Tables:
        R = self.resolve_radius()
        spec = self.basis_spec(R)
        proc = self.process(seed=cell["seed"])
        fam = self.family()
        k = self.config.k

        estimate = lambda_birkhoff(fam, proc, R, self.config.n_steps, self.config.burn_in, tol=self.config.tol)
        model = analytic_spectrum(estimate.lambda_hat, k)
        source = transfer_source(fam, proc, spec)
        report = qr_exponents(source, 0, self.option("qr_steps", min(self.config.n_steps, 2000)), k,
                              burn_in=self.config.burn_in, seed=cell["seed"])

        eigen = None
        if len(self.maps) == 1:
            values = np.abs(np.linalg.eigvals(source.for_symbol(0).A))
            eigen = [COLLAPSED if v == 0 else float(np.log(v)) for v in np.sort(values)[::-1][:k]]

        rows = []
        for j in range(k):
            row = {
                "j": j + 1,
                "analytic_nats": model.exponents[j],
                "qr_nats": report.exponents[j],
                "qr_stderr_nats": report.stderr[j],
                "abs_difference_nats": difference(model.exponents[j], report.exponents[j]),
            }
            if eigen is not None:
                row["eigen_nats"] = eigen[j]
            rows.append(row)
        lam = [{
            "seed": cell["seed"],
            "n": estimate.n_steps,
            "lambda_hat_nats": estimate.lambda_hat,
            "stderr_nats": estimate.stderr,
            "batch_stderr_nats": estimate.batch_stderr,
            "min_log_term_nats": estimate.min_log_term,
        }]
        return {"spectrum": rows, "lambda": lam}

    def summarize(self, tables: Tables) -> Dict[str, Any]:
        rows = tables.get("spectrum", [])
        if not rows:
            return {}
        lam = tables["lambda"][0]
        diffs = [r["abs_difference_nats"] for r in rows]
        top = rows[0]["qr_nats"]
        summary = {
            "lambda_hat": lam["lambda_hat_nats"],
            "lambda_stderr": lam["stderr_nats"],
            "qr_exponents": [r["qr_nats"] for r in rows],
            "analytic_exponents": [r["analytic_nats"] for r in rows],
            "abs_top_exponent": None if is_collapsed(top) else abs(top),
            "max_abs_difference": None if any(d is None for d in diffs) else max(diffs),
        }
        if "eigen_nats" in rows[0]:
            summary["eigen_log_moduli"] = [r["eigen_nats"] for r in rows]
        return summary
