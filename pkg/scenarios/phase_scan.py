"""Phase scan: Λ̂ of the {z², T1} cocycle across p = P([0]) with divergence diagnostics."""

import logging
import math
from typing import Any, Dict, List

from src.base.evaluator import CheckFramework, FlagCheck
from src.base.scenario import BaseScenario, Tables
from src.blaschke import BlaschkeProduct
from src.cocycle import lambda_birkhoff, t0t1_lambda_bounds, zero_run_series

from .common import collapse_pair

logger = logging.getLogger(__name__)


class PhaseScanScenario(BaseScenario):
    name = "phase-scan"

    def default_family(self) -> List[BlaschkeProduct]:
        return collapse_pair()

    def _setup_checks(self) -> CheckFramework:
        return CheckFramework().add_check(FlagCheck("heavy_tail_matches_series", "agreement"))

    def cells(self) -> List[Dict[str, Any]]:
        self.R = self.resolve_radius()
        probabilities = self.config.probabilities or [0.2, 0.4, 0.6]
        return [{"p": p} for p in probabilities]

    def process_cell(self, cell: Dict[str, Any]) -> Tables:
        p = cell["p"]
        fam = self.family()
        proc = self.process(p=p)
        estimate = lambda_birkhoff(fam, proc, self.R, self.config.n_steps, self.config.burn_in, tol=self.config.tol)

        series = zero_run_series(p, 2.0)
        lower, upper = t0t1_lambda_bounds(p) if not self.config.family else (None, None)
        running = estimate.running_means
        drift = None
        if len(running) >= 2:
            # drift of the running mean over the last decade of n
            n_final, m_final = running[-1]
            earlier = [m for n, m in running if n <= n_final // 10]
            if earlier:
                drift = abs(m_final - earlier[-1])
        if estimate.heavy_tail:
            logger.warning("p = %g: heavy-tailed log terms (tail share %s)", p, estimate.tail_share)

        row = {
            "p": p,
            "n": estimate.n_steps,
            "lambda_hat_nats": estimate.lambda_hat,
            "stderr_nats": estimate.stderr,
            "batch_stderr_nats": estimate.batch_stderr,
            "min_log_term_nats": estimate.min_log_term,
            "tail_share": estimate.tail_share,
            "heavy_tail": estimate.heavy_tail,
            "series_sum": series if series is not None else math.inf,
            "series_finite": series is not None,
            "agrees": estimate.heavy_tail == (series is None),
            "drift_nats": drift,
            "lower_bound_nats": lower,
            "upper_bound_nats": upper,
        }
        trace = [{"p": p, "n": n, "running_mean_nats": m} for n, m in running]
        return {"phase_scan": [row], "running_means": trace}

    def summarize(self, tables: Tables) -> Dict[str, Any]:
        rows = tables.get("phase_scan", [])
        return {
            "probabilities": [r["p"] for r in rows],
            "lambda_hat": [r["lambda_hat_nats"] for r in rows],
            "heavy_tail": [r["heavy_tail"] for r in rows],
            "series_finite": [r["series_finite"] for r in rows],
            "agreement": bool(rows) and all(r["agrees"] for r in rows),
        }
