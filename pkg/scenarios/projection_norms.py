"""Projection norms between the fast space and the slow complement after runs of the superattracting map."""

import logging
import math
from typing import Any, Dict, List

import numpy as np

from src.base.errors import TransversalityError
from src.base.evaluator import CheckFramework, PredicateCheck
from src.base.scenario import BaseScenario, Tables
from src.blaschke import BlaschkeProduct
from src.cocycle import fixed_point
from src.driving import trailing_run
from src.lyapunov import analytic_fast_basis, principal_angles, projection_norm, slow_complement, transfer_source

from .common import collapse_pair

logger = logging.getLogger(__name__)


class ProjectionNormsScenario(BaseScenario):
    """‖Π_{E∥F}‖ with E spanned by the exponent-0 and first pole pair directions at x_ω,
    F the slow complement from the future product.

    Sampled positions carry symbol 0 and follow exactly L earlier 0 symbols, so
    x_ω has been squared L times while z^{-2} lies in the kernel of the first
    future step. Norms past the transversality limit are reported as inf.
    """

    name = "projection-norms"

    def default_family(self) -> List[BlaschkeProduct]:
        return collapse_pair()

    def _setup_checks(self) -> CheckFramework:
        def growth(summary: Dict[str, Any]) -> tuple:
            means = summary.get("mean_norm_by_run", {})
            if len(means) < 2:
                return False, None, "too few run lengths"
            values = [float(means[k]) for k in sorted(means, key=int)]
            # inf marks numerically intersecting spaces and may repeat
            increasing = all(b > a or math.isinf(a) and math.isinf(b) for a, b in zip(values, values[1:]))
            ratio = values[-1] / values[0]
            return increasing and ratio > 5.0, ratio, f"longest/shortest run ratio {ratio:.3g}"

        return CheckFramework().add_check(PredicateCheck("norm_grows_with_run_length", growth))

    def cells(self) -> List[Dict[str, Any]]:
        self.R = self.resolve_radius()
        self.spec = self.basis_spec(self.R)
        p = self.config.probabilities[0] if self.config.probabilities else 0.4
        self.proc = self.process(p=p)
        self.resolved["p"] = p

        lengths = self.option("run_lengths", [2, 4, 6])
        per_length = self.option("samples", 3)
        search = self.option("search_window", 1 << 16)
        origin = self.option("origin", 64)
        symbols = self.proc.symbols(origin - 1, origin + search)

        cells = []
        for L in lengths:
            found = 0
            for offset in range(1, symbols.size):
                position = origin - 1 + offset
                # symbol 0 here, after exactly L earlier 0 symbols
                if symbols[offset] == 0 and trailing_run(self.proc, position, 0, limit=L + 1) == L:
                    cells.append({"run_length": L, "position": position})
                    found += 1
                    if found == per_length:
                        break
            if found < per_length:
                logger.warning("only %d positions inside 0-runs after %d zeros", found, L)
        return cells

    def process_cell(self, cell: Dict[str, Any]) -> Tables:
        position = cell["position"]
        fam = self.family()
        source = transfer_source(fam, self.proc, self.spec)
        x = complex(fixed_point(fam, self.proc, position, self.R, self.config.tol))
        poles = self.option("fast_poles", 1)
        E = analytic_fast_basis(x, poles, self.spec, position=position)
        F = slow_complement(source, position, E.rank, self.option("future_steps", 30), seed=self.config.seed)
        try:
            norm = projection_norm(E, F)
        except TransversalityError as e:
            logger.warning("position %d: %s", position, e)
            norm = math.inf
        smallest = min(principal_angles(E, F)) if F.rank else math.pi / 2
        return {"projection_norms": [{
            "run_length": cell["run_length"],
            "position": position,
            "abs_x": abs(x),
            "projection_norm": norm,
            "min_angle_rad": smallest,
            "inverse_sin_angle": 1.0 / math.sin(smallest) if smallest > 0 else math.inf,
        }]}

    def summarize(self, tables: Tables) -> Dict[str, Any]:
        rows = tables.get("projection_norms", [])
        grouped: Dict[str, List[float]] = {}
        for r in rows:
            grouped.setdefault(str(r["run_length"]), []).append(r["projection_norm"])
        means = {L: ("inf" if any(math.isinf(v) for v in vs) else float(np.mean(vs))) for L, vs in grouped.items()}
        return {"mean_norm_by_run": means, "positions": len(rows)}
