"""Families and row builders shared by the scenarios."""

from typing import Any, Dict, List, Optional

from src.base.state import COLLAPSED, ExponentValue, LyapunovReport, is_collapsed
from src.blaschke import BlaschkeProduct, square_map, squared_mobius, zero_fixing_product
from src.hardy import HardyBasisSpec, NoiseOperator, noise_diagonal


def collapse_pair() -> List[BlaschkeProduct]:
    """[z², ((z + 1/4)/(1 + z/4))²]: symbol 0 is the superattracting map."""
    return [square_map(), squared_mobius(0.25)]


def stable_pair() -> List[BlaschkeProduct]:
    """[B_0.5, B_0.6], both fixing 0 with multipliers 0.25 and 0.36."""
    return [zero_fixing_product(0.5), zero_fixing_product(0.6)]


def noise_for(kind: str, epsilon: float, spec: HardyBasisSpec) -> Optional[NoiseOperator]:
    """The noise operator for a grid cell; ε = 0 means the plain transfer cocycle."""
    if kind == "none" or epsilon == 0:
        return None
    return noise_diagonal(kind, epsilon, spec)


def exponent(report: LyapunovReport, j: int) -> ExponentValue:
    """μ̂_j (1-based) or the collapse tag when the frame is narrower."""
    return report.exponents[j - 1] if j <= len(report.exponents) else COLLAPSED


def difference(a: ExponentValue, b: ExponentValue) -> Optional[float]:
    """|a - b| in nats; 0 when both collapsed, None when only one did."""
    if is_collapsed(a) and is_collapsed(b):
        return 0.0
    if is_collapsed(a) or is_collapsed(b):
        return None
    return abs(float(a) - float(b))


def report_rows(report: LyapunovReport, **keys: Any) -> List[Dict[str, Any]]:
    """One row per exponent, prefixed by the cell keys."""
    rows = []
    for j, value in enumerate(report.exponents, start=1):
        rows.append({
            **keys,
            "j": j,
            "exponent_nats": value,
            "stderr_nats": report.stderr[j - 1],
            "collapsed_at_step": report.collapsed_at[j - 1],
        })
    return rows
