"""Random fixed points, the Lyapunov integrand and the derived cocycles built on them.

Fixed points whose modulus drops below 1e-30 are carried as mpmath ``mpc``
values (53-bit mantissa, unbounded exponent).  Superattracting runs such as
long stretches of z ↦ z² push the fixed point far below the double range
while log|T'(x)| stays perfectly finite; only an exactly vanishing derivative
is treated as critical.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from src.base.errors import ConvergenceError, DomainError
from src.base.state import COLLAPSED, ExponentValue, is_collapsed
from src.blaschke import (
    AnalyticMap,
    MobiusDiscAutomorphism,
    compose,
    conjugate,
    divide_out_zero,
    family_contraction,
    mobius_for_displacement,
    rotation,
    times_z,
)
from src.driving import CocycleFamily, SymbolProcess, map_at, maps_between, uniform_at

logger = logging.getLogger(__name__)

EXTENDED_BELOW = 1e-30
CRITICAL_GUARD = 1e-300
MAX_DEPTH = 10 ** 6
TAIL_FRACTION = 0.01
TAIL_SHARE_FLAG = 0.5
T0T1_A = (7.0 - 3.0 * math.sqrt(5.0)) / 2.0
T0T1_B = 1.0 / 16.0


def _working(z: Any) -> Any:
    """Carry a point as Python complex, switching to mpc below EXTENDED_BELOW."""
    if isinstance(z, mpmath.mpc):
        if z == 0:
            return 0j
        return complex(z) if abs(z) >= EXTENDED_BELOW else z
    z = complex(z)
    if 0.0 < abs(z) < EXTENDED_BELOW:
        return mpmath.mpc(z)
    return z


def _push(T: AnalyticMap, z: Any) -> Any:
    return _working(T.value(z))


def _log_abs(w: Any) -> Optional[float]:
    if isinstance(w, mpmath.mpc):
        return None if w == 0 else float(mpmath.log(abs(w)))
    a = abs(w)
    return None if a < CRITICAL_GUARD else math.log(a)


def log_derivative(T: AnalyticMap, x: Any) -> Optional[float]:
    """log|T'(x)|, or None when the derivative vanishes."""
    term = _log_abs(T.derivative(x))
    if term is None and not isinstance(x, mpmath.mpc):
        # below the double range but possibly nonzero
        term = _log_abs(T.derivative(mpmath.mpc(x)))
    return term


def _as_pair(x: Any) -> List[float]:
    return [float(mpmath.re(x)), float(mpmath.im(x))]


@dataclass(frozen=True)
class FixedPointTrace:
    position: int
    x: Any
    depth: int
    residual: float
    contraction_ratio: Optional[float]

    @property
    def log_abs_x(self) -> ExponentValue:
        term = _log_abs(self.x) if isinstance(self.x, mpmath.mpc) or self.x != 0 else None
        return COLLAPSED if term is None else term

    def to_dict(self) -> Dict[str, Any]:
        return {
            "position": self.position,
            "x": _as_pair(self.x),
            "log_abs_x": self.log_abs_x,
            "depth": self.depth,
            "residual": self.residual,
            "contraction_ratio": self.contraction_ratio,
        }


@dataclass(frozen=True)
class SpectrumModel:
    """[0, Λ, Λ, 2Λ, 2Λ, ...] truncated to `count` entries."""
    Lambda: ExponentValue
    count: int
    lambda_top: float = 0.0

    @property
    def exponents(self) -> List[ExponentValue]:
        out: List[ExponentValue] = [self.lambda_top]
        for j in range(1, self.count):
            n = (j + 1) // 2
            out.append(COLLAPSED if is_collapsed(self.Lambda) else n * self.Lambda)
        return out[: self.count]

    @property
    def multiplicities(self) -> List[Tuple[ExponentValue, int]]:
        seen: List[Tuple[ExponentValue, int]] = []
        for value in self.exponents:
            if seen and seen[-1][0] == value:
                seen[-1] = (value, seen[-1][1] + 1)
            else:
                seen.append((value, 1))
        return seen

    def to_dict(self) -> Dict[str, Any]:
        return {"lambda_top": self.lambda_top, "Lambda": self.Lambda, "count": self.count,
                "exponents": self.exponents}


@dataclass
class LambdaEstimate:
    """Birkhoff estimate of Λ; unpacks as (lambda_hat, stderr, min_log_term)."""
    lambda_hat: ExponentValue
    stderr: Optional[float]
    min_log_term: ExponentValue
    n_steps: int
    burn_in: int
    seed: int
    batch_stderr: Optional[float] = None
    critical_positions: int = 0
    first_critical: Optional[int] = None
    total: Optional[float] = None
    tail_share: Optional[float] = None
    running_means: List[Tuple[int, float]] = field(default_factory=list)

    def __iter__(self):
        return iter((self.lambda_hat, self.stderr, self.min_log_term))

    @property
    def heavy_tail_ratio(self) -> Optional[float]:
        """Share of the accumulated sum carried by the single most negative term."""
        if self.total is None or is_collapsed(self.min_log_term) or self.total == 0:
            return None
        return abs(self.min_log_term) / abs(self.total)

    @property
    def heavy_tail(self) -> bool:
        """Most negative 1% of the terms carry at least half the sum, or Λ̂ collapsed."""
        return is_collapsed(self.lambda_hat) or (self.tail_share is not None and self.tail_share >= TAIL_SHARE_FLAG)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda_hat": self.lambda_hat,
            "stderr": self.stderr,
            "batch_stderr": self.batch_stderr,
            "min_log_term": self.min_log_term,
            "n": self.n_steps,
            "burn_in": self.burn_in,
            "seed": self.seed,
            "critical_positions": self.critical_positions,
            "tail_share": self.tail_share,
            "heavy_tail": self.heavy_tail,
        }


def _backward(maps: Sequence[AnalyticMap]) -> Any:
    z: Any = 0j
    for T in maps:
        z = _push(T, z)
    return z


def _family_ratio(fam: CocycleFamily, R: float) -> Optional[float]:
    if not fam.maps:
        return None
    r = family_contraction(fam.maps, R)
    if r >= R:
        raise DomainError(f"R = {R} is not admissible: r(R) = {r:.6g}")
    return r / R


def a_priori_depth(ratio: float, R: float, tol: float) -> int:
    """Smallest d with R·L·ratio^(d-1) < tol, L the d_R-diameter of the disc of radius ratio·R."""
    if ratio <= 0.0:
        return 2
    diameter = 4.0 * math.atanh(ratio)
    d = 1 + math.ceil(math.log(tol / (R * diameter)) / math.log(ratio))
    return max(d, 2)


def random_fixed_point(fam: CocycleFamily, proc: SymbolProcess, position: int, R: float,
                       tol: float = 1e-12) -> FixedPointTrace:
    """x_ω at `position` by backward iteration from 0."""
    if fam.fixed_point_source is not None:
        return FixedPointTrace(position, fam.fixed_point_source(proc, position), 0, 0.0, None)
    ratio = _family_ratio(fam, R)
    if ratio is not None:
        depth = a_priori_depth(ratio, R, tol)
        if depth > MAX_DEPTH:
            raise ConvergenceError(f"a-priori depth {depth} exceeds {MAX_DEPTH}; r/R = {ratio:.9f}")
        maps = maps_between(fam, proc, position - depth, position)
        x, previous = _backward(maps), _backward(maps[1:])
        residual = float(abs(x - previous))
        logger.debug("fixed point at %d: depth %d, residual %.3g", position, depth, residual)
        return FixedPointTrace(position, x, depth, residual, ratio)

    depth, previous = 16, None
    while depth <= MAX_DEPTH:
        x = _backward(maps_between(fam, proc, position - depth, position))
        if previous is not None and abs(x - previous) < tol:
            return FixedPointTrace(position, x, depth, float(abs(x - previous)), None)
        previous, depth = x, depth * 2
    raise ConvergenceError(f"backward iteration at position {position} did not settle within {MAX_DEPTH} steps")


def push_fixed_point(fam: CocycleFamily, proc: SymbolProcess, trace: FixedPointTrace) -> FixedPointTrace:
    """Trace at position+1 from x' = T_ω(x)."""
    T = map_at(fam, proc, trace.position)
    ratio = trace.contraction_ratio
    residual = trace.residual * ratio if ratio is not None else trace.residual
    return FixedPointTrace(trace.position + 1, _push(T, trace.x), trace.depth + 1, residual, ratio)


def fixed_point(fam: CocycleFamily, proc: SymbolProcess, position: int, R: float,
                tol: float = 1e-12) -> Any:
    """Memoized x_ω: pushed forward from a cached predecessor, else solved backward."""
    if fam.fixed_point_source is not None:
        return fam.fixed_point_source(proc, position)
    store = fam._fixed_points
    key = (proc.key, R, tol, position)
    cached = fam.recall(store, key)
    if cached is not None:
        return cached
    previous = fam.recall(store, (proc.key, R, tol, position - 1))
    if previous is not None:
        x = _push(map_at(fam, proc, position - 1), previous)
    else:
        x = random_fixed_point(fam, proc, position, R, tol).x
    return fam.remember(store, key, x)


def fixed_point_orbit(fam: CocycleFamily, proc: SymbolProcess, start: int, count: int, R: float,
                      tol: float = 1e-12, maps: Optional[Sequence[AnalyticMap]] = None) -> List[Any]:
    """x_ω at start..start+count-1, one backward solve then forward propagation."""
    if fam.fixed_point_source is not None:
        return [fam.fixed_point_source(proc, i) for i in range(start, start + count)]
    if maps is None:
        maps = maps_between(fam, proc, start, start + count)
    store = fam._fixed_points
    out = [fixed_point(fam, proc, start, R, tol)]
    for k in range(1, count):
        key = (proc.key, R, tol, start + k)
        x = fam.recall(store, key)
        if x is None:
            x = fam.remember(store, key, _push(maps[k - 1], out[-1]))
        out.append(x)
    return out


def _batch_stderr(terms: np.ndarray, batches: int = 20) -> Optional[float]:
    if terms.size < 2 * batches:
        return None
    usable = terms[: terms.size - terms.size % batches].reshape(batches, -1).mean(axis=1)
    return float(usable.std(ddof=1) / math.sqrt(batches))


def lambda_birkhoff(fam: CocycleFamily, proc: SymbolProcess, R: float, n_steps: int, burn_in: int = 0,
                    start: int = 0, tol: float = 1e-12, checkpoints: int = 20) -> LambdaEstimate:
    """Λ̂ = mean of log|T'(x_ω)| along the orbit, with the fixed point propagated forward."""
    if n_steps < 1:
        raise DomainError("n_steps must be at least 1")
    total_steps = burn_in + n_steps
    maps = maps_between(fam, proc, start, start + total_steps)
    xs = fixed_point_orbit(fam, proc, start, total_steps, R, tol, maps=maps)

    terms: List[float] = []
    critical, first_critical = 0, None
    for k in range(burn_in, total_steps):
        term = log_derivative(maps[k], xs[k])
        if term is None:
            critical += 1
            if first_critical is None:
                first_critical = start + k
        else:
            terms.append(term)

    if critical:
        logger.warning("derivative vanishes at %d of %d fixed points (first at %s); Λ̂ = -inf",
                       critical, n_steps, first_critical)
        return LambdaEstimate(COLLAPSED, None, COLLAPSED, n_steps, burn_in, proc.seed,
                              critical_positions=critical, first_critical=first_critical)

    values = np.asarray(terms)
    cumulative = np.cumsum(values)
    marks = sorted({max(1, (n_steps * j) // checkpoints) for j in range(1, checkpoints + 1)}
                   | {10 ** e for e in range(1, 9) if 10 ** e <= n_steps})
    running = [(m, float(cumulative[m - 1] / m)) for m in marks]
    stderr = float(values.std(ddof=1) / math.sqrt(n_steps)) if n_steps > 1 else 0.0
    total = math.fsum(terms)
    tail = np.sort(values)[: max(1, math.ceil(TAIL_FRACTION * n_steps))]
    tail_share = float(tail.sum() / total) if total < 0 else None
    return LambdaEstimate(
        lambda_hat=total / n_steps,
        stderr=stderr,
        min_log_term=float(values.min()),
        n_steps=n_steps,
        burn_in=burn_in,
        seed=proc.seed,
        batch_stderr=_batch_stderr(values),
        total=total,
        tail_share=tail_share,
        running_means=running,
    )


def analytic_spectrum(Lambda: ExponentValue, count: int) -> SpectrumModel:
    if not is_collapsed(Lambda) and Lambda >= 0:
        raise DomainError(f"Λ must be negative or -inf, got {Lambda}")
    if count < 1:
        raise DomainError("count must be positive")
    return SpectrumModel(Lambda=Lambda, count=count)


def autonomous_spectrum(T: AnalyticMap, count: int, tol: float = 1e-14,
                        max_iter: int = 100_000) -> SpectrumModel:
    """Spectrum of a single map from the multiplier at its attracting fixed point."""
    x = 0j
    for _ in range(max_iter):
        nxt = complex(T.value(x))
        if abs(nxt - x) < tol:
            x = nxt
            break
        x = nxt
    else:
        raise ConvergenceError(f"{T.label}: fixed point iteration did not settle")
    term = log_derivative(T, x)
    return analytic_spectrum(COLLAPSED if term is None else term, count)


def conjugate_to_zero(fam: CocycleFamily, proc: SymbolProcess, R: float, tol: float = 1e-12) -> CocycleFamily:
    """T̃_ω = M_{x_σω}^{-1} ∘ T_ω ∘ M_{x_ω}, which fixes 0."""
    _family_ratio(fam, R)

    def hook(p: SymbolProcess, i: int) -> AnalyticMap:
        x = complex(fixed_point(fam, p, i, R, tol))
        y = complex(fixed_point(fam, p, i + 1, R, tol))
        return conjugate(map_at(fam, p, i), pre=x, post=y)

    return CocycleFamily(hook=hook, fixed_point_source=lambda p, i: 0j, label=f"conj({fam.label})")


def stability_criterion(fam: CocycleFamily, proc: SymbolProcess, R: float, n_samples: int,
                        threshold: float = 1e-6, start: int = 0, tol: float = 1e-12) -> Tuple[float, bool]:
    """Orbit minimum of |T'_ω(x_ω)| as an estimate of its essential infimum."""
    maps = maps_between(fam, proc, start, start + n_samples)
    xs = fixed_point_orbit(fam, proc, start, n_samples, R, tol, maps=maps)
    smallest: Any = None
    for T, x in zip(maps, xs):
        d = abs(T.derivative(x))
        if smallest is None or d < smallest:
            smallest = d
    estimate = float(smallest)
    return estimate, estimate > threshold


def perturbation_delta(r: float, epsilon: float, kind: str) -> float:
    """δ for the collapsing (ε(1-r)/(3(1+r))) or stabilizing (ε(1-r)/(6(1+r))) construction."""
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    scale = {"collapse": 3.0, "stabilize": 6.0}[kind]
    return epsilon * (1.0 - r) / (scale * (1.0 + r))


def _zero_quotient(fam: CocycleFamily, p: SymbolProcess, i: int, R: float, tol: float):
    x = complex(fixed_point(fam, p, i, R, tol))
    y = complex(fixed_point(fam, p, i + 1, R, tol))
    T = map_at(fam, p, i)
    P = divide_out_zero(conjugate(T, pre=x, post=y))
    return T, x, y, P, complex(P.value(0j))


def collapse_perturbation(fam: CocycleFamily, proc: SymbolProcess, R: float, epsilon: float,
                          tol: float = 1e-12) -> CocycleFamily:
    """S_ω with S'_ω(x_ω) = 0 wherever |T̃'_ω(0)| < δ, and sup over C_1 of |S_ω - T_ω| ≤ ε."""
    r = family_contraction(fam.maps, R)
    delta = perturbation_delta(r, epsilon, "collapse")

    def hook(p: SymbolProcess, i: int) -> AnalyticMap:
        T, x, y, P, p0 = _zero_quotient(fam, p, i, R, tol)
        if abs(p0) >= delta:
            return T
        Q = compose(MobiusDiscAutomorphism(-p0), P)
        return conjugate(times_z(Q), pre=-x, post=-y)

    return CocycleFamily(
        maps=fam.maps,
        hook=hook,
        fixed_point_source=lambda p, i: fixed_point(fam, p, i, R, tol),
        label=f"collapse({fam.label}, eps={epsilon:g}, delta={delta:.3g})",
    )


def stabilize_perturbation(fam: CocycleFamily, proc: SymbolProcess, R: float, epsilon: float,
                           tol: float = 1e-12) -> CocycleFamily:
    """S_ω with |S'_ω(x_ω)| > ((1-r)/(1+r))²δ everywhere, and sup over C_1 of |S_ω - T_ω| ≤ ε."""
    r = family_contraction(fam.maps, R)
    delta = perturbation_delta(r, epsilon, "stabilize")
    shift = MobiusDiscAutomorphism(2.0 * delta)

    def hook(p: SymbolProcess, i: int) -> AnalyticMap:
        T, x, y, P, p0 = _zero_quotient(fam, p, i, R, tol)
        if abs(p0) > delta:
            return T
        return conjugate(times_z(compose(shift, P)), pre=-x, post=-y)

    return CocycleFamily(
        maps=fam.maps,
        hook=hook,
        fixed_point_source=lambda p, i: fixed_point(fam, p, i, R, tol),
        label=f"stabilize({fam.label}, eps={epsilon:g}, delta={delta:.3g})",
    )


def static_perturbation(fam: CocycleFamily, epsilon: float) -> CocycleFamily:
    """M_δ ∘ T for every symbol map, δ chosen so the displacement is exactly ε."""
    shift = MobiusDiscAutomorphism(mobius_for_displacement(epsilon))
    return CocycleFamily(maps=tuple(compose(shift, T) for T in fam.maps),
                         label=f"static({fam.label}, eps={epsilon:g})")


def quenched_perturbation(fam: CocycleFamily, epsilon: float, noise_seed: int) -> CocycleFamily:
    """Rotate T_ω by an independent angle θ with |exp(iθ) - 1| ≤ ε at each position.

    Rotations leave |T| unchanged, so the symbol maps still bound the contraction.
    """
    theta_max = 2.0 * math.asin(min(epsilon, 2.0) / 2.0)

    def hook(p: SymbolProcess, i: int) -> AnalyticMap:
        u = float(uniform_at(noise_seed, np.array([i]), stream=1)[0])
        theta = theta_max * (2.0 * u - 1.0)
        return compose(rotation(theta / (2.0 * math.pi)), map_at(fam, p, i))

    return CocycleFamily(maps=fam.maps, hook=hook, label=f"quenched({fam.label}, eps={epsilon:g})")


def zero_run_series(p: float, base: float = 2.0) -> Optional[float]:
    """Σ_n (base·p)^n, or None when it diverges."""
    q = base * p
    return 1.0 / (1.0 - q) if q < 1.0 else None


def collapse_criterion(p: float, noise: str = "none") -> bool:
    """Whether the {T0, T1} cocycle with P([0]) = p has Λ = -∞.

    Unperturbed: Σ(2p)^n diverges iff p ≥ 1/2.  Gaussian noise: Σ 4^n p^(n-1)(1-p)
    diverges iff p ≥ 1/4.  Dyadic uniform noise collapses for every p > 0.
    """
    if noise == "none":
        return zero_run_series(p, 2.0) is None
    if noise == "gaussian":
        return p > 0 and zero_run_series(p, 4.0) is None
    if noise == "uniform":
        return p > 0
    raise DomainError(f"unknown noise kind {noise!r}")


def t0t1_lambda_bounds(p: float) -> Tuple[ExponentValue, ExponentValue]:
    """Two-sided bracket for Λ of {z², ((z+1/4)/(1+z/4))²} with P([0]) = p."""
    series = zero_run_series(p, 2.0)
    if series is None:
        return COLLAPSED, COLLAPSED
    lower = (1 - p) * math.log(15.0 / 32.0) + p * (1 - p) * math.log(T0T1_B) * series
    upper = (1 - p) * math.log(2.0 / 3.0) + p * math.log(2.0) + p * (1 - p) * math.log(T0T1_A) * series
    return lower, upper
