"""Finite Blaschke products, Möbius automorphisms and the analytic maps built from them.

Every map evaluates on complex scalars, numpy arrays and mpmath ``mpc`` values
(the extended-exponent path used for random fixed points that fall below the
double range).  Maps are immutable; evaluation is pure.
"""

import cmath
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
from scipy.optimize import minimize_scalar

from src.base.errors import DomainError, InfeasibleRadiusError

logger = logging.getLogger(__name__)

POLE_GUARD = 1e-300
ZERO_MARGIN = 1e-8
R_MIN, R_MAX = 1e-3, 1.0 - 1e-3


class PointAtInfinity(Enum):
    """Tagged value for T(∞) = ∞."""
    POINT = "infinity"

    def __repr__(self) -> str:
        return "INFINITY"


INFINITY = PointAtInfinity.POINT


def _prepare(z: Any) -> Any:
    """Normalize an input point to complex128 arrays, Python complex or mpc."""
    if isinstance(z, np.ndarray):
        return z.astype(np.complex128, copy=False)
    if isinstance(z, (list, tuple)):
        return np.asarray(z, dtype=np.complex128)
    if isinstance(z, (mpmath.mpc, mpmath.mpf)):
        return mpmath.mpc(z)
    return complex(z)


def _modulus(w: Any) -> Any:
    return np.abs(w) if isinstance(w, np.ndarray) else abs(w)


def _guard_pole(denominator: Any, label: str) -> None:
    small = _modulus(denominator) < POLE_GUARD
    if np.any(small) if isinstance(small, np.ndarray) else small:
        raise DomainError(f"{label}: evaluation point within {POLE_GUARD:g} of a pole")


class AnalyticMap(ABC):
    """An analytic self-map of the closed disc carrying its exact derivative."""

    @property
    @abstractmethod
    def label(self) -> str:
        """Short human-readable description used in provenance tags."""

    @property
    def preserves_circle(self) -> bool:
        return True

    @abstractmethod
    def _value(self, z: Any) -> Any:
        pass

    @abstractmethod
    def _derivative(self, z: Any) -> Any:
        pass

    def value(self, z: Any) -> Any:
        return self._value(_prepare(z))

    def derivative(self, z: Any) -> Any:
        return self._derivative(_prepare(z))

    def __call__(self, z: Any) -> Any:
        return self.value(z)


@dataclass(frozen=True, eq=True)
class BlaschkeProduct(AnalyticMap):
    """T(z) = ζ ∏ (z - ζ_j)/(1 - conj(ζ_j) z) with ζ = exp(2πi·rotation_phase)."""

    rotation_phase: float = 0.0
    zeros: Tuple[complex, ...] = ()

    def __post_init__(self):
        zeros = tuple(complex(z) for z in self.zeros)
        for zeta in zeros:
            if abs(zeta) > 1.0 - ZERO_MARGIN:
                raise DomainError(f"zero {zeta} is not strictly inside the unit disc")
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "rotation_phase", float(self.rotation_phase) % 1.0)

    @cached_property
    def rotation(self) -> complex:
        if self.rotation_phase == 0.0:
            return 1.0 + 0.0j
        return cmath.exp(2j * cmath.pi * self.rotation_phase)

    @property
    def degree(self) -> int:
        return len(self.zeros)

    @property
    def label(self) -> str:
        zeros = ", ".join(f"{z.real:.4g}{z.imag:+.4g}j" for z in self.zeros)
        return f"B(phase={self.rotation_phase:.4g}; {zeros})"

    def _factors(self, z: Any) -> List[Tuple[Any, Any]]:
        pairs = []
        for zeta in self.zeros:
            den = 1.0 - zeta.conjugate() * z
            _guard_pole(den, self.label)
            pairs.append(((z - zeta) / den, (1.0 - abs(zeta) ** 2) / (den * den)))
        return pairs

    def _value(self, z: Any) -> Any:
        out = self.rotation + 0 * z
        for f, _ in self._factors(z):
            out = out * f
        return out

    def _derivative(self, z: Any) -> Any:
        pairs = self._factors(z)
        total = 0 * z
        for j, (_, fprime) in enumerate(pairs):
            term = fprime
            for i, (f, _) in enumerate(pairs):
                if i != j:
                    term = term * f
            total = total + term
        return self.rotation * total

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rotation_phase": self.rotation_phase,
            "zeros": [[z.real, z.imag] for z in self.zeros],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BlaschkeProduct":
        zeros = [complex(re, im) for re, im in data.get("zeros", [])]
        return cls(rotation_phase=data.get("rotation_phase", 0.0), zeros=tuple(zeros))


@dataclass(frozen=True, eq=True)
class MobiusDiscAutomorphism(AnalyticMap):
    """M_a(z) = (z + a)/(1 + conj(a) z)."""

    a: complex = 0j

    def __post_init__(self):
        a = complex(self.a)
        if abs(a) >= 1.0:
            raise DomainError(f"Möbius parameter {a} must lie in the open unit disc")
        object.__setattr__(self, "a", a)

    @property
    def label(self) -> str:
        return f"M({self.a.real:.4g}{self.a.imag:+.4g}j)"

    def _value(self, z: Any) -> Any:
        den = 1.0 + self.a.conjugate() * z
        _guard_pole(den, self.label)
        return (z + self.a) / den

    def _derivative(self, z: Any) -> Any:
        den = 1.0 + self.a.conjugate() * z
        _guard_pole(den, self.label)
        return (1.0 - abs(self.a) ** 2) / (den * den)

    def inverse(self) -> "MobiusDiscAutomorphism":
        return MobiusDiscAutomorphism(-self.a)

    def lipschitz_bound(self) -> float:
        """Bound on |M_a'| over the closed disc."""
        return (1.0 + abs(self.a)) / (1.0 - abs(self.a))

    def displacement_bound(self) -> float:
        """sup of |M_a(z) - z| over the closed disc, attained on C_1 where Re(z conj(a)) = -|a|²."""
        return 2.0 * abs(self.a)

    def as_blaschke(self) -> BlaschkeProduct:
        return BlaschkeProduct(0.0, (-self.a,))


@dataclass(frozen=True, eq=False)
class ComposedMap(AnalyticMap):
    outer: AnalyticMap
    inner: AnalyticMap

    @property
    def label(self) -> str:
        return f"{self.outer.label}∘{self.inner.label}"

    @property
    def preserves_circle(self) -> bool:
        return self.outer.preserves_circle and self.inner.preserves_circle

    def _value(self, z: Any) -> Any:
        return self.outer._value(self.inner._value(z))

    def _derivative(self, z: Any) -> Any:
        return self.outer._derivative(self.inner._value(z)) * self.inner._derivative(z)


@dataclass(frozen=True, eq=False)
class ZeroDividedMap(AnalyticMap):
    """P(z) = T(z)/z for a map with T(0) = 0, with P(0) = T'(0).

    Near the origin P is evaluated from Taylor coefficients obtained by a
    trapezoid sum of T on |w| = 1/2, which keeps the quotient accurate for
    arbitrarily small (including mpc) arguments.
    """

    base: AnalyticMap
    taylor_radius: float = 0.5
    taylor_nodes: int = 128
    taylor_order: int = 12
    switch_radius: float = 1e-3

    @property
    def label(self) -> str:
        return f"({self.base.label})/z"

    @property
    def preserves_circle(self) -> bool:
        return self.base.preserves_circle

    @cached_property
    def coefficients(self) -> Tuple[complex, ...]:
        m = self.taylor_nodes
        w = self.taylor_radius * np.exp(2j * np.pi * np.arange(m) / m)
        t = np.fft.fft(self.base._value(w)) / m
        powers = self.taylor_radius ** np.arange(self.taylor_order + 2)
        coeffs = [complex(self.base._derivative(0j))]
        coeffs += [complex(t[k + 1] / powers[k + 1]) for k in range(1, self.taylor_order + 1)]
        return tuple(coeffs)

    def _series(self, z: Any) -> Any:
        out = 0 * z
        for c in reversed(self.coefficients):
            out = out * z + c
        return out

    def _series_derivative(self, z: Any) -> Any:
        out = 0 * z
        for k in range(len(self.coefficients) - 1, 0, -1):
            out = out * z + k * self.coefficients[k]
        return out

    def _value(self, z: Any) -> Any:
        if isinstance(z, np.ndarray):
            near = np.abs(z) < self.switch_radius
            out = np.empty_like(z)
            out[near] = self._series(z[near])
            far = z[~near]
            out[~near] = self.base._value(far) / far
            return out
        if _modulus(z) < self.switch_radius:
            return self._series(z)
        return self.base._value(z) / z

    def _derivative(self, z: Any) -> Any:
        if isinstance(z, np.ndarray):
            near = np.abs(z) < self.switch_radius
            out = np.empty_like(z)
            out[near] = self._series_derivative(z[near])
            far = z[~near]
            out[~near] = (self.base._derivative(far) * far - self.base._value(far)) / (far * far)
            return out
        if _modulus(z) < self.switch_radius:
            return self._series_derivative(z)
        return (self.base._derivative(z) * z - self.base._value(z)) / (z * z)


@dataclass(frozen=True, eq=False)
class ZeroMultipliedMap(AnalyticMap):
    """z·Q(z)."""

    base: AnalyticMap

    @property
    def label(self) -> str:
        return f"z·({self.base.label})"

    @property
    def preserves_circle(self) -> bool:
        return self.base.preserves_circle

    def _value(self, z: Any) -> Any:
        return z * self.base._value(z)

    def _derivative(self, z: Any) -> Any:
        return self.base._value(z) + z * self.base._derivative(z)


def evaluate(T: AnalyticMap, z: Any) -> Any:
    """T(z)."""
    return T.value(z)


def derivative(T: AnalyticMap, z: Any) -> Any:
    """T'(z)."""
    return T.derivative(z)


def compose(outer: AnalyticMap, inner: AnalyticMap) -> AnalyticMap:
    return ComposedMap(outer, inner)


def rotation(phase: float) -> BlaschkeProduct:
    """z ↦ exp(2πi·phase) z."""
    return BlaschkeProduct(phase, (0j,))


def conjugate(T: AnalyticMap, pre: complex, post: complex) -> AnalyticMap:
    """M_post^{-1} ∘ T ∘ M_pre."""
    return compose(MobiusDiscAutomorphism(-post), compose(T, MobiusDiscAutomorphism(pre)))


def times_z(Q: AnalyticMap) -> AnalyticMap:
    return ZeroMultipliedMap(Q)


def divide_out_zero(T: AnalyticMap) -> AnalyticMap:
    """Return P with T(z) = z·P(z)."""
    t0 = abs(T.value(0j))
    if t0 >= 1e-10:
        raise DomainError(f"divide_out_zero needs T(0) = 0, got |T(0)| = {t0:.3g}")
    return ZeroDividedMap(T)


def square_map() -> BlaschkeProduct:
    """T(z) = z²."""
    return BlaschkeProduct(0.0, (0j, 0j))


def squared_mobius(a: float) -> BlaschkeProduct:
    """T(z) = ((z + a)/(1 + a z))² for real a."""
    return BlaschkeProduct(0.0, (complex(-a), complex(-a)))


def zero_fixing_product(a: float) -> BlaschkeProduct:
    """B_a(z) = z((z - a)/(1 - a z))², which fixes 0 with B_a'(0) = a²."""
    return BlaschkeProduct(0.0, (0j, complex(a), complex(a)))


def mobius_for_displacement(eps: float) -> float:
    """The δ > 0 with sup over the closed disc of |M_δ(z) - z| equal to eps."""
    if not 0.0 < eps < 2.0:
        raise DomainError(f"displacement {eps} outside (0, 2)")
    return eps / 2.0


def hyperbolic_distance(z: Any, w: Any, R: float) -> Any:
    """Hyperbolic distance on the disc of radius R (curvature scaled to R)."""
    u = np.asarray(z, dtype=np.complex128) / R
    v = np.asarray(w, dtype=np.complex128) / R
    ratio = np.abs(u - v) / np.abs(1.0 - np.conj(u) * v)
    return 2.0 * np.arctanh(np.minimum(ratio, 1.0))


def r_at_radius(T: AnalyticMap, R: float, samples: int = 4096) -> float:
    """max over |z| = R of |T(z)|."""
    if not 0.0 < R < 1.0:
        raise DomainError(f"radius {R} outside (0, 1)")
    theta = 2.0 * np.pi * np.arange(samples) / samples
    modulus = np.abs(T.value(R * np.exp(1j * theta)))
    k = int(np.argmax(modulus))
    best = float(modulus[k])
    step = 2.0 * np.pi / samples

    def negative_modulus(t: float) -> float:
        return -abs(T.value(R * cmath.exp(1j * t)))

    try:
        res = minimize_scalar(
            negative_modulus,
            bracket=(theta[k] - step, theta[k], theta[k] + step),
            method="golden",
            options={"xtol": 1e-12},
        )
        best = max(best, -float(res.fun))
    except (ValueError, RuntimeError):
        # flat modulus: no strict bracket, the sample maximum is exact
        pass
    return best


def family_contraction(family: Sequence[AnalyticMap], R: float) -> float:
    """r(R) = max over the family of r_at_radius."""
    return max(r_at_radius(T, R) for T in family)


def admissible_radius(family: Sequence[AnalyticMap], R_hint: Optional[float] = None,
                      grid_points: int = 64) -> float:
    """An R in (0, 1) with family_contraction(R) < R."""
    maps = list(family)
    if not maps:
        raise DomainError("admissible_radius needs at least one map")

    def feasible(R: float) -> bool:
        return family_contraction(maps, R) < R

    if R_hint is not None and 0.0 < R_hint < 1.0 and feasible(R_hint):
        return float(R_hint)

    grid = np.linspace(R_MIN, R_MAX, grid_points)
    first = next((i for i, R in enumerate(grid) if feasible(R)), None)
    if first is None:
        raise InfeasibleRadiusError(
            f"no R in ({R_MIN:g}, {R_MAX:g}) with r(R) < R for {[T.label for T in maps]}"
        )
    if first == 0:
        beta = float(grid[0])
    else:
        lo, hi = float(grid[first - 1]), float(grid[first])
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                hi = mid
            else:
                lo = mid
        beta = hi
    R = 0.5 * (beta + 1.0)
    if not feasible(R):
        R = beta
    logger.info("admissible radius %.6f (feasible interval starts near %.6f)", R, beta)
    return float(R)


def martin_expanding_check(T: BlaschkeProduct) -> Tuple[bool, float]:
    """Martin's sufficient condition Σ (1-|ζ_j|)/(1+|ζ_j|) > 1 for expansion on the circle."""
    S = float(sum((1.0 - abs(z)) / (1.0 + abs(z)) for z in T.zeros))
    return S > 1.0, S


def min_circle_derivative(T: AnalyticMap, samples: int = 4096) -> float:
    theta = 2.0 * np.pi * np.arange(samples) / samples
    return float(np.min(np.abs(T.derivative(np.exp(1j * theta)))))


def sup_distance(S: AnalyticMap, T: AnalyticMap, samples: int = 512) -> float:
    """max over sampled points of C_1 of |S - T|."""
    z = np.exp(2j * np.pi * np.arange(samples) / samples)
    return float(np.max(np.abs(S.value(z) - T.value(z))))


def at_infinity(T: AnalyticMap) -> Union[complex, PointAtInfinity]:
    """T(∞), or INFINITY."""
    if isinstance(T, BlaschkeProduct):
        if any(z == 0 for z in T.zeros):
            return INFINITY
        out = T.rotation
        for zeta in T.zeros:
            out *= -1.0 / zeta.conjugate()
        return complex(out)
    if isinstance(T, MobiusDiscAutomorphism):
        return INFINITY if T.a == 0 else 1.0 / T.a.conjugate()
    if not T.preserves_circle:
        raise DomainError(f"{T.label} does not preserve C_1; T(∞) is not determined by T(0)")
    # circle-preserving maps commute with z ↦ 1/conj(z)
    t0 = complex(T.value(0j))
    if abs(t0) < POLE_GUARD:
        return INFINITY
    return 1.0 / t0.conjugate()
