"""Galerkin coordinates on H²(A_R) and transfer matrices of Blaschke maps.

Basis index convention: the monomial power k ∈ [-N, N], basis vector
e_k(z) = d_k z^k with d_k = (R^{2k} + R^{-2k})^{-1/2}.  The noise labels
ê_n = z^{n-1} appear only inside noise_diagonal.
"""

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import comb

from src.base.errors import AccuracyError, AssemblyError, DomainError
from src.blaschke import INFINITY, AnalyticMap, PointAtInfinity, r_at_radius

logger = logging.getLogger(__name__)

PROBE_TOLERANCE = 1e-12
MAX_QUADRATURE = 1 << 20


@dataclass(frozen=True)
class HardyBasisSpec:
    R: float
    N: int = 40
    quadrature_points: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.R < 1.0:
            raise DomainError(f"R = {self.R} outside (0, 1)")
        if self.N < 1:
            raise DomainError("truncation order must be positive")
        M = self.quadrature_points or max(512, 16 * self.N)
        if M < 8 * self.N:
            raise DomainError(f"quadrature_points {M} below the aliasing guard 8N = {8 * self.N}")
        object.__setattr__(self, "quadrature_points", int(M))

    @property
    def dimension(self) -> int:
        return 2 * self.N + 1

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @property
    def d(self) -> np.ndarray:
        k = self.modes.astype(float)
        return (self.R ** (2 * k) + self.R ** (-2 * k)) ** -0.5

    def index(self, k: int) -> int:
        if abs(k) > self.N:
            raise DomainError(f"mode {k} outside the window ±{self.N}")
        return k + self.N

    def describe(self) -> dict:
        return {"R": self.R, "N": self.N, "M": self.quadrature_points}


@dataclass(frozen=True)
class CoeffVector:
    """f = Σ c_k e_k; `dropped_mass` is the norm of truncated or reflected-out content."""
    coefficients: np.ndarray
    spec: HardyBasisSpec
    dropped_mass: float = 0.0

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    @property
    def monomial(self) -> np.ndarray:
        """Coefficients a_k of z^k."""
        return self.coefficients * self.spec.d

    @classmethod
    def from_monomials(cls, a: np.ndarray, spec: HardyBasisSpec, dropped_mass: float = 0.0) -> "CoeffVector":
        return cls(np.asarray(a, dtype=np.complex128) / spec.d, spec, dropped_mass)

    def __sub__(self, other: "CoeffVector") -> "CoeffVector":
        _same_spec(self.spec, other.spec)
        return CoeffVector(self.coefficients - other.coefficients, self.spec)

    def __add__(self, other: "CoeffVector") -> "CoeffVector":
        _same_spec(self.spec, other.spec)
        return CoeffVector(self.coefficients + other.coefficients, self.spec)


@dataclass(frozen=True)
class TransferMatrix:
    A: np.ndarray
    spec: HardyBasisSpec
    provenance: str = ""

    def apply(self, v: CoeffVector) -> CoeffVector:
        _same_spec(self.spec, v.spec)
        return CoeffVector(self.A @ v.coefficients, self.spec)

    def entry(self, n: int, m: int) -> complex:
        return complex(self.A[self.spec.index(n), self.spec.index(m)])


@dataclass(frozen=True)
class NoiseOperator:
    kind: Literal["none", "gaussian", "uniform"]
    epsilon: float
    spec: HardyBasisSpec
    multipliers: np.ndarray = field(repr=False)

    @property
    def tag(self) -> str:
        return "none" if self.kind == "none" else f"{self.kind}({self.epsilon:g})"


def _same_spec(a: HardyBasisSpec, b: HardyBasisSpec) -> None:
    if a != b:
        raise DomainError(f"basis mismatch: {a.describe()} vs {b.describe()}")


def _contour_matrix(T: AnalyticMap, spec: HardyBasisSpec, M: int) -> np.ndarray:
    """A_{n,m} by the M-point trapezoid rule on C_{1/R} (n ≥ 0) and C_R (n < 0).

    On the outer circle T(1/conj(w)) = 1/conj(T(w)), so both contours use the
    same values T(w_k), w_k = R·exp(2πik/M).
    """
    N, R = spec.N, spec.R
    theta = 2.0 * np.pi * np.arange(M) / M
    Tw = T.value(R * np.exp(1j * theta))
    if np.min(np.abs(Tw)) < 1e-300:
        raise AssemblyError(f"{T.label} vanishes on the contour |z| = {R}")
    modes = spec.modes
    shift = (modes + 1) % M
    d = spec.d
    A = np.zeros((spec.dimension, spec.dimension), dtype=np.complex128)

    # n ≥ 0: (1/M) Σ conj(T(w_k))^{n+1} z_k^{m+1},  z_k = exp(iθ_k)/R
    outer = np.conj(Tw)[None, :] ** (np.arange(N + 1)[:, None] + 1)
    F = np.fft.ifft(outer, axis=1)[:, shift]
    A[N:, :] = F * R ** (-(modes + 1.0))[None, :]

    # n < 0: (1/M) Σ T(w_k)^{|n|-1} w_k^{m+1}
    powers = np.arange(N, 0, -1) - 1
    inner = Tw[None, :] ** powers[:, None]
    F = np.fft.ifft(inner, axis=1)[:, shift]
    A[:N, :] = F * R ** (modes + 1.0)[None, :]

    return A * d[None, :] / d[:, None]


def _probe_entries(N: int) -> Sequence[Tuple[int, int]]:
    h = max(N // 2, 1)
    return [(0, 1), (1, 3), (-2, -2), (-3, -4), (h, N), (-h, -N), (N, N), (-N, -N)]


def assemble_transfer(T: AnalyticMap, spec: HardyBasisSpec) -> TransferMatrix:
    """Transfer matrix of ℒ_T in the normalized basis, certified by one doubling of M."""
    r = r_at_radius(T, spec.R)
    if r >= spec.R:
        raise AssemblyError(f"{T.label} does not contract the disc of radius {spec.R} (r = {r:.6g})")
    probes = [(spec.index(n), spec.index(m)) for n, m in _probe_entries(spec.N)]
    M = spec.quadrature_points
    coarse = _contour_matrix(T, spec, M)
    while True:
        if 2 * M > MAX_QUADRATURE:
            raise AccuracyError(f"{T.label}: probe entries unstable at M = {M}")
        fine = _contour_matrix(T, spec, 2 * M)
        gap = max(abs(fine[i, j] - coarse[i, j]) / max(1.0, abs(fine[i, j])) for i, j in probes)
        if gap <= PROBE_TOLERANCE:
            break
        logger.debug("%s: probe gap %.3g at M = %d, doubling", T.label, gap, M)
        coarse, M = fine, 2 * M
    return TransferMatrix(fine, spec, provenance=f"{T.label} | R={spec.R:g} N={spec.N} M={2 * M}")


def _geometric(x: complex, count: int) -> np.ndarray:
    """[1, x, x², ...] of length count."""
    out = np.empty(count, dtype=np.complex128)
    if count:
        out[0] = 1.0
        out[1:] = x
    return np.cumprod(out)


def _pole_tail(x: complex, spec: HardyBasisSpec) -> float:
    q = abs(x) / spec.R
    return q ** spec.N / (spec.R * np.sqrt(1.0 - q * q))


def expand_simple_pole(x: complex, spec: HardyBasisSpec) -> CoeffVector:
    """1/(z - x) = Σ_{k≥0} x^k z^{-k-1}, valid for |x| < R."""
    if abs(x) >= spec.R:
        raise DomainError(f"pole {x} is not inside |z| < R = {spec.R}")
    a = np.zeros(spec.dimension, dtype=np.complex128)
    # z^{-k-1} for k = 0..N-1 sits at indices N-1 down to 0
    a[: spec.N] = _geometric(complex(x), spec.N)[::-1]
    return CoeffVector.from_monomials(a, spec, dropped_mass=_pole_tail(x, spec))


def expand_inner_pole(x: complex, j: int, spec: HardyBasisSpec) -> CoeffVector:
    """1/(z - x)^{j+1} = Σ_{k≥j} C(k, j) x^{k-j} z^{-k-1}."""
    if j < 1 or j + 1 > spec.N:
        raise DomainError(f"pole order {j + 1} outside 2..{spec.N}")
    if abs(x) >= spec.R:
        raise DomainError(f"pole {x} is not inside |z| < R = {spec.R}")
    k = np.arange(j, spec.N)
    coeff = comb(k, j) * _geometric(complex(x), k.size)
    a = np.zeros(spec.dimension, dtype=np.complex128)
    a[spec.N - 1 - k] = coeff
    return CoeffVector.from_monomials(a, spec)


def expand_outer_pole(x: complex, j: int, spec: HardyBasisSpec) -> CoeffVector:
    """z^{j-1}/(1 - conj(x) z)^{j+1} = Σ_{k≥0} C(k+j, j) conj(x)^k z^{k+j-1}."""
    if j < 1 or j > spec.N:
        raise DomainError(f"pole order {j} outside 1..{spec.N}")
    if abs(x) >= spec.R:
        raise DomainError(f"pole 1/conj({x}) is not outside |z| > 1/R")
    powers = np.arange(j - 1, spec.N + 1)
    k = powers - (j - 1)
    coeff = comb(k + j, j) * _geometric(complex(x).conjugate(), k.size)
    a = np.zeros(spec.dimension, dtype=np.complex128)
    a[powers + spec.N] = coeff
    return CoeffVector.from_monomials(a, spec)


def expand_exterior_pole(w: Union[complex, PointAtInfinity], spec: HardyBasisSpec) -> CoeffVector:
    """1/(z - w) = -Σ_{k≥0} w^{-k-1} z^k for |w| > 1/R; the zero vector at w = ∞."""
    if w is INFINITY:
        return CoeffVector(np.zeros(spec.dimension, dtype=np.complex128), spec)
    w = complex(w)
    if abs(w) * spec.R <= 1.0:
        raise DomainError(f"pole {w} is not outside |z| > 1/R")
    a = np.zeros(spec.dimension, dtype=np.complex128)
    a[spec.N:] = -_geometric(1.0 / w, spec.N + 1) / w
    return CoeffVector.from_monomials(a, spec)


def top_direction(x: complex, spec: HardyBasisSpec) -> CoeffVector:
    """1/(z - x) - 1/(z - 1/conj(x)), which reduces to 1/z at x = 0."""
    if x == 0:
        return expand_simple_pole(0j, spec)
    return expand_simple_pole(x, spec) - expand_exterior_pole(1.0 / complex(x).conjugate(), spec)


def apply_inversion(v: CoeffVector) -> CoeffVector:
    """ℒ_I f(z) = conj(f(1/conj z))/z²: a_k z^k ↦ conj(a_k) z^{-k-2}.

    Modes N-1 and N reflect outside the window; their norm is reported as dropped mass.
    """
    spec, N = v.spec, v.spec.N
    a = v.monomial
    out = np.zeros_like(a)
    # source k in [-N, N-2] lands on -k-2 in [-N, N-2]
    src = np.arange(-N, N - 1)
    out[-src - 2 + N] = np.conj(a[src + N])
    lost_k = np.arange(N - 1, N + 1)
    lost = np.abs(a[lost_k + N]) / ((spec.R ** (2.0 * (lost_k + 2)) + spec.R ** (-2.0 * (lost_k + 2))) ** -0.5)
    return CoeffVector.from_monomials(out, spec, dropped_mass=float(np.linalg.norm(lost)))


def noise_diagonal(kind: str, epsilon: float, spec: HardyBasisSpec) -> NoiseOperator:
    """Multipliers μ_n on ê_n = z^{n-1}, stored by monomial power k = n - 1."""
    labels = spec.modes + 1.0
    if kind == "none":
        mu = np.ones(spec.dimension)
    elif epsilon <= 0:
        raise DomainError("noise size must be positive")
    elif kind == "gaussian":
        mu = np.exp(-2.0 * np.pi ** 2 * labels ** 2 * epsilon ** 2)
    elif kind == "uniform":
        argument = 2.0 * labels * epsilon
        mu = np.sinc(argument)
        # sin(2πnε) vanishes exactly when 2nε is a nonzero integer
        whole = np.rint(argument)
        mu[(np.abs(argument - whole) < 1e-12) & (whole != 0)] = 0.0
    else:
        raise DomainError(f"unknown noise kind {kind!r}")
    return NoiseOperator(kind=kind, epsilon=float(epsilon), spec=spec, multipliers=mu)


def compose_noise(A: TransferMatrix, noise: NoiseOperator) -> TransferMatrix:
    """N_ε ∘ ℒ: row k scaled by μ_{k+1}."""
    _same_spec(A.spec, noise.spec)
    if noise.kind == "none":
        return A
    return replace(A, A=noise.multipliers[:, None] * A.A, provenance=f"{noise.tag}∘[{A.provenance}]")


def operator_distance(A: TransferMatrix, B: TransferMatrix) -> float:
    """Spectral norm of A - B on the truncation."""
    _same_spec(A.spec, B.spec)
    return float(np.linalg.norm(A.A - B.A, 2))


def restricted_norm(A: Union[TransferMatrix, np.ndarray], spec: Optional[HardyBasisSpec] = None) -> float:
    """Spectral norm with the z^{-1} row and column removed."""
    matrix = A.A if isinstance(A, TransferMatrix) else np.asarray(A)
    spec = A.spec if isinstance(A, TransferMatrix) else spec
    keep = np.arange(matrix.shape[0]) != spec.index(-1)
    return float(np.linalg.norm(matrix[np.ix_(keep, keep)], 2))


def mass_row_residual(A: TransferMatrix) -> float:
    """max_m |coefficient of z^{-1} in ℒ(z^m) - δ_{m,-1}|."""
    spec = A.spec
    i = spec.index(-1)
    row = A.A[i, :] * spec.d[i] / spec.d
    target = np.zeros(spec.dimension)
    target[i] = 1.0
    return float(np.max(np.abs(row - target)))


def entry_decay_rate(A: TransferMatrix) -> float:
    """Slope of log max_m |A_{n,m}| against |n| between |n| = N/2 and |n| = N."""
    spec = A.spec
    half = max(spec.N // 2, 1)
    top = np.max(np.abs(A.A), axis=1)

    def level(n: int) -> float:
        return float(np.log(max(top[spec.index(n)], top[spec.index(-n)], 1e-300)))

    return (level(spec.N) - level(half)) / (spec.N - half)


def gaussian_power_multiplier(m: int, n: int, epsilon: float) -> float:
    """Multiplier of (N_ε ℒ_{z²})^n on ê_{2^n m}: exp(-2π²ε²m²(4^n - 1)/3)."""
    return float(np.exp(-2.0 * np.pi ** 2 * epsilon ** 2 * m ** 2 * (4.0 ** n - 1.0) / 3.0))


def uniform_power_multiplier(m: int, n: int, epsilon: float) -> float:
    """Multiplier of (U_ε ℒ_{z²})^n on ê_{2^n m}: ∏_{j<n} sinc-factors at labels 2^j m."""
    out = 1.0
    for j in range(n):
        arg = 2.0 * (2 ** j) * m * epsilon
        out *= 0.0 if (arg != 0 and abs(arg - round(arg)) < 1e-12) else float(np.sinc(arg))
    return out


def nilpotency_index(epsilon: float) -> Optional[int]:
    """k with ε = b/2^k for odd b, or None when ε is not dyadic."""
    frac = Fraction(epsilon).limit_denominator(1 << 40)
    if abs(float(frac) - epsilon) > 1e-15 or frac.numerator == 0:
        return None
    den = frac.denominator
    if den & (den - 1):
        return None
    return den.bit_length() - 1


def export_binary(A: TransferMatrix, path: Union[str, Path]) -> Path:
    """Little-endian i32 N, f64 R, then row-major interleaved (re, im) f64 pairs."""
    path = Path(path)
    with open(path, "wb") as f:
        f.write(np.array([A.spec.N], dtype="<i4").tobytes())
        f.write(np.array([A.spec.R], dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(A.A, dtype="<c16").tobytes())
    return path


def load_binary(path: Union[str, Path]) -> TransferMatrix:
    raw = Path(path).read_bytes()
    N = int(np.frombuffer(raw[:4], dtype="<i4")[0])
    R = float(np.frombuffer(raw[4:12], dtype="<f8")[0])
    spec = HardyBasisSpec(R=R, N=N)
    A = np.frombuffer(raw[12:], dtype="<c16").reshape(spec.dimension, spec.dimension).copy()
    return TransferMatrix(A, spec, provenance=f"loaded from {Path(path).name}")


def export_csv(A: TransferMatrix, path: Union[str, Path]) -> Path:
    """Long format: n, m, re, im."""
    spec = A.spec
    n, m = np.meshgrid(spec.modes, spec.modes, indexing="ij")
    frame = pd.DataFrame({
        "n": n.ravel(),
        "m": m.ravel(),
        "re": A.A.real.ravel(),
        "im": A.A.imag.ravel(),
    })
    frame.to_csv(path, index=False, lineterminator="\r\n", float_format="%.17g")
    return Path(path)
