"""Lyapunov exponents of matrix cocycles by QR re-orthonormalization, and the
subspace tools used to study fast spaces and their slow complements."""

import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.linalg as sla

from src.base.errors import DomainError, TransversalityError
from src.base.state import COLLAPSED, ExponentValue, LyapunovReport
from src.driving import CocycleFamily, SymbolProcess, map_at
from src.hardy import (
    HardyBasisSpec,
    NoiseOperator,
    TransferMatrix,
    assemble_transfer,
    compose_noise,
    expand_inner_pole,
    expand_outer_pole,
    top_direction,
)

logger = logging.getLogger(__name__)

UNDERFLOW = 1e-300
RANK_RTOL = 1e-13
TRANSVERSALITY_LIMIT = 1e12
ORACLE_MAX_STEPS = 30
BATCHES = 20

MatrixLike = Union[TransferMatrix, np.ndarray]
MatrixSource = Callable[[int], MatrixLike]


def _as_array(A: MatrixLike) -> np.ndarray:
    return A.A if isinstance(A, TransferMatrix) else np.asarray(A, dtype=np.complex128)


def _truncation_order(A: MatrixLike) -> int:
    if isinstance(A, TransferMatrix):
        return A.spec.N
    return (np.asarray(A).shape[0] - 1) // 2


def initial_frame(dimension: int, k: int, seed: Optional[int] = None) -> np.ndarray:
    """Orthonormal random complex frame, reproducible from the seed."""
    if not 1 <= k <= dimension:
        raise DomainError(f"frame width {k} outside 1..{dimension}")
    rng = np.random.default_rng(seed if seed is not None else 0)
    G = rng.standard_normal((dimension, k)) + 1j * rng.standard_normal((dimension, k))
    Q, _ = np.linalg.qr(G)
    return Q


@dataclass
class QRState:
    """Frame pushed through the cocycle with accumulated log|R_jj| per original column.

    Columns whose diagonal entry underflows are frozen (deflated) and the
    survivors carry on in `frame`; `active` maps frame columns to original ones.
    """

    frame: np.ndarray
    accumulated_logs: np.ndarray
    steps: int = 0
    collapsed: np.ndarray = None
    collapsed_at: List[Optional[int]] = None
    active: List[int] = None
    increments: List[Tuple[int, np.ndarray]] = field(default_factory=list)

    def __post_init__(self):
        k = self.frame.shape[1]
        if self.collapsed is None:
            self.collapsed = np.zeros(k, dtype=bool)
        if self.collapsed_at is None:
            self.collapsed_at = [None] * k
        if self.active is None:
            self.active = list(range(k))

    @classmethod
    def start(cls, frame: np.ndarray) -> "QRState":
        return cls(frame=frame, accumulated_logs=np.zeros(frame.shape[1]))

    @property
    def width(self) -> int:
        return len(self.collapsed)

    def reorthonormalize(self, Y: np.ndarray, span: int, accumulate: bool, step: int) -> None:
        """QR-factorize the pushed frame Y covering `span` steps since the last factorization."""
        Q, Rm = np.linalg.qr(Y)
        diag = np.abs(np.diag(Rm))
        dead = [j for j, v in enumerate(diag) if v < UNDERFLOW]
        if dead:
            for j in dead:
                col = self.active[j]
                self.collapsed[col] = True
                self.collapsed_at[col] = max(step, 0)
                logger.debug("column %d collapsed at step %d", col, step)
            keep = [j for j in range(len(self.active)) if j not in dead]
            self.active = [self.active[j] for j in keep]
            if not keep:
                self.frame = Y[:, :0]
                return
            Q, Rm = np.linalg.qr(Y[:, keep])
            diag = np.abs(np.diag(Rm))
        self.frame = Q
        if accumulate:
            logs = np.zeros(self.width)
            logs[self.active] = np.log(diag)
            self.accumulated_logs += logs
            self.increments.append((span, logs))

    def batch_stderr(self) -> List[Optional[float]]:
        if len(self.increments) < 2 * BATCHES:
            return [None] * self.width
        spans = np.array([s for s, _ in self.increments], dtype=float)
        logs = np.stack([v for _, v in self.increments])
        cuts = np.array_split(np.arange(len(spans)), BATCHES)
        means = np.stack([logs[c].sum(axis=0) / spans[c].sum() for c in cuts])
        err = means.std(axis=0, ddof=1) / math.sqrt(BATCHES)
        return [None if self.collapsed[j] else float(err[j]) for j in range(self.width)]

    def exponents(self) -> List[ExponentValue]:
        return [COLLAPSED if self.collapsed[j] else float(self.accumulated_logs[j] / self.steps)
                for j in range(self.width)]


def run_qr(source: MatrixSource, start: int, n_steps: int, k: int, reorth_every: int = 1,
           burn_in: int = 0, seed: Optional[int] = None, frame: Optional[np.ndarray] = None) -> QRState:
    """Push a k-frame through positions start..start+burn_in+n_steps-1."""
    if n_steps < 1:
        raise DomainError("n_steps must be at least 1")
    if reorth_every < 1:
        raise DomainError("reorth_every must be at least 1")
    first = _as_array(source(start))
    Q = initial_frame(first.shape[0], k, seed) if frame is None else np.asarray(frame, dtype=np.complex128)
    if Q.shape[0] != first.shape[0]:
        raise DomainError(f"frame has {Q.shape[0]} rows, matrices are {first.shape[0]}-dimensional")
    state = QRState.start(Q)

    total = burn_in + n_steps
    pending = 0
    Y = state.frame
    for t in range(total):
        A = first if t == 0 else _as_array(source(start + t))
        Y = A @ Y
        pending += 1
        # burn-in is factorized on its own so no accumulated span straddles it
        boundary = t == burn_in - 1 or t == total - 1
        if pending == reorth_every or boundary:
            state.reorthonormalize(Y, pending, accumulate=t >= burn_in, step=t - burn_in)
            pending = 0
            Y = state.frame
            if not state.active:
                break
    state.steps = n_steps
    return state


def qr_exponents(source: MatrixSource, start: int, n_steps: int, k: int, reorth_every: int = 1,
                 burn_in: int = 0, seed: Optional[int] = None) -> LyapunovReport:
    """μ̂_j = accumulated log|R_jj| / n_steps, sorted descending; collapsed columns are -inf."""
    state = run_qr(source, start, n_steps, k, reorth_every, burn_in, seed)
    exponents = state.exponents()
    stderr = state.batch_stderr()
    order = sorted(range(k), key=lambda j: math.inf if state.collapsed[j] else -exponents[j])
    if state.collapsed.any():
        logger.info("%d of %d columns collapsed", int(state.collapsed.sum()), k)
    return LyapunovReport(
        exponents=[exponents[j] for j in order],
        stderr=[stderr[j] for j in order],
        collapsed_at=[state.collapsed_at[j] for j in order],
        n_steps=n_steps,
        burn_in=burn_in,
        N=_truncation_order(source(start)),
        seed=seed,
    )


def exponent_sums_sv(source: MatrixSource, start: int, n_steps: int, l: int,
                     burn_in: int = 0, seed: Optional[int] = None) -> ExponentValue:
    """(1/n) Σ_steps log ∏ top-l singular values of the step matrix on the propagated frame."""
    first = _as_array(source(start))
    Q = initial_frame(first.shape[0], l, seed)
    total = 0.0
    for t in range(burn_in + n_steps):
        A = first if t == 0 else _as_array(source(start + t))
        Y = A @ Q
        sv = np.linalg.svd(Y, compute_uv=False)
        if sv.min() < UNDERFLOW:
            return COLLAPSED
        if t >= burn_in:
            total += float(np.sum(np.log(sv)))
        Q, _ = np.linalg.qr(Y)
    return total / n_steps


def step_product(source: MatrixSource, start: int, n: int) -> np.ndarray:
    """A_{start+n-1} ⋯ A_start."""
    P = _as_array(source(start))
    for t in range(1, n):
        P = _as_array(source(start + t)) @ P
    return P


def product_singular_values(source: MatrixSource, start: int, n: int) -> np.ndarray:
    """(1/n) log σ_j of the explicit n-step product, descending; -inf where σ_j = 0."""
    if not 1 <= n <= ORACLE_MAX_STEPS:
        raise DomainError(f"explicit products are limited to 1..{ORACLE_MAX_STEPS} steps")
    sv = np.linalg.svd(step_product(source, start, n), compute_uv=False)
    with np.errstate(divide="ignore"):
        return np.log(sv) / n


@dataclass(frozen=True)
class SubspaceEstimate:
    basis: np.ndarray
    position: int
    label: str

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def dimension(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def spanned_by(cls, vectors: np.ndarray, position: int, label: str) -> "SubspaceEstimate":
        """Orthonormalized span of the given columns."""
        Q, _ = np.linalg.qr(np.asarray(vectors, dtype=np.complex128))
        return cls(Q, position, label)


def propagate_subspace(source: MatrixSource, V0: SubspaceEstimate, n_steps: int) -> SubspaceEstimate:
    """Image of span(V0) under the n-step product; dependent directions are dropped."""
    Q = V0.basis
    for t in range(n_steps):
        Y = _as_array(source(V0.position + t)) @ Q
        Q, Rm = np.linalg.qr(Y)
        diag = np.abs(np.diag(Rm))
        # R_jj of an annihilated direction is roundoff, not underflow: cut relative to the largest
        floor = max(UNDERFLOW, RANK_RTOL * float(diag.max(initial=0.0)))
        keep = np.nonzero(diag >= floor)[0]
        if keep.size < Q.shape[1]:
            logger.debug("span drops to rank %d at step %d", keep.size, t)
            if keep.size == 0:
                Q = Y[:, :0]
                break
            Q, _ = np.linalg.qr(Y[:, keep])
    return SubspaceEstimate(Q, V0.position + n_steps, f"propagated[{V0.label}]")


def analytic_fast_basis(x: complex, N_poles: int, spec: HardyBasisSpec, position: int = 0) -> SubspaceEstimate:
    """Poles of order 2..N_poles+1 at x, the exponent-0 direction, and the reflected poles."""
    if N_poles < 0:
        raise DomainError("N_poles must be nonnegative")
    x = complex(x)
    columns = [expand_inner_pole(x, j, spec).coefficients for j in range(N_poles, 0, -1)]
    columns.append(top_direction(x, spec).coefficients)
    columns += [expand_outer_pole(x, j, spec).coefficients for j in range(1, N_poles + 1)]
    return SubspaceEstimate.spanned_by(np.column_stack(columns), position, f"analytic({N_poles})")


def _basis(U: Union[SubspaceEstimate, np.ndarray]) -> np.ndarray:
    return U.basis if isinstance(U, SubspaceEstimate) else np.asarray(U, dtype=np.complex128)


def principal_angles(U: Union[SubspaceEstimate, np.ndarray], V: Union[SubspaceEstimate, np.ndarray]) -> List[float]:
    """Principal angles in [0, π/2], ascending."""
    A, B = _basis(U), _basis(V)
    if A.ndim == 1:
        A = A[:, None]
    if B.ndim == 1:
        B = B[:, None]
    if A.shape[0] != B.shape[0]:
        raise DomainError(f"ambient dimensions differ: {A.shape[0]} vs {B.shape[0]}")
    angles = sla.subspace_angles(A, B)
    return sorted(float(np.clip(a, 0.0, np.pi / 2)) for a in angles)


def projection_norm(E: Union[SubspaceEstimate, np.ndarray], F: Union[SubspaceEstimate, np.ndarray]) -> float:
    """‖Π_{E∥F}‖: the projector fixing span(E) and annihilating span(F)."""
    Eb, Fb = _basis(E), _basis(F)
    if Eb.ndim == 1:
        Eb = Eb[:, None]
    if Fb.ndim == 1:
        Fb = Fb[:, None]
    if Eb.shape[0] != Fb.shape[0] or Eb.shape[1] + Fb.shape[1] != Eb.shape[0]:
        raise DomainError(
            f"dim E + dim F = {Eb.shape[1] + Fb.shape[1]} does not match the ambient dimension {Eb.shape[0]}"
        )
    # orthonormal columns make both blocks well scaled
    Eq, _ = np.linalg.qr(Eb)
    Fq, _ = np.linalg.qr(Fb)
    M = np.hstack([Eq, Fq])
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > TRANSVERSALITY_LIMIT:
        raise TransversalityError(f"E and F nearly intersect (condition number {cond:.3g})")
    C = np.linalg.solve(M, np.eye(M.shape[0]))[: Eq.shape[1]]
    return float(np.linalg.norm(C, 2))


def slow_complement(source: MatrixSource, position: int, k: int, n_future: int,
                    seed: Optional[int] = None) -> SubspaceEstimate:
    """Slow space at `position`: complement of the top-k directions of the future n-step product.

    The top-k right-singular space of A_{position+n-1}⋯A_position is found by
    running the adjoint cocycle backward with QR, then complemented.
    """
    dim = _as_array(source(position)).shape[0]
    Q = initial_frame(dim, k, seed)
    for t in range(n_future - 1, -1, -1):
        Q, _ = np.linalg.qr(_as_array(source(position + t)).conj().T @ Q)
    complement = sla.null_space(Q.conj().T)
    return SubspaceEstimate(complement, position, f"slow({k})")


class TransferSource:
    """position → transfer matrix for a cocycle family on a fixed basis.

    Symbol-indexed families assemble one matrix per symbol; derived families
    assemble at each position on demand.
    """

    def __init__(self, fam: CocycleFamily, proc: SymbolProcess, spec: HardyBasisSpec,
                 noise: Optional[NoiseOperator] = None, chunk: int = 4096):
        self.fam = fam
        self.proc = proc
        self.spec = spec
        self.noise = noise
        self.chunk = chunk
        self._by_symbol: Dict[int, TransferMatrix] = {}
        self._symbols: Dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    def _finish(self, A: TransferMatrix) -> TransferMatrix:
        return A if self.noise is None else compose_noise(A, self.noise)

    def _symbol(self, i: int) -> int:
        block = i // self.chunk
        symbols = self._symbols.get(block)
        if symbols is None:
            symbols = self.proc.symbols(block * self.chunk, (block + 1) * self.chunk)
            with self._lock:
                symbols = self._symbols.setdefault(block, symbols)
        return int(symbols[i - block * self.chunk])

    def for_symbol(self, s: int) -> TransferMatrix:
        cached = self._by_symbol.get(s)
        if cached is None:
            if s >= len(self.fam.maps):
                raise DomainError(f"symbol {s} has no map in a family of {len(self.fam.maps)}")
            cached = self._finish(assemble_transfer(self.fam.maps[s], self.spec))
            with self._lock:
                cached = self._by_symbol.setdefault(s, cached)
        return cached

    def __call__(self, i: int) -> TransferMatrix:
        if self.fam.symbolic:
            return self.for_symbol(self._symbol(i))
        return self._finish(assemble_transfer(map_at(self.fam, self.proc, i), self.spec))


def transfer_source(fam: CocycleFamily, proc: SymbolProcess, spec: HardyBasisSpec,
                    noise: Optional[NoiseOperator] = None) -> TransferSource:
    return TransferSource(fam, proc, spec, noise)
