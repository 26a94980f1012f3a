"""Counter-based two-sided symbol sequences and the cocycle families they drive."""

import bisect
import logging
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.base.errors import DomainError
from src.blaschke import AnalyticMap

logger = logging.getLogger(__name__)

BLOCK_SIZE = 1 << 16
MAX_LOOKBACK = 1 << 20
MEMO_CAPACITY = 1 << 18

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, elementwise on uint64 arrays (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        z = x + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def uniform_at(seed: int, positions: np.ndarray, stream: int = 0) -> np.ndarray:
    """Uniforms in [0, 1) that are a pure function of (seed, stream, position)."""
    key = _mix64(np.array([(seed ^ (stream << 32)) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]
    counters = np.asarray(positions, dtype=np.int64).astype(np.uint64)
    bits = _mix64(_mix64(counters) ^ key)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def _check_probability_vector(row: Sequence[float], what: str) -> Tuple[float, ...]:
    row = tuple(float(w) for w in row)
    if any(w < 0 for w in row):
        raise DomainError(f"{what} has a negative entry: {row}")
    if abs(sum(row) - 1.0) > 1e-12:
        raise DomainError(f"{what} sums to {sum(row)!r}, not 1")
    return row


@dataclass(frozen=True)
class BernoulliLaw:
    weights: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", _check_probability_vector(self.weights, "Bernoulli weights"))

    @property
    def alphabet_size(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class MarkovLaw:
    """Stationary Markov chain with transition matrix P (rows sum to 1)."""
    P: Tuple[Tuple[float, ...], ...]

    def __post_init__(self):
        rows = tuple(_check_probability_vector(r, f"Markov row {i}") for i, r in enumerate(self.P))
        if any(len(r) != len(rows) for r in rows):
            raise DomainError("Markov transition matrix must be square")
        object.__setattr__(self, "P", rows)

    @property
    def alphabet_size(self) -> int:
        return len(self.P)

    def stationary_distribution(self) -> np.ndarray:
        values, vectors = np.linalg.eig(np.asarray(self.P).T)
        pi = np.real(vectors[:, int(np.argmin(np.abs(values - 1.0)))])
        return pi / pi.sum()


Law = Union[BernoulliLaw, MarkovLaw]


@dataclass(frozen=True)
class SymbolProcess:
    """A seeded two-sided symbol sequence ω ∈ {0..k-1}^Z; σ acts by index shift.

    Bernoulli symbols threshold the counter-based uniform at each position.
    Markov symbols follow the chain s_i = F(s_{i-1}, u_i) driven by the same
    uniforms; the state at each block start is found by coupling from the past,
    which realizes the stationary chain without a stored origin.
    """

    alphabet_size: int
    law: Law
    seed: int = 0
    _blocks: Dict[int, np.ndarray] = field(default_factory=dict, compare=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, compare=False, repr=False)

    def __post_init__(self):
        if self.alphabet_size < 1:
            raise DomainError("alphabet must contain at least one symbol")
        if self.law.alphabet_size != self.alphabet_size:
            raise DomainError(
                f"law has {self.law.alphabet_size} symbols, alphabet declares {self.alphabet_size}"
            )
        object.__setattr__(self, "seed", int(self.seed) & 0xFFFFFFFFFFFFFFFF)

    @property
    def key(self) -> Tuple[int, int, Law]:
        return (self.seed, self.alphabet_size, self.law)

    def symbols(self, start: int, stop: int) -> np.ndarray:
        """Symbols at positions start..stop-1."""
        if stop <= start:
            return np.empty(0, dtype=np.int64)
        if isinstance(self.law, BernoulliLaw):
            u = uniform_at(self.seed, np.arange(start, stop, dtype=np.int64))
            cumulative = np.cumsum(self.law.weights)
            return np.minimum(np.searchsorted(cumulative, u, side="right"), self.alphabet_size - 1)
        first, last = start // BLOCK_SIZE, (stop - 1) // BLOCK_SIZE
        parts = [self._markov_block(b) for b in range(first, last + 1)]
        joined = np.concatenate(parts)
        offset = start - first * BLOCK_SIZE
        return joined[offset:offset + (stop - start)]

    def _step(self, cumulative: List[List[float]], state: int, u: float) -> int:
        return min(bisect.bisect_right(cumulative[state], u), self.alphabet_size - 1)

    def _markov_block(self, block: int) -> np.ndarray:
        cached = self._blocks.get(block)
        if cached is not None:
            return cached
        cumulative = [list(np.cumsum(row)) for row in self.law.P]
        origin = block * BLOCK_SIZE
        state = self._coupled_state(origin - 1, cumulative)
        u = uniform_at(self.seed, np.arange(origin, origin + BLOCK_SIZE, dtype=np.int64)).tolist()
        out = np.empty(BLOCK_SIZE, dtype=np.int64)
        for j, uj in enumerate(u):
            state = self._step(cumulative, state, uj)
            out[j] = state
        with self._lock:
            return self._blocks.setdefault(block, out)

    def _coupled_state(self, position: int, cumulative: List[List[float]]) -> int:
        """State at `position`, by running every start state forward from ever earlier times."""
        lookback = 32
        while lookback <= MAX_LOOKBACK:
            u = uniform_at(self.seed, np.arange(position - lookback + 1, position + 1, dtype=np.int64))
            states = list(range(self.alphabet_size))
            for uj in u.tolist():
                states = [self._step(cumulative, s, uj) for s in states]
            if len(set(states)) == 1:
                return states[0]
            lookback *= 2
        raise DomainError("Markov law does not couple; a periodic or reducible chain cannot drive a stationary shift")


def symbol_at(proc: SymbolProcess, i: int) -> int:
    return int(proc.symbols(i, i + 1)[0])


def longest_run(proc: SymbolProcess, start: int, stop: int, symbol: int) -> int:
    """Length of the longest run of `symbol` within positions start..stop-1."""
    hits = proc.symbols(start, stop) == symbol
    best = current = 0
    for flag in hits.tolist():
        current = current + 1 if flag else 0
        best = max(best, current)
    return best


def trailing_run(proc: SymbolProcess, position: int, symbol: int, limit: int = 4096) -> int:
    """Number of consecutive `symbol` entries ending at position-1."""
    window = proc.symbols(position - limit, position)[::-1]
    misses = np.nonzero(window != symbol)[0]
    return int(misses[0]) if misses.size else limit


MapHook = Callable[[SymbolProcess, int], AnalyticMap]
FixedPointSource = Callable[[SymbolProcess, int], complex]


@dataclass(frozen=True, eq=False)
class CocycleFamily:
    """Maps indexed by symbol, or a derived hook computing the map at a position.

    `fixed_point_source` lets a derived cocycle share (or declare) its random
    fixed point instead of re-solving it. Derived maps and fixed points are
    cached per family, each cache holding at most `memo_capacity` entries.
    """

    maps: Tuple[AnalyticMap, ...] = ()
    hook: Optional[MapHook] = None
    fixed_point_source: Optional[FixedPointSource] = None
    label: str = "family"
    memo_capacity: int = MEMO_CAPACITY
    _memo: "OrderedDict[Tuple, AnalyticMap]" = field(default_factory=OrderedDict, repr=False)
    _fixed_points: "OrderedDict[Tuple, object]" = field(default_factory=OrderedDict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if not self.maps and self.hook is None:
            raise DomainError("a cocycle family needs maps or a derived-map hook")
        if self.memo_capacity < 1:
            raise DomainError("memo_capacity must be positive")

    @property
    def symbolic(self) -> bool:
        """True when the map at a position depends only on its symbol."""
        return self.hook is None

    def recall(self, store: "OrderedDict", key: Tuple):
        """Cached value for key, marked most recently used; None when absent."""
        with self._lock:
            value = store.get(key)
            if value is not None:
                store.move_to_end(key)
            return value

    def remember(self, store: "OrderedDict", key: Tuple, value):
        """Single-writer insertion: the first value stored for a key wins.

        Past capacity the least recently used entry is evicted.
        """
        with self._lock:
            if key in store:
                store.move_to_end(key)
                return store[key]
            store[key] = value
            if len(store) > self.memo_capacity:
                store.popitem(last=False)
            return value


def map_at(fam: CocycleFamily, proc: SymbolProcess, i: int) -> AnalyticMap:
    """The map applied at position i."""
    if fam.hook is None:
        s = symbol_at(proc, i)
        if s >= len(fam.maps):
            raise DomainError(f"symbol {s} has no map in a family of {len(fam.maps)}")
        return fam.maps[s]
    key = (proc.key, i)
    cached = fam.recall(fam._memo, key)
    if cached is not None:
        return cached
    return fam.remember(fam._memo, key, fam.hook(proc, i))


def maps_between(fam: CocycleFamily, proc: SymbolProcess, start: int, stop: int) -> List[AnalyticMap]:
    """map_at for positions start..stop-1, with one vectorized symbol query for symbolic families."""
    if fam.hook is not None:
        return [map_at(fam, proc, i) for i in range(start, stop)]
    symbols = proc.symbols(start, stop)
    if symbols.size and int(symbols.max()) >= len(fam.maps):
        raise DomainError(f"symbol {int(symbols.max())} has no map in a family of {len(fam.maps)}")
    return [fam.maps[s] for s in symbols.tolist()]
