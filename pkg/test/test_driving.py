import numpy as np
import pytest

from src.base.errors import DomainError
from src.blaschke import square_map, squared_mobius
from src.cocycle import fixed_point, fixed_point_orbit
from src.driving import (
    BLOCK_SIZE,
    BernoulliLaw,
    CocycleFamily,
    MarkovLaw,
    SymbolProcess,
    longest_run,
    map_at,
    maps_between,
    symbol_at,
    trailing_run,
    uniform_at,
)


def test_uniform_at_is_a_pure_function_of_position():
    positions = np.arange(-5, 5)
    u = uniform_at(7, positions)
    assert np.array_equal(u, uniform_at(7, positions))
    assert np.all((u >= 0.0) & (u < 1.0))
    assert not np.array_equal(u, uniform_at(8, positions))
    assert not np.array_equal(u, uniform_at(7, positions, stream=1))


def test_symbols_are_shift_consistent(bernoulli):
    proc = bernoulli(0.4, seed=3)
    window = proc.symbols(-100, 100)
    assert np.array_equal(window[110:120], proc.symbols(10, 20))
    assert symbol_at(proc, -42) == window[58]


def test_bernoulli_frequency(bernoulli):
    symbols = bernoulli(0.3, seed=11).symbols(0, 100_000)
    assert np.mean(symbols == 0) == pytest.approx(0.3, abs=0.01)


def test_bad_weights_rejected():
    with pytest.raises(DomainError):
        BernoulliLaw((0.5, 0.6))
    with pytest.raises(DomainError):
        BernoulliLaw((1.2, -0.2))
    with pytest.raises(DomainError):
        SymbolProcess(3, BernoulliLaw((0.5, 0.5)))


def test_markov_stationary_frequency_and_transitions():
    law = MarkovLaw(((0.9, 0.1), (0.2, 0.8)))
    assert np.allclose(law.stationary_distribution(), [2.0 / 3.0, 1.0 / 3.0])
    symbols = SymbolProcess(2, law, seed=5).symbols(0, 100_000)
    assert np.mean(symbols == 0) == pytest.approx(2.0 / 3.0, abs=0.02)
    zeros = symbols[:-1] == 0
    assert np.mean(symbols[1:][zeros] == 1) == pytest.approx(0.1, abs=0.01)


def test_markov_blocks_agree_across_boundaries():
    law = MarkovLaw(((0.5, 0.5), (0.3, 0.7)))
    whole = SymbolProcess(2, law, seed=9).symbols(-10, BLOCK_SIZE + 10)
    fresh = SymbolProcess(2, law, seed=9).symbols(BLOCK_SIZE - 5, BLOCK_SIZE + 5)
    assert np.array_equal(whole[BLOCK_SIZE + 5: BLOCK_SIZE + 15], fresh)


def test_periodic_markov_chain_does_not_couple():
    proc = SymbolProcess(2, MarkovLaw(((0.0, 1.0), (1.0, 0.0))))
    with pytest.raises(DomainError):
        proc.symbols(0, 10)


def test_run_lengths(bernoulli):
    proc = bernoulli(0.5, seed=1)
    symbols = proc.symbols(0, 500).tolist()

    best = current = 0
    for s in symbols:
        current = current + 1 if s == 0 else 0
        best = max(best, current)
    assert longest_run(proc, 0, 500, 0) == best

    position = 400
    expected = 0
    while symbols[position - 1 - expected] == 0:
        expected += 1
    assert trailing_run(proc, position, 0) == expected


def test_family_needs_maps_or_hook():
    with pytest.raises(DomainError):
        CocycleFamily()


def test_map_at_follows_symbols(bernoulli, collapse_family):
    proc = bernoulli(0.5, seed=2)
    maps = maps_between(collapse_family, proc, 0, 50)
    for i, T in enumerate(maps):
        assert T is collapse_family.maps[symbol_at(proc, i)]
        assert map_at(collapse_family, proc, i) is T


def test_hook_family_memoizes(bernoulli):
    calls = []

    def hook(p, i):
        calls.append(i)
        return square_map() if i % 2 else squared_mobius(0.25)

    fam = CocycleFamily(hook=hook)
    proc = bernoulli(0.5)
    first = map_at(fam, proc, 3)
    assert map_at(fam, proc, 3) is first
    assert calls == [3]


def test_hook_family_memo_is_bounded(bernoulli):
    calls = []

    def hook(p, i):
        calls.append(i)
        return square_map() if i % 2 else squared_mobius(0.25)

    fam = CocycleFamily(hook=hook, memo_capacity=8)
    proc = bernoulli(0.5)
    for i in range(20):
        map_at(fam, proc, i)
    assert len(fam._memo) == 8
    map_at(fam, proc, 19)
    assert calls == list(range(20))
    map_at(fam, proc, 0)
    assert calls[-1] == 0 and len(fam._memo) == 8
    with pytest.raises(DomainError):
        CocycleFamily(hook=hook, memo_capacity=0)


def test_fixed_point_cache_is_bounded(bernoulli):
    fam = CocycleFamily(maps=(square_map(), squared_mobius(0.25)), memo_capacity=16)
    proc = bernoulli(0.3, seed=4)
    orbit = fixed_point_orbit(fam, proc, 0, 50, 0.5)
    assert len(fam._fixed_points) == 16
    assert abs(complex(fixed_point(fam, proc, 3, 0.5)) - complex(orbit[3])) < 1e-10
