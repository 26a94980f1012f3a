import math

import numpy as np
import pytest

from src.base.errors import DomainError
from src.base.state import COLLAPSED
from src.blaschke import derivative, family_contraction, square_map, sup_distance, zero_fixing_product
from src.cocycle import (
    a_priori_depth,
    analytic_spectrum,
    autonomous_spectrum,
    collapse_criterion,
    collapse_perturbation,
    conjugate_to_zero,
    fixed_point,
    lambda_birkhoff,
    log_derivative,
    perturbation_delta,
    push_fixed_point,
    quenched_perturbation,
    random_fixed_point,
    stability_criterion,
    stabilize_perturbation,
    static_perturbation,
    t0t1_lambda_bounds,
    zero_run_series,
)
from src.driving import BernoulliLaw, CocycleFamily, SymbolProcess, map_at

R = 0.5


def test_zero_fixing_family_has_fixed_point_at_origin(stable_family, bernoulli):
    trace = random_fixed_point(stable_family, bernoulli(0.5), 17, R)
    assert trace.x == 0
    assert trace.log_abs_x == COLLAPSED


def test_fixed_point_is_equivariant(collapse_family, bernoulli):
    proc = bernoulli(0.3, seed=4)
    for i in (0, 5, 123):
        x = fixed_point(collapse_family, proc, i, R)
        pushed = map_at(collapse_family, proc, i).value(x)
        solved = random_fixed_point(collapse_family, proc, i + 1, R).x
        assert abs(complex(pushed) - complex(solved)) < 1e-10


def test_push_fixed_point_advances_trace(collapse_family, bernoulli):
    proc = bernoulli(0.3, seed=4)
    trace = random_fixed_point(collapse_family, proc, 10, R)
    pushed = push_fixed_point(collapse_family, proc, trace)
    assert pushed.position == 11
    assert pushed.depth == trace.depth + 1
    assert pushed.residual <= trace.residual
    solved = random_fixed_point(collapse_family, proc, 11, R)
    assert abs(complex(pushed.x) - complex(solved.x)) < 1e-10


def test_a_priori_depth_grows_with_tolerance():
    assert a_priori_depth(0.5, R, 1e-6) < a_priori_depth(0.5, R, 1e-12)
    assert a_priori_depth(0.0, R, 1e-12) == 2


def test_lambda_of_stable_pair(stable_family, bernoulli):
    estimate = lambda_birkhoff(stable_family, bernoulli(0.5, seed=8), R, 20_000)
    assert abs(estimate.lambda_hat - math.log(0.3)) <= 4 * estimate.stderr
    assert not estimate.heavy_tail
    lam, stderr, smallest = estimate
    assert smallest == pytest.approx(2 * math.log(0.5))


def test_single_map_lambda_is_exact():
    fam = CocycleFamily(maps=(zero_fixing_product(0.5),))
    proc = SymbolProcess(1, BernoulliLaw((1.0,)))
    estimate = lambda_birkhoff(fam, proc, R, 100)
    assert estimate.lambda_hat == pytest.approx(math.log(0.25), abs=1e-14)
    assert estimate.stderr == pytest.approx(0.0, abs=1e-14)


def test_collapse_pair_within_bounds(collapse_family, bernoulli):
    lower, upper = t0t1_lambda_bounds(0.2)
    estimate = lambda_birkhoff(collapse_family, bernoulli(0.2, seed=1), R, 20_000, burn_in=100)
    assert lower - 0.05 <= estimate.lambda_hat <= upper + 0.05
    assert estimate.critical_positions == 0


@pytest.mark.slow
@pytest.mark.parametrize("p,heavy", [(0.4, False), (0.6, True)])
def test_heavy_tail_flag_tracks_series(collapse_family, bernoulli, p, heavy):
    estimate = lambda_birkhoff(collapse_family, bernoulli(p, seed=2), R, 20_000, burn_in=100)
    assert estimate.heavy_tail is heavy
    assert (zero_run_series(p) is None) is heavy


def test_zero_run_series_and_criterion():
    assert zero_run_series(0.4) == pytest.approx(5.0)
    assert zero_run_series(0.5) is None
    assert not collapse_criterion(0.4)
    assert collapse_criterion(0.5)
    assert not collapse_criterion(0.2, "gaussian")
    assert collapse_criterion(0.25, "gaussian")
    assert collapse_criterion(0.1, "uniform")
    with pytest.raises(DomainError):
        collapse_criterion(0.1, "cauchy")


def test_bounds_collapse_past_half():
    lower, upper = t0t1_lambda_bounds(0.4)
    assert lower < upper < 0
    assert t0t1_lambda_bounds(0.6) == (COLLAPSED, COLLAPSED)


def test_analytic_spectrum_structure():
    L = math.log(0.3)
    assert analytic_spectrum(L, 5).exponents == pytest.approx([0.0, L, L, 2 * L, 2 * L])
    assert analytic_spectrum(COLLAPSED, 3).exponents == [0.0, COLLAPSED, COLLAPSED]
    assert analytic_spectrum(L, 5).multiplicities[1] == (L, 2)
    with pytest.raises(DomainError):
        analytic_spectrum(0.1, 3)


def test_autonomous_spectrum_from_multiplier():
    spectrum = autonomous_spectrum(zero_fixing_product(0.5), 3)
    assert spectrum.exponents == pytest.approx([0.0, math.log(0.25), math.log(0.25)])


def test_log_derivative_at_critical_point():
    B = zero_fixing_product(0.5)
    assert log_derivative(B, 0j) == pytest.approx(math.log(0.25))
    assert log_derivative(square_map(), 0j) is None


def test_conjugated_cocycle_fixes_zero(collapse_family, bernoulli):
    proc = bernoulli(0.3, seed=6)
    conj = conjugate_to_zero(collapse_family, proc, R)
    for i in range(20):
        assert abs(map_at(conj, proc, i).value(0j)) < 1e-10
    assert fixed_point(conj, proc, 3, R) == 0


def test_stability_criterion(stable_family, collapse_family, bernoulli):
    smallest, stable = stability_criterion(stable_family, bernoulli(0.5), R, 200)
    assert smallest == pytest.approx(0.25) and stable
    smallest, _ = stability_criterion(collapse_family, bernoulli(0.4, seed=3), R, 2000)
    assert smallest < 0.25


def test_perturbation_delta():
    assert perturbation_delta(0.5, 0.1, "collapse") == pytest.approx(0.1 * 0.5 / 4.5)
    assert perturbation_delta(0.5, 0.1, "stabilize") == pytest.approx(0.1 * 0.5 / 9.0)
    with pytest.raises(DomainError):
        perturbation_delta(0.5, 1.5, "collapse")


def test_collapse_perturbation_hits_critical_points(collapse_family, bernoulli):
    proc = bernoulli(0.4, seed=12)
    fam = collapse_perturbation(collapse_family, proc, R, 0.1)
    estimate = lambda_birkhoff(fam, proc, R, 2000)
    assert estimate.lambda_hat == COLLAPSED
    assert estimate.critical_positions > 0
    i = estimate.first_critical
    assert sup_distance(map_at(fam, proc, i), map_at(collapse_family, proc, i)) <= 0.1


def test_stabilize_perturbation_stays_close(collapse_family, bernoulli):
    proc = bernoulli(0.4, seed=12)
    fam = stabilize_perturbation(collapse_family, proc, R, 0.1)
    r = family_contraction(collapse_family.maps, R)
    floor = ((1.0 - r) / (1.0 + r)) ** 2 * perturbation_delta(r, 0.1, "stabilize")
    for i in range(50):
        S = map_at(fam, proc, i)
        assert sup_distance(S, map_at(collapse_family, proc, i)) <= 0.1
        assert abs(complex(derivative(S, complex(fixed_point(fam, proc, i, R))))) > floor
    estimate = lambda_birkhoff(fam, proc, R, 2000)
    assert estimate.critical_positions == 0


def test_static_and_quenched_perturbations_are_eps_close(stable_family, bernoulli):
    proc = bernoulli(0.5, seed=1)
    for fam in (static_perturbation(stable_family, 0.05), quenched_perturbation(stable_family, 0.05, 3)):
        distances = [sup_distance(map_at(fam, proc, i), map_at(stable_family, proc, i)) for i in range(20)]
        assert max(distances) <= 0.05 + 1e-12
        assert np.all(np.isfinite(distances))


def last_decade_drift(estimate):
    n_final, m_final = estimate.running_means[-1]
    earlier = [m for n, m in estimate.running_means if n <= n_final // 10]
    return abs(m_final - earlier[-1])


@pytest.mark.slow
def test_running_mean_settles_only_below_half(collapse_family, bernoulli):
    settled = lambda_birkhoff(collapse_family, bernoulli(0.4, seed=2), R, 100_000, burn_in=100)
    drifting = lambda_birkhoff(collapse_family, bernoulli(0.6, seed=2), R, 100_000, burn_in=100)
    lower, upper = t0t1_lambda_bounds(0.4)
    assert lower - 0.25 <= settled.lambda_hat <= upper + 0.25
    assert last_decade_drift(drifting) > 10 * last_decade_drift(settled)
    assert drifting.min_log_term < settled.min_log_term
    assert zero_run_series(0.4) is not None and zero_run_series(0.6) is None
