import math

import mpmath
import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.base.errors import DomainError, InfeasibleRadiusError
from src.blaschke import (
    INFINITY,
    AnalyticMap,
    BlaschkeProduct,
    MobiusDiscAutomorphism,
    admissible_radius,
    at_infinity,
    compose,
    conjugate,
    derivative,
    divide_out_zero,
    evaluate,
    hyperbolic_distance,
    martin_expanding_check,
    min_circle_derivative,
    mobius_for_displacement,
    r_at_radius,
    square_map,
    squared_mobius,
    sup_distance,
    times_z,
    zero_fixing_product,
)

T1_FIXED_POINT = (7.0 - 3.0 * math.sqrt(5.0)) / 2.0


def test_square_map_value_and_derivative():
    T = square_map()
    assert evaluate(T, 0.3) == pytest.approx(0.09)
    assert derivative(T, 0.3) == pytest.approx(0.6)
    z = np.array([0.1 + 0.2j, -0.4j])
    assert_allclose(T(z), z ** 2, atol=1e-15)


def test_squared_mobius_fixed_point_has_multiplier_two_thirds():
    T1 = squared_mobius(0.25)
    assert abs(T1.value(T1_FIXED_POINT) - T1_FIXED_POINT) < 1e-12
    assert abs(T1.derivative(T1_FIXED_POINT)) == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_zero_fixing_product_multiplier():
    B = zero_fixing_product(0.5)
    assert B.value(0j) == 0
    assert abs(B.derivative(0j)) == pytest.approx(0.25, abs=1e-14)


def test_boundary_zero_rejected():
    with pytest.raises(DomainError):
        BlaschkeProduct(0.0, (1.0 + 0j,))


def test_blaschke_maps_circle_to_circle():
    T = BlaschkeProduct(0.3, (0.2 + 0.1j, -0.5j))
    z = np.exp(2j * np.pi * np.linspace(0, 1, 17))
    assert_allclose(np.abs(T(z)), 1.0, atol=1e-14)


def test_derivative_matches_finite_difference():
    T = squared_mobius(0.25)
    z, h = 0.1 + 0.2j, 1e-6
    numeric = (T.value(z + h) - T.value(z - h)) / (2 * h)
    assert abs(T.derivative(z) - numeric) < 1e-8


def test_extended_range_evaluation():
    w = square_map().value(mpmath.mpc(1e-200))
    assert isinstance(w, mpmath.mpc)
    assert float(mpmath.log(abs(w))) == pytest.approx(-400 * math.log(10), rel=1e-12)


def test_r_at_radius():
    assert r_at_radius(square_map(), 0.5) == pytest.approx(0.25, abs=1e-12)
    assert r_at_radius(squared_mobius(0.25), 0.5) == pytest.approx(4.0 / 9.0, abs=1e-12)
    with pytest.raises(DomainError):
        r_at_radius(square_map(), 1.0)


def test_admissible_radius_keeps_feasible_hint():
    assert admissible_radius([square_map(), squared_mobius(0.25)], R_hint=0.5) == 0.5


def test_admissible_radius_searches_without_hint():
    maps = [square_map(), squared_mobius(0.25)]
    R = admissible_radius(maps)
    assert 0.0 < R < 1.0
    assert max(r_at_radius(T, R) for T in maps) < R


def test_admissible_radius_infeasible_for_automorphism():
    # (z + 1/2)/(1 + z/2) moves every circle |z| = R outward
    with pytest.raises(InfeasibleRadiusError):
        admissible_radius([BlaschkeProduct(0.0, (-0.5 + 0j,))])


def test_value_at_infinity():
    assert at_infinity(square_map()) is INFINITY
    assert at_infinity(squared_mobius(0.25)) == pytest.approx(16.0)
    assert at_infinity(MobiusDiscAutomorphism(0.5)) == pytest.approx(2.0)


class HalvingMap(AnalyticMap):
    """z ↦ z/2, analytic on the disc but not circle preserving."""

    @property
    def label(self) -> str:
        return "z/2"

    @property
    def preserves_circle(self) -> bool:
        return False

    def _value(self, z):
        return 0.5 * z

    def _derivative(self, z):
        return 0.5 + 0 * z


def test_value_at_infinity_needs_circle_preserving_map():
    with pytest.raises(DomainError):
        at_infinity(HalvingMap())
    assert at_infinity(compose(MobiusDiscAutomorphism(0.5), square_map())) == pytest.approx(2.0)


def test_blaschke_commutes_with_circle_inversion():
    rng = np.random.default_rng(7)
    for _ in range(5):
        degree = int(rng.integers(1, 5))
        zeros = tuple(rng.uniform(0.3, 0.6, degree) * np.exp(2j * np.pi * rng.random(degree)))
        T = BlaschkeProduct(float(rng.random()), zeros)
        z = rng.uniform(0.85, 0.95, 64) * np.exp(2j * np.pi * rng.random(64))
        assert_allclose(T.value(1.0 / np.conj(z)), 1.0 / np.conj(T.value(z)), rtol=1e-10)


def test_conjugate_fixes_zero():
    T = squared_mobius(0.25)
    x = 0.1 + 0.05j
    S = conjugate(T, pre=x, post=complex(T.value(x)))
    assert abs(S.value(0j)) < 1e-15


def test_divide_out_zero_round_trip():
    B = zero_fixing_product(0.5)
    P = divide_out_zero(B)
    assert P.value(0j) == pytest.approx(B.derivative(0j), abs=1e-14)
    z = 0.2 - 0.3j
    assert abs(P.value(z) * z - B.value(z)) < 1e-14
    assert abs(times_z(P).value(z) - B.value(z)) < 1e-14


def test_divide_out_zero_needs_zero_at_origin():
    with pytest.raises(DomainError):
        divide_out_zero(squared_mobius(0.25))


@pytest.mark.parametrize("eps", [0.1, 0.05, 0.025])
def test_mobius_displacement_is_exact(eps):
    M = MobiusDiscAutomorphism(mobius_for_displacement(eps))
    assert M.displacement_bound() == pytest.approx(eps, rel=1e-14)
    identity = BlaschkeProduct(0.0, (0j,))
    assert sup_distance(M, identity, samples=1 << 16) == pytest.approx(eps, abs=1e-6)
    T = squared_mobius(0.25)
    assert sup_distance(compose(M, T), T, samples=1 << 16) == pytest.approx(eps, abs=1e-6)


@pytest.mark.parametrize("eps", [0.0, 2.0])
def test_mobius_displacement_range(eps):
    with pytest.raises(DomainError):
        mobius_for_displacement(eps)


def test_hyperbolic_distance_is_symmetric():
    z, w = 0.1 + 0.1j, -0.2j
    assert hyperbolic_distance(z, z, 0.5) == pytest.approx(0.0)
    assert hyperbolic_distance(z, w, 0.5) == pytest.approx(hyperbolic_distance(w, z, 0.5))


def test_circle_expansion_of_square_map():
    expanding, S = martin_expanding_check(square_map())
    assert expanding and S == pytest.approx(2.0)
    assert min_circle_derivative(square_map()) == pytest.approx(2.0)


def test_from_dict_round_trip():
    T = BlaschkeProduct(0.25, (0.1 + 0.2j, -0.3 + 0j))
    S = BlaschkeProduct.from_dict(T.to_dict())
    z = 0.3 + 0.1j
    assert abs(S.value(z) - T.value(z)) < 1e-15
