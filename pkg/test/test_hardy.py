import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.base.errors import AssemblyError, DomainError
from src.blaschke import (
    BlaschkeProduct,
    at_infinity,
    r_at_radius,
    square_map,
    squared_mobius,
    zero_fixing_product,
)
from src.hardy import (
    CoeffVector,
    HardyBasisSpec,
    apply_inversion,
    assemble_transfer,
    compose_noise,
    entry_decay_rate,
    expand_exterior_pole,
    expand_inner_pole,
    expand_outer_pole,
    expand_simple_pole,
    export_binary,
    export_csv,
    gaussian_power_multiplier,
    load_binary,
    mass_row_residual,
    nilpotency_index,
    noise_diagonal,
    operator_distance,
    restricted_norm,
    top_direction,
    uniform_power_multiplier,
)

T1_FIXED_POINT = (7.0 - 3.0 * np.sqrt(5.0)) / 2.0

MAPS = [
    square_map(),
    squared_mobius(0.25),
    zero_fixing_product(0.5),
    BlaschkeProduct(0.1, (0.1 + 0.1j, -0.2 + 0j)),
]


def random_products(count, seed):
    """Blaschke products of degree 2 or 3 with small zeros, so they contract |z| = 0.5."""
    rng = np.random.default_rng(seed)
    maps = []
    for _ in range(count):
        degree = int(rng.integers(2, 4))
        bound = 0.1 if degree == 2 else 0.2
        zeros = bound * np.sqrt(rng.uniform(size=degree)) * np.exp(2j * np.pi * rng.uniform(size=degree))
        maps.append(BlaschkeProduct(float(rng.uniform()), tuple(zeros)))
    return maps


RANDOM_MAPS = random_products(20, seed=11)


def test_basis_spec_validation():
    spec = HardyBasisSpec(R=0.5, N=10)
    assert spec.dimension == 21
    assert spec.quadrature_points == 512
    assert spec.index(-10) == 0 and spec.index(10) == 20
    with pytest.raises(DomainError):
        spec.index(11)
    with pytest.raises(DomainError):
        HardyBasisSpec(R=1.0)
    with pytest.raises(DomainError):
        HardyBasisSpec(R=0.5, N=100, quadrature_points=512)


@pytest.mark.parametrize("T", MAPS, ids=lambda T: T.label)
def test_mass_row_is_preserved(T, spec):
    assert mass_row_residual(assemble_transfer(T, spec)) < 1e-11


@pytest.mark.parametrize("T", MAPS + RANDOM_MAPS, ids=lambda T: T.label)
def test_simple_pole_pushforward(T, spec):
    A = assemble_transfer(T, spec)
    for x in (0.0, 0.05 + 0.05j, -0.1):
        image = A.apply(expand_simple_pole(x, spec))
        expected = expand_simple_pole(complex(T.value(x)), spec) - expand_exterior_pole(at_infinity(T), spec)
        assert (image - expected).norm < 1e-9


def test_triangular_diagonal_at_attracting_fixed_point():
    spec = HardyBasisSpec(R=0.5, N=40)
    A = assemble_transfer(squared_mobius(0.25), spec)
    a, N = T1_FIXED_POINT, spec.N
    for j in range(1, 6):
        image = A.apply(expand_inner_pole(a, j, spec)).monomial[:N]
        columns = [expand_simple_pole(a, spec).monomial[:N]]
        columns += [expand_inner_pole(a, i, spec).monomial[:N] for i in range(1, j + 1)]
        coeffs, *_ = np.linalg.lstsq(np.column_stack(columns), image, rcond=None)
        assert abs(coeffs[j] - (2.0 / 3.0) ** j) < 1e-8


def test_autonomous_eigenvalues(spec):
    A = assemble_transfer(zero_fixing_product(0.5), spec)
    moduli = np.sort(np.abs(np.linalg.eigvals(A.A)))[::-1][:5]
    assert_allclose(moduli, [1.0, 0.25, 0.25, 0.0625, 0.0625], atol=1e-8)


def test_assembly_rejects_non_contracting_map(spec):
    with pytest.raises(AssemblyError):
        assemble_transfer(BlaschkeProduct(0.0, (-0.5 + 0j,)), spec)


@pytest.mark.parametrize("T", [squared_mobius(0.25), zero_fixing_product(0.5)], ids=lambda T: T.label)
def test_entries_decay_geometrically(T, spec):
    predicted = np.log(r_at_radius(T, spec.R) / spec.R)
    assert entry_decay_rate(assemble_transfer(T, spec)) <= 0.5 * predicted


def test_pole_expansion_domains(spec):
    with pytest.raises(DomainError):
        expand_simple_pole(0.6, spec)
    with pytest.raises(DomainError):
        expand_inner_pole(0.1, 0, spec)
    with pytest.raises(DomainError):
        expand_exterior_pole(1.5, spec)
    assert expand_exterior_pole(at_infinity(square_map()), spec).norm == 0


def test_top_direction_at_origin_is_inverse_z(spec):
    v = top_direction(0j, spec)
    expected = np.zeros(spec.dimension, dtype=complex)
    expected[spec.index(-1)] = 1.0
    assert_allclose(v.monomial, expected, atol=1e-15)


def test_inversion_is_an_involution(spec):
    v = expand_simple_pole(0.1 + 0.2j, spec)
    once = apply_inversion(v)
    assert once.dropped_mass == 0
    assert_allclose(apply_inversion(once).coefficients, v.coefficients, atol=1e-14)


def test_inversion_reports_reflected_out_mass(spec):
    a = np.zeros(spec.dimension, dtype=complex)
    a[spec.index(spec.N)] = 1.0
    assert apply_inversion(CoeffVector.from_monomials(a, spec)).dropped_mass > 0


@pytest.mark.parametrize("x", [0.1, 0.05 - 0.2j, -0.3j])
@pytest.mark.parametrize("j", [1, 2, 4])
def test_inversion_maps_inner_poles_to_outer_poles(spec, x, j):
    inverted = apply_inversion(expand_inner_pole(x, j, spec))
    outer = expand_outer_pole(x, j, spec)
    # the outer expansion also fills powers N-1 and N, which the inversion reflects out
    window = 2 * spec.N - 1
    assert inverted.dropped_mass == 0
    assert_allclose(inverted.monomial[:window], outer.monomial[:window], atol=1e-12)


def test_transfer_commutes_with_inversion():
    spec = HardyBasisSpec(R=0.5, N=30)
    A = assemble_transfer(BlaschkeProduct(0.2, (0j, 0j, 0.1 + 0.05j)), spec)
    rng = np.random.default_rng(3)
    low = slice(spec.index(-5), spec.index(5) + 1)
    for _ in range(20):
        c = np.zeros(spec.dimension, dtype=complex)
        c[low] = rng.standard_normal(11) + 1j * rng.standard_normal(11)
        v = CoeffVector(c, spec)
        assert (A.apply(apply_inversion(v)) - apply_inversion(A.apply(v))).norm < 1e-9


def test_noise_multipliers(spec):
    gauss = noise_diagonal("gaussian", 0.1, spec)
    assert gauss.multipliers[spec.index(-1)] == 1.0
    assert gauss.multipliers[spec.index(0)] == pytest.approx(np.exp(-2 * np.pi ** 2 * 0.01))
    uniform = noise_diagonal("uniform", 0.125, spec)
    assert uniform.multipliers[spec.index(3)] == 0.0
    assert uniform.multipliers[spec.index(-5)] == 0.0
    assert uniform.multipliers[spec.index(0)] != 0.0
    assert np.all(noise_diagonal("none", 0.0, spec).multipliers == 1.0)
    with pytest.raises(DomainError):
        noise_diagonal("gaussian", 0.0, spec)


def test_noise_composition(spec):
    A = assemble_transfer(square_map(), spec)
    assert compose_noise(A, noise_diagonal("none", 0.0, spec)) is A
    noisy = compose_noise(A, noise_diagonal("gaussian", 0.05, spec))
    assert operator_distance(A, A) == 0.0
    assert 0.0 < operator_distance(A, noisy) < 1.0


@pytest.mark.parametrize("eps,steps", [(0.125, 3), (0.1875, 4)])
def test_dyadic_uniform_noise_is_nilpotent(eps, steps):
    spec = HardyBasisSpec(R=0.5, N=40)
    step = compose_noise(assemble_transfer(square_map(), spec), noise_diagonal("uniform", eps, spec))
    assert nilpotency_index(eps) == steps
    assert restricted_norm(np.linalg.matrix_power(step.A, steps), spec) < 1e-12
    assert restricted_norm(np.linalg.matrix_power(step.A, steps - 1), spec) > 1e-6


def test_nilpotency_index():
    assert nilpotency_index(0.125) == 3
    assert nilpotency_index(0.1875) == 4
    assert nilpotency_index(0.1) is None


def test_power_multipliers():
    eps, m, n = 0.05, 3, 4
    direct = np.prod([np.exp(-2 * np.pi ** 2 * eps ** 2 * (2 ** j * m) ** 2) for j in range(n)])
    assert gaussian_power_multiplier(m, n, eps) == pytest.approx(direct)
    assert uniform_power_multiplier(1, 3, 0.125) == 0.0
    assert uniform_power_multiplier(1, 1, 0.125) == pytest.approx(np.sinc(0.25))


def test_binary_export_round_trip(tmp_path, spec):
    A = assemble_transfer(squared_mobius(0.25), spec)
    path = export_binary(A, tmp_path / "T1.bin")
    assert path.stat().st_size == 12 + 16 * spec.dimension ** 2
    loaded = load_binary(path)
    assert loaded.spec.N == spec.N and loaded.spec.R == spec.R
    assert np.array_equal(loaded.A, A.A)


def test_csv_export(tmp_path):
    spec = HardyBasisSpec(R=0.5, N=3)
    path = export_csv(assemble_transfer(square_map(), spec), tmp_path / "T0.csv")
    raw = path.read_bytes()
    assert raw.startswith(b"n,m,re,im\r\n")
    assert raw.count(b"\r\n") == 1 + spec.dimension ** 2
