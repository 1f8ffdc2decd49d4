import numpy as np
import pytest

from src.exceptions.errors import DimensionMismatchError, InvalidInputError
from src.models.group import CartanVector, GroupDescriptor, GroupElement
from src.services.matgroup_service import matgroup_service
from src.utils.fixtures import mirrored_product


def test_cartan_projection_of_diagonal_sl2(sl2):
    g = GroupElement.from_matrices(sl2, [np.diag([np.e, 1 / np.e])])
    mu = matgroup_service.cartan_projection(g)
    assert np.allclose(mu.coords, [1.0, -1.0], atol=1e-12)
    assert mu.dominant


def test_cartan_projection_of_golden_matrix(sl2):
    g = GroupElement.from_matrices(sl2, [np.array([[2.0, 1.0], [1.0, 1.0]])])
    mu = matgroup_service.cartan_projection(g)
    golden = np.log((3 + np.sqrt(5)) / 2)
    assert mu.coords[0] == pytest.approx(golden, abs=1e-12)
    assert mu.coords[1] == pytest.approx(-golden, abs=1e-12)


def test_cartan_projection_is_dominant_for_antidiagonal(sl2):
    g = GroupElement.from_matrices(sl2, [np.array([[0.0, 2.0], [-0.5, 0.0]])])
    mu = matgroup_service.cartan_projection(g)
    assert mu.coords[0] == pytest.approx(np.log(2.0))
    assert mu.is_dominant()


def test_jordan_projection_of_golden_matrix(sl2):
    g = GroupElement.from_matrices(sl2, [np.array([[2.0, 1.0], [1.0, 1.0]])], strict=True)
    lam = matgroup_service.jordan_projection(g)
    log_phi = np.log((1 + np.sqrt(5)) / 2)
    assert log_phi == pytest.approx(0.4812, abs=1e-4)
    assert lam.coords[0] == pytest.approx(2 * log_phi, abs=1e-12)


def test_jordan_projection_of_parabolic_is_zero(sl2):
    g = GroupElement.from_matrices(sl2, [np.array([[1.0, 5.0], [0.0, 1.0]])])
    assert np.allclose(matgroup_service.jordan_projection(g).coords, 0.0, atol=1e-12)
    assert not matgroup_service.is_loxodromic(g)


def test_opposition_involution_on_sl3():
    descriptor = GroupDescriptor.standard((3,))
    v = CartanVector(descriptor, np.array([3.0, 0.5, -3.5]), dominant=True)
    image = matgroup_service.opposition_involution(v)
    assert np.allclose(image.coords, [3.5, -0.5, -3.0])
    assert np.allclose(matgroup_service.opposition_involution(image).coords, v.coords)


def test_opposition_is_identity_on_sl2(sl2):
    v = CartanVector(sl2, np.array([1.2, -1.2]))
    assert np.allclose(matgroup_service.opposition_involution(v).coords, v.coords)


def test_inverse_projections_follow_the_opposition(sl3):
    for g in sl3.generators:
        mu, mu_inv = matgroup_service.cartan_projection(g), matgroup_service.cartan_projection(g.inverse())
        lam, lam_inv = matgroup_service.jordan_projection(g), matgroup_service.jordan_projection(g.inverse())
        assert np.allclose(mu_inv.coords, matgroup_service.opposition_involution(mu).coords, atol=1e-9)
        assert np.allclose(lam_inv.coords, matgroup_service.opposition_involution(lam).coords, atol=1e-9)


def test_jordan_projection_is_homogeneous_under_powers(sl3):
    g = sl3.generators[1]
    lam = matgroup_service.jordan_projection(g).coords
    for n in range(2, 6):
        assert np.allclose(matgroup_service.jordan_projection(g.power(n)).coords, n * lam, rtol=1e-8)


def test_is_loxodromic_with_margin(sl2):
    g = GroupElement.from_matrices(sl2, [np.diag([np.exp(0.05), np.exp(-0.05)])])
    assert matgroup_service.is_loxodromic(g)
    assert not matgroup_service.is_loxodromic(g, margin=0.5)
    with pytest.raises(InvalidInputError):
        matgroup_service.is_loxodromic(g, margin=-1.0)


def test_iwasawa_decomposition_recomposes(rng):
    descriptor = GroupDescriptor.standard((3, 2))
    for _ in range(20):
        g = matgroup_service.random_element(descriptor, rng)
        parts = matgroup_service.iwasawa_decompose(g)
        assert parts.residual < 1e-10
        for k, n in zip(parts.k.factors, parts.n.factors):
            assert np.allclose(k.T @ k, np.eye(k.shape[0]), atol=1e-12)
            assert np.linalg.det(k) == pytest.approx(1.0)
            assert np.allclose(np.tril(n, -1), 0.0)
            assert np.allclose(np.diag(n), 1.0)


def test_iwasawa_of_orthogonal_matrix_has_zero_a(rng):
    descriptor = GroupDescriptor.standard((3,))
    k = matgroup_service.random_orthogonal(descriptor, rng)
    assert np.allclose(matgroup_service.iwasawa_decompose(k).a.coords, 0.0, atol=1e-12)


def test_kak_decomposition_recomposes(rng):
    descriptor = GroupDescriptor.standard((4,))
    for _ in range(20):
        g = matgroup_service.random_element(descriptor, rng)
        parts = matgroup_service.kak_decompose(g)
        assert parts.residual < 1e-9
        assert np.allclose(parts.mu.coords, matgroup_service.cartan_projection(g).coords)
        assert all(np.linalg.det(k) == pytest.approx(1.0) for k in parts.k1.factors + parts.k2.factors)


def test_kak_flags_repeated_singular_values(sl2, rng):
    k = matgroup_service.random_orthogonal(sl2, rng)
    parts = matgroup_service.kak_decompose(k)
    assert not parts.unique
    assert np.allclose(parts.mu.coords, 0.0, atol=1e-12)


def test_norm_and_inner_use_the_trace_form(sl2):
    v = CartanVector(sl2, np.array([1.0, -1.0]))
    w = CartanVector(sl2, np.array([2.0, -2.0]))
    assert matgroup_service.norm(v) == pytest.approx(np.sqrt(2.0))
    assert matgroup_service.inner(v, w) == pytest.approx(4.0)
    with pytest.raises(DimensionMismatchError):
        matgroup_service.inner(v, CartanVector.zero(GroupDescriptor.standard((3,))))


def test_cartan_vector_rejects_non_zero_sum(sl2):
    with pytest.raises(InvalidInputError):
        CartanVector(sl2, np.array([1.0, 0.0]))


def test_from_matrices_validation(sl2):
    with pytest.raises(InvalidInputError):
        GroupElement.from_matrices(sl2, [np.array([[1.0, np.nan], [0.0, 1.0]])])
    with pytest.raises(InvalidInputError):
        GroupElement.from_matrices(sl2, [np.diag([2.0, 1.0])], strict=True)
    with pytest.raises(InvalidInputError):
        GroupElement.from_matrices(sl2, [np.diag([1.0, -1.0])])
    with pytest.raises(InvalidInputError):
        GroupElement.from_matrices(sl2, [np.eye(3)])


def test_negative_determinant_is_fixed_on_odd_factor():
    descriptor = GroupDescriptor.standard((3,))
    g = GroupElement.from_matrices(descriptor, [-np.eye(3)])
    assert np.allclose(g.factors[0], np.eye(3))


def test_projective_sign_is_canonical(sl2):
    a = GroupElement.from_matrices(sl2, [np.array([[2.0, 1.0], [1.0, 1.0]])])
    b = GroupElement.from_matrices(sl2, [-np.array([[2.0, 1.0], [1.0, 1.0]])])
    assert a.equals(b)
    assert np.array_equal(a.factors[0], b.factors[0])


def test_product_is_dominated_by_triangle_inequality(sl3):
    a, b = sl3.generators
    mu_ab = matgroup_service.norm(matgroup_service.cartan_projection(a @ b))
    bound = matgroup_service.norm(matgroup_service.cartan_projection(a)) + matgroup_service.norm(
        matgroup_service.cartan_projection(b)
    )
    assert mu_ab <= bound + 1e-9


def test_mirrored_generators_are_exchanged_by_the_opposition():
    gens = mirrored_product()
    a, b = gens.generators
    mu_a = matgroup_service.cartan_projection(a).coords
    mu_b = matgroup_service.cartan_projection(b).coords
    assert np.allclose(mu_b, matgroup_service.opposition_coords(gens.descriptor, mu_a), atol=1e-9)
    lam_a = matgroup_service.jordan_projection(a).coords
    lam_b = matgroup_service.jordan_projection(b).coords
    assert np.allclose(lam_b, matgroup_service.opposition_coords(gens.descriptor, lam_a), atol=1e-9)
