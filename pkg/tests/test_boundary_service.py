import numpy as np
import pytest

from src.exceptions.errors import InvalidInputError, PreconditionError
from src.models.boundary import AtomicMeasure, Flag
from src.models.group import CartanVector, GroupDescriptor, GroupElement, LinearForm
from src.models.words import Word
from src.services.boundary_service import boundary_service
from src.services.enumeration_service import enumeration_service
from src.services.matgroup_service import matgroup_service

SL3 = GroupDescriptor.standard((3,))


def random_flag(descriptor, rng) -> Flag:
    return boundary_service.act(matgroup_service.random_orthogonal(descriptor, rng), Flag.standard(descriptor))


def test_cocycle_of_a_diagonal_element_on_the_base_flag():
    a = CartanVector(SL3, np.array([1.0, 0.2, -1.2]))
    value = boundary_service.iwasawa_cocycle(matgroup_service.exp_cartan(a), Flag.standard(SL3))
    assert np.allclose(value.coords, a.coords, atol=1e-12)


def test_cocycle_identity(rng):
    for _ in range(20):
        g, h = matgroup_service.random_element(SL3, rng), matgroup_service.random_element(SL3, rng)
        xi = random_flag(SL3, rng)
        left = boundary_service.iwasawa_cocycle(g @ h, xi)
        right = boundary_service.iwasawa_cocycle(g, boundary_service.act(h, xi)) + boundary_service.iwasawa_cocycle(
            h, xi
        )
        assert left.allclose(right, atol=1e-8)


def test_busemann_equivariance(rng):
    descriptor = GroupDescriptor.standard((2, 3))
    for _ in range(20):
        g, h, x = (matgroup_service.random_element(descriptor, rng) for _ in range(3))
        xi = random_flag(descriptor, rng)
        direct = boundary_service.busemann(xi, g, h)
        moved = boundary_service.busemann(boundary_service.act(x, xi), x @ g, x @ h)
        assert moved.allclose(direct, atol=1e-8)


def test_busemann_vanishes_on_equal_points(rng):
    g = matgroup_service.random_element(SL3, rng)
    assert np.allclose(boundary_service.busemann(random_flag(SL3, rng), g, g).coords, 0.0)


def test_action_of_the_identity(rng):
    xi = random_flag(SL3, rng)
    assert boundary_service.act(GroupElement.identity(SL3), xi).equals(xi)


def test_attracting_flag_of_a_diagonal_element(sl2):
    g = GroupElement.from_matrices(sl2, [np.diag([np.exp(5.0), np.exp(-5.0)])])
    assert boundary_service.attracting_flag(g).equals(Flag.standard(sl2))
    assert boundary_service.repelling_flag(g).equals(Flag.opposite(sl2))


def test_attracting_flag_is_fixed(sl3):
    for g in sl3.generators:
        plus = boundary_service.attracting_flag(g)
        assert boundary_service.act(g, plus).equals(plus, tol=1e-8)
        assert boundary_service.in_general_position(plus, boundary_service.repelling_flag(g))


def test_attracting_flag_needs_a_loxodromic_element():
    with pytest.raises(PreconditionError):
        boundary_service.attracting_flag(GroupElement.identity(SL3))


def test_transversality():
    standard, opposite = Flag.standard(SL3), Flag.opposite(SL3)
    assert boundary_service.in_general_position(standard, opposite)
    assert not boundary_service.in_general_position(standard, standard)
    assert np.allclose(boundary_service.transversality_minors(standard, opposite), 1.0)
    with pytest.raises(InvalidInputError):
        boundary_service.in_general_position(standard, opposite, margin=-1.0)


def test_flag_distance(sl2):
    assert boundary_service.flag_distance(Flag.standard(sl2), Flag.standard(sl2)) == pytest.approx(0.0, abs=1e-7)
    assert boundary_service.flag_distance(Flag.standard(sl2), Flag.opposite(sl2)) == pytest.approx(np.pi / 2)


def test_flag_pair_of_the_identity():
    plus, minus = boundary_service.flag_pair(GroupElement.identity(SL3))
    assert plus.equals(Flag.standard(SL3))
    assert minus.equals(Flag.opposite(SL3))
    _, _, beta = boundary_service.hopf(GroupElement.identity(SL3))
    assert np.allclose(beta.coords, 0.0)


def test_flag_round_trip_through_flat_storage(rng):
    xi = random_flag(GroupDescriptor.standard((2, 3)), rng)
    assert Flag.from_flat(xi.descriptor, xi.flat()).equals(xi)
    with pytest.raises(InvalidInputError):
        Flag(SL3, (np.ones((3, 3)),))


def test_ps_atoms_are_normalized(rank_one_table):
    psi = LinearForm.rho2(rank_one_table.descriptor)
    measure = boundary_service.ps_atoms(rank_one_table, psi, 0.5)
    assert len(measure) == len(rank_one_table) - 1
    assert measure.total_mass == pytest.approx(1.0)
    assert np.all(measure.lengths > 0)
    short = measure.weights[measure.lengths == 1].mean()
    long = measure.weights[measure.lengths == rank_one_table.depth].mean()
    assert short > long


def test_ps_atoms_input_checks(rank_one, rank_one_table):
    psi = LinearForm.rho2(rank_one_table.descriptor)
    with pytest.raises(InvalidInputError):
        boundary_service.ps_atoms(rank_one_table, psi, 0.0)
    with pytest.raises(InvalidInputError):
        boundary_service.ps_atoms(enumeration_service.enumerate_ball(rank_one, 2), psi, 1.0)


def test_pushforward_cylinders(rank_one_table):
    measure = boundary_service.ps_atoms(rank_one_table, LinearForm.rho2(rank_one_table.descriptor), 0.5)
    unmoved = boundary_service.pushforward_cylinders(measure, Word(), rank_one_table.p)
    assert sum(unmoved.values()) == pytest.approx(1.0)
    assert set(unmoved) == {-2, -1, 1, 2}
    moved = boundary_service.pushforward_cylinders(measure, Word((1,)), rank_one_table.p)
    assert sum(moved.values()) <= 1.0 + 1e-12
    assert moved[1] > unmoved[1]


def test_conformality_residual(rank_one, rank_one_table):
    psi = LinearForm.rho2(rank_one.descriptor)
    residual = boundary_service.conformality_residual(rank_one, psi, 8, Word((1,)), s=0.5, table=rank_one_table)
    assert np.isfinite(residual) and residual >= 0
    with pytest.raises(InvalidInputError):
        boundary_service.conformality_residual(rank_one, psi, 2, Word((1,)))


def test_bms_weight_and_atoms_table(rank_one, rank_one_table):
    psi = LinearForm.rho2(rank_one.descriptor)
    weight = boundary_service.bms_weight(rank_one.generators[0], psi, psi)
    assert np.isfinite(weight) and weight > 0
    measure = boundary_service.ps_atoms(rank_one_table, psi, 1.0)
    header, rows = boundary_service.atoms_table(measure)
    assert header[-1] == "weight"
    assert len(header) == 5
    assert len(rows) == len(measure)


def test_atomic_measure_validation():
    frames = np.tile(Flag.standard(SL3).flat(), (2, 1))
    with pytest.raises(InvalidInputError):
        AtomicMeasure(SL3, frames, np.array([0.5, -0.5]), normalized=False)
    with pytest.raises(InvalidInputError):
        AtomicMeasure(SL3, frames, np.array([0.5, 0.2]))
    measure = AtomicMeasure(SL3, frames, np.array([2.0, 1.0]), normalized=False)
    assert measure.total_mass == 3.0


def test_table_flags_of_powers_sit_at_the_attracting_flag(rank_one, rank_one_table):
    center = boundary_service.attracting_flag(rank_one.generators[0])
    dist = boundary_service.flag_distances(rank_one.descriptor, rank_one_table.flags, center)
    powers = (rank_one_table.lengths > 0) & np.all(
        (rank_one_table.words == 1) | (rank_one_table.words == 0), axis=1
    )
    assert powers.sum() == 8
    assert np.all(dist[powers] < 1e-9)
    assert dist.max() > 0.1


def test_busemann_of_a_diagonal_element_at_its_flags():
    h = CartanVector(SL3, np.array([1.5, 0.3, -1.8]))
    a = matgroup_service.exp_cartan(h)
    e = GroupElement.identity(SL3)
    opposed = matgroup_service.opposition_coords(SL3, h.coords[None])[0]
    plus = boundary_service.busemann(Flag.standard(SL3), e, a)
    minus = boundary_service.busemann(Flag.opposite(SL3), e, a)
    assert np.allclose(plus.coords, h.coords, atol=1e-12)
    assert np.allclose(minus.coords, -opposed, atol=1e-12)


def test_hopf_coordinates_of_a_diagonal_element():
    h = CartanVector(SL3, np.array([1.5, 0.3, -1.8]))
    plus, minus, b = boundary_service.hopf(matgroup_service.exp_cartan(h))
    assert plus.equals(Flag.standard(SL3))
    assert minus.equals(Flag.opposite(SL3))
    assert np.allclose(b.coords, -matgroup_service.opposition_coords(SL3, h.coords[None])[0], atol=1e-12)


def test_hopf_coordinates_recompose_the_element(rng):
    for _ in range(10):
        k = matgroup_service.random_orthogonal(SL3, rng)
        h = CartanVector(SL3, SL3.project(rng.normal(size=3)))
        g = k @ matgroup_service.exp_cartan(h)
        plus, minus, b = boundary_service.hopf(g)
        assert minus.equals(boundary_service.act(k, Flag.opposite(SL3)))
        recovered = -matgroup_service.opposition_coords(SL3, b.coords[None])[0]
        assert np.allclose(recovered, h.coords, atol=1e-9)
        rebuilt = plus.frames[0] @ np.diag(np.exp(recovered))
        # equal to g up to the signs of M
        assert np.allclose(np.abs(np.linalg.inv(rebuilt) @ g.factors[0]), np.eye(3), atol=1e-8)


def test_bms_weight_of_a_diagonal_element():
    h = CartanVector(SL3, np.array([1.5, 0.3, -1.8]))
    a = matgroup_service.exp_cartan(h)
    rho2 = LinearForm.rho2(SL3)
    assert boundary_service.bms_weight(a, rho2, rho2) == pytest.approx(1.0)
    assert boundary_service.bms_weight(a, rho2, LinearForm.zero(SL3)) == pytest.approx(np.exp(rho2(h)))


def test_ps_atoms_of_symmetric_generators_split_evenly(rank_one_table):
    measure = boundary_service.ps_atoms(rank_one_table, LinearForm.rho2(rank_one_table.descriptor), 0.5)
    for letter in (1, 2, -1, -2):
        assert measure.weights[measure.words[:, 0] == letter].sum() == pytest.approx(0.25, rel=1e-9)


def test_ps_atoms_follow_a_permutation_of_the_generators(product):
    swapped = enumeration_service.generator_system(
        product.descriptor, [list(product.generators[1].factors), list(product.generators[0].factors)]
    )
    psi = LinearForm.rho2(product.descriptor)
    original, permuted = (
        boundary_service.ps_atoms(enumeration_service.enumerate_ball(gens, 5, with_flags=True), psi, 0.5)
        for gens in (product, swapped)
    )
    for letter in (1, 2, -1, -2):
        image = int(np.sign(letter)) * (3 - abs(letter))
        mass = permuted.weights[permuted.words[:, 0] == letter].sum()
        assert mass == pytest.approx(original.weights[original.words[:, 0] == image].sum(), rel=1e-9)


def test_conformality_residual_of_the_identity_vanishes(rank_one, rank_one_table):
    psi = LinearForm.rho2(rank_one.descriptor)
    residual = boundary_service.conformality_residual(rank_one, psi, 8, Word(), s=0.5, table=rank_one_table)
    assert residual == pytest.approx(0.0, abs=1e-12)


def test_conformality_residual_is_scale_invariant(rank_one, rank_one_table):
    psi = LinearForm.rho2(rank_one.descriptor)
    doubled = LinearForm(rank_one.descriptor, 2 * psi.coeffs)
    plain = boundary_service.conformality_residual(rank_one, psi, 8, Word((2,)), s=0.5, table=rank_one_table)
    scaled = boundary_service.conformality_residual(rank_one, doubled, 8, Word((2,)), s=0.25, table=rank_one_table)
    assert scaled == pytest.approx(plain, rel=1e-12, abs=1e-15)
