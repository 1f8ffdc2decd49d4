import numpy as np
import pytest

from src.exceptions.errors import ConfigurationError, InvalidInputError, PreconditionError
from src.models.boundary import Flag
from src.models.group import GroupDescriptor, GroupElement, LinearForm
from src.models.symmetric import BCartanVector, RegionSpec, SymmetricPairDescriptor
from src.services.enumeration_service import enumeration_service
from src.services.matgroup_service import matgroup_service
from src.services.symmetric_service import symmetric_service

SL2 = GroupDescriptor.standard((2,))
SL3 = GroupDescriptor.standard((3,))
SL2xSL2 = GroupDescriptor.standard((2, 2))

PAIRS = [
    SymmetricPairDescriptor(SL3, "indefinite-orthogonal", 2, 1),
    SymmetricPairDescriptor(SL2xSL2, "swap"),
    SymmetricPairDescriptor(SL2xSL2, "riemannian"),
]


def test_pair_validation():
    with pytest.raises(ConfigurationError):
        SymmetricPairDescriptor(SL3, "hermitian")
    with pytest.raises(ConfigurationError):
        SymmetricPairDescriptor(SL2xSL2, "indefinite-orthogonal", 1, 1)
    with pytest.raises(ConfigurationError):
        SymmetricPairDescriptor(SL3, "indefinite-orthogonal", 1, 1)
    with pytest.raises(ConfigurationError):
        SymmetricPairDescriptor(GroupDescriptor.standard((2, 3)), "swap")


def test_rank_of_b():
    assert [pair.r0 for pair in PAIRS] == [2, 1, 2]


def test_multiplicities():
    (swap_root,) = symmetric_service.multiplicities(PAIRS[1])
    assert (swap_root.plus, swap_root.minus) == (1, 1)
    riemannian = symmetric_service.multiplicities(PAIRS[2])
    assert [(m.plus, m.minus) for m in riemannian] == [(1, 0), (1, 0)]
    indefinite = symmetric_service.multiplicities(PAIRS[0])
    assert len(indefinite) == 3
    assert sum(m.plus for m in indefinite) == 1
    assert sum(m.minus for m in indefinite) == 2


def test_xi_density_of_the_riemannian_pair():
    pair = SymmetricPairDescriptor(SL2, "riemannian")
    density = symmetric_service.xi_density(BCartanVector.from_embedded(pair, np.array([1.0, -1.0])))
    assert density == pytest.approx(np.sinh(2.0), abs=1e-12)
    assert density == pytest.approx(3.6269, abs=1e-4)


@pytest.mark.parametrize("pair", PAIRS, ids=lambda pair: pair.kind)
def test_sigma_is_an_involution(pair, rng):
    for _ in range(10):
        g = matgroup_service.random_element(pair.descriptor, rng)
        twice = symmetric_service.sigma(pair, symmetric_service.sigma(pair, g))
        assert all(np.allclose(a, b, atol=1e-10) for a, b in zip(twice.factors, g.factors))


@pytest.mark.parametrize("pair", PAIRS, ids=lambda pair: pair.kind)
def test_sampled_h_is_fixed_and_projects_to_zero(pair, rng):
    for _ in range(10):
        h = symmetric_service.sample_h(pair, rng)
        assert symmetric_service.h_residual(pair, h) < 1e-10
        assert symmetric_service.h_cartan_projection(h, pair).norm() < 1e-7


@pytest.mark.parametrize("pair", PAIRS, ids=lambda pair: pair.kind)
def test_constructed_elements_round_trip(pair, rng):
    count = 50
    hs = [symmetric_service.sample_h(pair, rng) for _ in range(count)]
    ks = [matgroup_service.random_orthogonal(pair.descriptor, rng) for _ in range(count)]
    bs = pair.embed(rng.normal(scale=1.5, size=(count, pair.r0)))
    stacks, inverse_stacks, diagonal, inverse_diagonal = [], [], [], []
    for f, sl in enumerate(pair.descriptor.slices):
        h = np.stack([x.factors[f] for x in hs])
        h_inv = np.stack([x.inverse_factors[f] for x in hs])
        k = np.stack([x.factors[f] for x in ks])
        e = np.stack([np.diag(np.exp(b[sl])) for b in bs])
        e_inv = np.stack([np.diag(np.exp(-b[sl])) for b in bs])
        stacks.append(h @ e @ k)
        inverse_stacks.append(np.swapaxes(k, -1, -2) @ e_inv @ h_inv)
        diagonal.append(e)
        inverse_diagonal.append(e_inv)

    batch = symmetric_service.gcartan_arrays(pair, stacks)
    regular = ~batch.ambiguous
    assert np.any(regular)
    assert np.max(batch.recomposition[regular]) < 1e-8
    assert np.max(batch.residual[regular]) < 1e-7
    projected = symmetric_service.h_cartan_coords(pair, stacks, inverse_stacks)
    expected = symmetric_service.h_cartan_coords(pair, diagonal, inverse_diagonal)
    assert np.allclose(projected, expected, atol=1e-8)


def test_gcartan_decompose_recomposes_in_the_swap_pair(rng):
    pair = PAIRS[1]
    g = matgroup_service.random_element(SL2xSL2, rng)
    h, b, k = symmetric_service.gcartan_decompose(g, pair)
    assert symmetric_service.h_residual(pair, h) < 1e-7
    for i, sl in enumerate(SL2xSL2.slices):
        recomposed = h.factors[i] @ np.diag(np.exp(b.embedded[sl])) @ k.factors[i]
        assert np.allclose(recomposed, g.factors[i], rtol=1e-7, atol=1e-7)


def test_h_cartan_projection_of_a_diagonal_element():
    pair = PAIRS[1]
    g = GroupElement.from_matrices(SL2xSL2, [np.diag([np.e, 1 / np.e]), np.diag([1 / np.e, np.e])])
    b = symmetric_service.h_cartan_projection(g, pair)
    assert np.allclose(b.embedded, [1.0, -1.0, -1.0, 1.0])
    assert b.norm() == pytest.approx(2.0)
    assert b.is_dominant()


def test_b_membership_is_checked():
    with pytest.raises(InvalidInputError):
        BCartanVector.from_embedded(PAIRS[1], np.array([1.0, -1.0, 1.0, -1.0]))


def chamber_region(radius: float = 10.0) -> RegionSpec:
    pair = PAIRS[2]
    return RegionSpec(
        pair,
        inequalities=pair.simple_roots @ pair.b_basis,
        base=pair.restrict(pair.reference),
        radius=radius,
    )


def test_region_interval_of_the_chamber():
    region = chamber_region()
    w = region.pair.restrict(np.array([0.5, -0.5, -0.5, 0.5]))
    lower, upper = symmetric_service.region_interval(w, 10.0, region)
    assert lower == pytest.approx(1.0)
    assert upper == pytest.approx(9.51249, abs=1e-5)
    assert symmetric_service.region_interval(np.zeros(2), 10.0, region) == (0.0, pytest.approx(10.0))
    assert symmetric_service.region_interval(10 * w, 10.0, region) is None


def test_region_interval_input_checks():
    region = chamber_region()
    with pytest.raises(InvalidInputError):
        symmetric_service.region_interval(region.base, 10.0, region)
    with pytest.raises(InvalidInputError):
        symmetric_service.region_interval(np.zeros(2), -1.0, region)


def test_region_must_stay_in_the_chamber():
    pair = PAIRS[2]
    roots = pair.simple_roots @ pair.b_basis
    wide = np.vstack([2 * roots[0] + roots[1], roots[0] + 2 * roots[1]])
    with pytest.raises(ConfigurationError):
        RegionSpec(pair, inequalities=wide, base=pair.restrict(pair.reference), radius=1.0)
    with pytest.raises(ConfigurationError):
        RegionSpec(
            pair, inequalities=pair.simple_roots @ pair.b_basis, base=pair.restrict(pair.reference), radius=0.0
        )


def test_dom_integral_limit():
    flat = symmetric_service.dom_integral_check(1.0, 1, 1, 0.0, 1e4)
    assert flat.limit == pytest.approx(1.0)
    assert flat.relative_gap < 5e-3
    assert flat.within_bound
    shifted = symmetric_service.dom_integral_check(1.0, 2, 1, 1.0, 1e4)
    assert shifted.limit == pytest.approx(0.60653, abs=1e-5)
    assert shifted.relative_gap < 5e-3
    assert shifted.within_bound


def test_dom_integral_input_checks():
    with pytest.raises(InvalidInputError):
        symmetric_service.dom_integral_check(0.0, 1, 1, 0.0, 10.0)
    with pytest.raises(InvalidInputError):
        symmetric_service.dom_integral_check(1.0, 1, 2, 0.0, 10.0)
    with pytest.raises(InvalidInputError):
        symmetric_service.dom_integral_check(1.0, 1, 1, 100.0, 10.0)


def test_skinning_weight_in_the_swap_pair():
    pair = PAIRS[1]
    d = np.diag([np.exp(0.3), np.exp(-0.3)])
    p = GroupElement.from_matrices(SL2xSL2, [d, d])
    weight = symmetric_service.skinning_weight(GroupElement.identity(SL2xSL2), p, LinearForm.rho2(SL2xSL2), pair)
    assert weight == pytest.approx(np.exp(1.2))
    with pytest.raises(PreconditionError):
        symmetric_service.skinning_weight(
            GroupElement.identity(SL2xSL2),
            GroupElement.from_matrices(SL2xSL2, [d, np.linalg.inv(d)]),
            LinearForm.rho2(SL2xSL2),
            pair,
        )
    shear = np.array([[1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(PreconditionError):
        symmetric_service.skinning_weight(
            GroupElement.identity(SL2xSL2),
            GroupElement.from_matrices(SL2xSL2, [shear, shear]),
            LinearForm.rho2(SL2xSL2),
            pair,
        )


def test_h_orbit_membership():
    swap = PAIRS[1]
    assert symmetric_service.in_h_orbit(swap, Flag.standard(SL2xSL2))
    assert not symmetric_service.in_h_orbit(swap, Flag(SL2xSL2, (np.eye(2), np.eye(2)[::-1].copy())))
    assert symmetric_service.in_h_orbit(PAIRS[2], Flag.opposite(SL2xSL2))


def test_limit_set_of_the_diagonal_group_lies_in_the_h_orbit(diagonal):
    table = enumeration_service.enumerate_ball(diagonal, 4, with_flags=True)
    assert symmetric_service.limit_set_containment(PAIRS[1], table, samples=50, seed=1) == 1.0
    with pytest.raises(InvalidInputError):
        symmetric_service.limit_set_containment(PAIRS[1], enumeration_service.enumerate_ball(diagonal, 2))
