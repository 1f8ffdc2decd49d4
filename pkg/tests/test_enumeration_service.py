import numpy as np
import pytest

from src.exceptions.errors import (
    ConfigurationError,
    DimensionMismatchError,
    InvalidInputError,
    MatrixOverflowError,
    NonFreeInputError,
    ResourceBudgetError,
)
from src.models.group import GroupDescriptor
from src.models.words import GeneratorSystem, Word
from src.services.enumeration_service import enumeration_service
from src.services.matgroup_service import matgroup_service
from src.utils.fixtures import rank_one_schottky


def test_ball_size_formula():
    assert enumeration_service.ball_size(2, 0) == 1
    assert enumeration_service.ball_size(2, 3) == 53
    assert enumeration_service.ball_size(3, 2) == 1 + 6 + 30


def test_depth_zero_is_the_identity(rank_one):
    table = enumeration_service.enumerate_ball(rank_one, 0)
    assert len(table) == 1
    assert table.lengths[0] == 0
    assert np.allclose(table.mu, 0.0)


def test_depth_three_row_count_and_order(rank_one):
    table = enumeration_service.enumerate_ball(rank_one, 3)
    assert len(table) == 53
    assert table.words.dtype == np.int16
    assert table.lengths[0] == 0
    assert np.bincount(table.lengths).tolist() == [1, 4, 12, 36]
    keys = np.where(table.words == 0, -3, table.words.astype(np.int32))
    assert [tuple(row) for row in keys] == sorted(tuple(row) for row in keys)


def test_rows_are_reduced_words(sl3):
    table = enumeration_service.enumerate_ball(sl3, 4)
    words = {table.word(i).letters for i in range(len(table))}
    assert len(words) == len(table)
    for i in range(len(table)):
        letters = table.word(i).letters
        assert all(a != -b for a, b in zip(letters, letters[1:]))


def test_incremental_products_match_naive_evaluation(sl3):
    table = enumeration_service.enumerate_ball(sl3, 5)
    for i in range(0, len(table), 37):
        g = sl3.evaluate(table.word(i))
        mu = matgroup_service.cartan_projection(g).coords
        assert np.allclose(table.mu[i], mu, rtol=1e-9, atol=1e-9)


def test_table_matrices_reproduce_rows(product):
    table = enumeration_service.enumerate_ball(product, 3)
    mats, invs = enumeration_service.table_matrices(table, product)
    assert np.allclose(matgroup_service.cartan_coords(mats, invs), table.mu, atol=1e-9)


def test_enumeration_is_independent_of_worker_count(product):
    one = enumeration_service.enumerate_ball(product, 4, threads=1)
    two = enumeration_service.enumerate_ball(product, 4, threads=2)
    assert np.array_equal(one.words, two.words)
    assert np.array_equal(one.mu, two.mu)
    assert np.array_equal(one.lam, two.lam)
    assert one.digest == two.digest


def test_flags_are_stored_on_request(rank_one):
    table = enumeration_service.enumerate_ball(rank_one, 2, with_flags=True)
    assert table.has_flags
    assert table.flags.shape == (len(table), 4)
    assert not enumeration_service.enumerate_ball(rank_one, 2).has_flags


def test_negative_depth_is_rejected(rank_one):
    with pytest.raises(InvalidInputError):
        enumeration_service.enumerate_ball(rank_one, -1)


def test_row_budget_is_enforced(rank_one):
    with pytest.raises(ResourceBudgetError):
        enumeration_service.enumerate_ball(rank_one, 3, budget=50)


def test_overflow_is_reported(sl2):
    big = np.exp(100.0)
    gens = enumeration_service.generator_system(
        sl2, [[np.diag([big, 1 / big])], [np.array([[big, 0.0], [1.0, 1 / big]])]]
    )
    with pytest.raises(MatrixOverflowError):
        enumeration_service.enumerate_ball(gens, 8)


def test_relation_is_detected_as_non_free(rank_one):
    a = rank_one.generators[0]
    gens = GeneratorSystem(rank_one.descriptor, (a, a.inverse()))
    with pytest.raises(NonFreeInputError):
        enumeration_service.enumerate_ball(gens, 2)


def test_generator_system_requires_two_generators(rank_one):
    with pytest.raises(InvalidInputError):
        GeneratorSystem(rank_one.descriptor, rank_one.generators[:1])


def test_digest_depends_on_depth_and_matrices(rank_one):
    assert rank_one.digest(3) != rank_one.digest(4)
    assert rank_one.digest(3) != rank_one_schottky(translation=8.0).digest(3)
    assert rank_one.digest(3) == rank_one_schottky().digest(3)


def test_factor_ratio_collapses_the_diagonal(diagonal):
    table = enumeration_service.enumerate_ball(diagonal, 3)
    kept = enumeration_service.dedup_cosets(table, diagonal, "factor-ratio")
    assert len(kept) == 1
    assert kept.lengths[0] == 0


def test_factor_ratio_keeps_distinct_cosets(product):
    table = enumeration_service.enumerate_ball(product, 2)
    kept = enumeration_service.dedup_cosets(table, product, "factor-ratio")
    assert len(kept) == len(table)


def test_dedup_configuration_errors(rank_one, sl3):
    table = enumeration_service.enumerate_ball(rank_one, 1)
    with pytest.raises(ConfigurationError):
        enumeration_service.dedup_cosets(table, rank_one, "unknown")
    with pytest.raises(ConfigurationError):
        enumeration_service.dedup_cosets(table, rank_one, "orthogonal-form")
    with pytest.raises(ConfigurationError):
        enumeration_service.dedup_cosets(table, rank_one, "factor-ratio")


def test_orthogonal_form_dedup_keeps_identity(sl3):
    table = enumeration_service.enumerate_ball(sl3, 2)
    kept = enumeration_service.dedup_cosets(table, sl3, "orthogonal-form", form=[np.diag([1.0, 1.0, -1.0])])
    assert kept.lengths[0] == 0
    assert 1 <= len(kept) <= len(table)


def test_word_algebra():
    labels = ("a", "b")
    assert Word.reduce((1, -2, 2, 1)).letters == (1, 1)
    assert (Word((1, 2)) * Word((-2, -1))).letters == ()
    assert Word((1, -2)).inverse().letters == (2, -1)
    assert Word((1, -2)).render(labels) == "aB"
    with pytest.raises(InvalidInputError):
        Word((1, -1))


def test_table_truncation(rank_one, rank_one_table):
    sub = rank_one_table.truncate(3, rank_one)
    assert len(sub) == 53
    assert sub.words.shape[1] == 3
    assert sub.digest == rank_one.digest(3)
    with pytest.raises(InvalidInputError):
        rank_one_table.truncate(9, rank_one)
    with pytest.raises(InvalidInputError):
        rank_one_table.truncate(3, rank_one_schottky(translation=8.0))


def test_descriptor_mismatch_in_table_matrices(rank_one, product):
    table = enumeration_service.enumerate_ball(rank_one, 1)
    with pytest.raises(DimensionMismatchError):
        enumeration_service.table_matrices(table, product)


def test_standard_descriptor():
    descriptor = GroupDescriptor.standard((2, 3))
    assert descriptor.projective_flags == (True, False)
    assert descriptor.rank == 3
    assert descriptor.n_coords == 5
    with pytest.raises(InvalidInputError):
        GroupDescriptor.standard((7,))


def test_jordan_norm_is_bounded_by_cartan_norm(rank_one_table, product_table):
    for table in (rank_one_table, product_table):
        mu = matgroup_service.norms(table.mu)
        assert np.all(matgroup_service.norms(table.lam) <= mu + 1e-9 * (1.0 + mu))
