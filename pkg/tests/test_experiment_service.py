import numpy as np
import pytest

from src.exceptions.errors import ConfigurationError
from src.models.words import GeneratorSystem
from src.schemas.config import ExperimentConfig, ParamsSchema
from src.services.enumeration_service import enumeration_service
from src.services.experiment_service import experiment_service


def make_config(gens: GeneratorSystem, kind: str, pair: dict | None = None, **params) -> ExperimentConfig:
    return ExperimentConfig.from_generators(gens, kind, pair, seed=3, **params)


def test_orbit_table_is_cached(rank_one, cache):
    first = experiment_service.orbit_table(rank_one, 4, cache=cache)
    assert cache.find_one_or_none(rank_one, 4) is not None
    second = experiment_service.orbit_table(rank_one, 4, cache=cache)
    assert np.array_equal(first.words, second.words)
    assert np.array_equal(first.mu, second.mu)


def test_region_from_params(sl3):
    cone = experiment_service.region(sl3.descriptor, ParamsSchema(direction=[1.0, 0.0, -1.0], aperture=0.2))
    assert cone.name == "cone"
    assert cone.center == pytest.approx(np.array([1.0, 0.0, -1.0]) / np.sqrt(2))
    polyhedral = experiment_service.region(sl3.descriptor, ParamsSchema(inequalities=[[1.0, -2.0, 1.0]]))
    assert polyhedral.name == "polyhedral"
    assert experiment_service.region(sl3.descriptor, ParamsSchema()).name == "chamber"
    with pytest.raises(ConfigurationError):
        experiment_service.region(sl3.descriptor, ParamsSchema(direction=[1.0, 0.0, -1.0]))


def test_adapted_norm_from_params(sl3):
    params = ParamsSchema(norm="adapted", theta=[1.0, 0.0, -1.0], direction=[1.0, 0.0, -1.0])
    norm = experiment_service.norm(sl3.descriptor, params)
    assert norm is not None
    assert experiment_service.norm(sl3.descriptor, ParamsSchema()) is None


def test_cone_count(rank_one, cache):
    config = make_config(rank_one, "cone-count", depth=8, direction=[1.0, -1.0], aperture=0.3, compare_growth=False)
    outcome = experiment_service.run_cone_count(config, cache=cache)
    assert outcome.report.rows == enumeration_service.ball_size(2, 8) - 1
    assert outcome.report.expected_beta == 0.0
    assert outcome.report.fit.beta_frozen
    assert 0 < outcome.report.fit.delta < np.sqrt(2)
    assert np.all(np.diff(outcome.record.n) >= 0)


def test_symmetric_count_riemannian(rank_one):
    config = make_config(rank_one, "symmetric-count", pair={"kind": "riemannian"}, depth=8, compare_growth=False)
    outcome = experiment_service.run_symmetric_count(config)
    assert outcome.record.metadata["dedup"] == "orthogonal-form"
    assert outcome.report.rows == enumeration_service.ball_size(2, 8) - 1
    assert outcome.report.expected_beta == 0.0
    assert outcome.report.limit_set_containment is None
    assert outcome.report.critical_exponent is not None
    assert outcome.report.ambiguous_fraction == 0.0


def test_bisector_count_riemannian(rank_one):
    config = make_config(rank_one, "bisector-count", pair={"kind": "riemannian"}, depth=8, compare_growth=False)
    outcome = experiment_service.run_bisector_experiment(config)
    assert outcome.report.rows == enumeration_service.ball_size(2, 8) - 1
    assert outcome.report.ambiguous_fraction <= 0.01
    assert outcome.record.metadata["region"] == "bisector"


def test_bisector_with_restricted_k_set_counts_fewer(rank_one):
    kwargs = dict(pair={"kind": "riemannian"}, depth=6, compare_growth=False)
    whole = make_config(rank_one, "bisector-count", **kwargs)
    ball = {"center": [[[1.0, 0.0], [0.0, 1.0]]], "radius": 0.3}
    restricted = make_config(rank_one, "bisector-count", omega_k=ball, **kwargs)
    table = experiment_service.orbit_table(rank_one, 6)
    n_whole, _ = experiment_service.bisector_record(whole, table, rank_one)
    n_restricted, _ = experiment_service.bisector_record(restricted, table, rank_one)
    assert 0 < n_restricted.metadata["rows"] < n_whole.metadata["rows"]


def test_ball_center_must_match_the_factors(rank_one):
    config = make_config(
        rank_one,
        "bisector-count",
        pair={"kind": "riemannian"},
        depth=3,
        omega_k={"center": [[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]]},
    )
    table = experiment_service.orbit_table(rank_one, 3)
    with pytest.raises(ConfigurationError):
        experiment_service.bisector_record(config, table, rank_one)


def test_limit_cone(sl3):
    record = experiment_service.run_limit_cone(make_config(sl3, "limit-cone", depth=6))
    assert record.projection == "jordan"
    assert record.depth == 6
    assert record.vertices
    assert record.wall_margin > 0


def test_growth_indicator(product):
    config = make_config(product, "growth-indicator", depth=7, resolution=4)
    record, concavity = experiment_service.run_growth_indicator(config)
    assert record.depth == 7
    assert len(record.directions) == 5
    assert concavity.pairs >= 0


def test_ps_measure(rank_one):
    measure, report = experiment_service.run_ps_measure(make_config(rank_one, "ps-measure", depth=6))
    assert report.atoms == len(measure)
    assert set(report.cylinders) == {"a", "b", "A", "B"}
    assert sum(report.cylinders.values()) == pytest.approx(1.0)
    assert report.conformality_residual is not None
    assert report.max_weight <= 1.0


def test_seed_resolution(rank_one):
    config = make_config(rank_one, "cone-count")
    assert experiment_service.resolve_seed(config) == 3
    assert experiment_service.resolve_seed(config, 9) == 9


def test_symmetric_count_swap(product):
    config = make_config(product, "symmetric-count", pair={"kind": "swap"}, depth=7, compare_growth=False)
    outcome = experiment_service.run_symmetric_count(config)
    assert outcome.record.metadata["dedup"] == "factor-ratio"
    assert outcome.record.metadata["region"] == "b-chamber"
    assert outcome.report.expected_beta == -0.5
    assert outcome.report.fit.beta_frozen
    assert outcome.report.fit.delta > 0
    assert outcome.report.critical_exponent is not None
    assert outcome.report.limit_set_containment is not None
    assert np.all(np.diff(outcome.record.n) >= 0)


def test_bisector_count_equals_directional_count(product, product_table):
    kwargs = dict(depth=8, direction=[1.0, -1.0, 1.0, -1.0], aperture=0.3, compare_growth=False)
    directional = experiment_service.run_cone_count(make_config(product, "cone-count", **kwargs))
    config = make_config(product, "bisector-count", pair={"kind": "riemannian"}, **kwargs)
    bisector, fraction = experiment_service.bisector_record(config, product_table, product)
    assert fraction <= 0.01
    assert bisector.metadata["rows"] == directional.record.metadata["rows"] > 0
    assert np.array_equal(bisector.n, directional.record.n)
    assert np.array_equal(bisector.t, directional.record.t)
