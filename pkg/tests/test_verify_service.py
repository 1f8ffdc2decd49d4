import numpy as np

from src.exceptions.errors import FitError
from src.models.group import GroupDescriptor
from src.schemas.config import ExperimentConfig
from src.services.enumeration_service import enumeration_service
from src.services.verify_service import IDENTITY_ROWS, VerifyService, _check, verify_service
from tests.test_config import config_data


def by_name(checks) -> dict:
    return {check.name: check for check in checks}


def test_identity_battery_passes(sl3):
    checks = by_name(verify_service.identity_checks("sl3", sl3, depth=4))
    assert all(check.passed for check in checks.values())
    assert checks["sl3.ball_rows"].value == 0


def test_broken_opposition_is_caught(sl3):
    broken = VerifyService(opposition=lambda descriptor, coords: coords)
    checks = by_name(broken.identity_checks("sl3", sl3, depth=3))
    assert not checks["sl3.mu_inverse"].passed
    assert not checks["sl3.lambda_inverse"].passed
    assert checks["sl3.mu_naive_product"].passed


def test_negating_opposition_fails_in_rank_one(rank_one):
    # the opposition fixes the rank-one chamber pointwise
    broken = VerifyService(opposition=lambda descriptor, coords: -coords)
    assert not by_name(broken.identity_checks("r1", rank_one, depth=3))["r1.mu_inverse"].passed


def test_decomposition_battery(rng):
    checks = verify_service.decomposition_checks(GroupDescriptor.standard((3,)), rng)
    assert checks
    assert all(check.passed for check in checks)


def test_counting_and_density_batteries(rank_one):
    checks = verify_service.counting_checks(rank_one) + verify_service.density_checks()
    assert all(check.passed for check in checks)


def test_guarded_turns_errors_into_failures():
    def battery():
        raise FitError("nothing to fit")

    (check,) = verify_service.guarded("broken", "experiments", battery)
    assert not check.passed
    assert check.hard
    assert "nothing to fit" in check.detail


def test_suite_reports_invalid_config_generators():
    data = config_data()
    data["group"]["generators"][0]["matrices"] = [[[2.0, 0.0], [0.0, 1.0]]]
    report = verify_service.verify_suite(ExperimentConfig.parse(data), seed=1, include_slow=False)
    checks = by_name(report.checks)
    assert not checks["config.generators"].passed
    assert "config.mu_inverse" not in checks
    assert not report.passed
    assert report.failed[0].name == "config.generators"
    assert report.seed == 1
    assert not any(name.split(".")[0] in ("vanishing", "directional", "symmetric", "growth") for name in checks)
    assert all(check.passed for check in report.checks if check.name != "config.generators" and check.hard)


def test_check_values_are_finite_for_passing_entries(sl3):
    for check in verify_service.identity_checks("sl3", sl3, depth=3):
        assert check.passed and np.isfinite(check.value)


def test_identity_depth_reaches_the_row_count():
    for p in (2, 3):
        depth = verify_service.identity_depth(p)
        assert enumeration_service.ball_size(p, depth) >= IDENTITY_ROWS > enumeration_service.ball_size(p, depth - 1)
    assert verify_service.identity_depth(2) == 8


def test_worker_counts_give_identical_outputs(product):
    checks = by_name(verify_service.determinism_checks(product, workers=(1, 8)))
    assert checks["enumeration.worker_independence"].passed
    assert checks["experiments.worker_independence"].passed
    assert "1, 8" in checks["experiments.worker_independence"].detail


def test_no_orbit_points_far_outside_the_limit_cone(product):
    (check,) = verify_service.vanishing_checks(product, depths=(6, 9))
    assert check.hard
    assert check.passed, check.detail
    assert check.value == 0


def test_vanishing_fails_without_separated_cones(product):
    (check,) = verify_service.vanishing_checks(product, depths=(3, 5), margin=np.pi)
    assert not check.passed
    assert check.detail.startswith("0 cones")


def test_growth_battery_gates_the_suite(rank_one):
    checks = by_name(verify_service.growth_checks(rank_one, depths=(7, 8)))
    assert set(checks) == {"growth.depth_consistency", "growth.poincare_agreement", "growth.volume_bound"}
    assert all(check.hard for check in checks.values())
    assert checks["growth.volume_bound"].passed
    assert all(np.isfinite(check.value) for check in checks.values())


def test_bisector_reduction_matches_directional_counts(product):
    checks = by_name(verify_service.directional_checks(product, depth=8))
    assert checks["directional.bisector_reduction"].passed
    assert checks["directional.bisector_reduction"].value == 0
    assert checks["directional.growth_indicator"].hard
    assert np.isfinite(checks["directional.growth_indicator"].value)


def test_symmetric_battery(product):
    checks = by_name(verify_service.symmetric_checks(product, depth=7))
    assert checks["symmetric.rate_bound"].hard
    assert np.isfinite(checks["symmetric.rate_bound"].value)
    assert not checks["symmetric.log_exponent"].hard


def test_conformality_battery_is_hard(rank_one):
    checks = by_name(verify_service.conformality_checks(rank_one, depths=(5, 7)))
    assert checks["ps.conformality_scale"].passed
    assert checks["ps.conformality_scale"].value <= 1e-12
    trends = [check for name, check in checks.items() if name.startswith("ps.conformality_trend")]
    assert len(trends) == rank_one.p
    assert all(check.hard for check in trends)


def test_strict_checks_reject_equality():
    assert not _check("trend", "boundary", 0.0, 0.0, strict=True).passed
    assert _check("trend", "boundary", -1e-3, 0.0, strict=True).passed
    assert _check("bound", "boundary", 0.0, 0.0).passed
    assert not _check("bound", "boundary", float("nan"), 1.0).passed
