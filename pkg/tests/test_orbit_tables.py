import numpy as np
import pytest

from src.exceptions.errors import CorruptCacheError, StaleCacheError
from src.services.enumeration_service import enumeration_service
from src.utils.fixtures import rank_one_schottky


def test_save_and_load_is_bit_exact(cache, rank_one):
    table = enumeration_service.enumerate_ball(rank_one, 4, with_flags=True)
    path = cache.add_one((table, rank_one))
    assert path.exists()
    loaded = cache.find_one(rank_one, 4)
    assert loaded.digest == table.digest
    assert loaded.depth == 4 and loaded.p == 2
    for name in ("words", "lengths", "mu", "lam", "flags"):
        assert np.array_equal(getattr(loaded, name), getattr(table, name))


def test_load_without_generators_uses_standard_descriptor(cache, product):
    table = enumeration_service.enumerate_ball(product, 2)
    path = cache.add_one((table, product))
    loaded = cache.load_table(path)
    assert loaded.descriptor.factor_dims == (2, 2)
    assert not loaded.has_flags


def test_stale_cache_is_detected(cache, rank_one):
    table = enumeration_service.enumerate_ball(rank_one, 2)
    path = cache.add_one((table, rank_one))
    with pytest.raises(StaleCacheError):
        cache.load_table(path, rank_one_schottky(translation=8.0))


def test_corrupt_cache_is_detected(cache, rank_one, tmp_path):
    table = enumeration_service.enumerate_ball(rank_one, 2)
    path = cache.add_one((table, rank_one))
    data = path.read_bytes()
    path.write_bytes(data[:-5])
    with pytest.raises(CorruptCacheError):
        cache.load_table(path, rank_one)
    garbage = tmp_path / "garbage.orbit"
    garbage.write_bytes(b"not a table at all")
    with pytest.raises(CorruptCacheError):
        cache.load_table(garbage)
    header_only = tmp_path / "header.orbit"
    header_only.write_bytes(data[:12])
    with pytest.raises(CorruptCacheError):
        cache.load_table(header_only)


def test_lookup_and_delete(cache, rank_one):
    assert cache.find_one_or_none(rank_one, 3) is None
    assert cache.find_all() == []
    table = enumeration_service.enumerate_ball(rank_one, 3)
    cache.add_one((table, rank_one))
    assert cache.find_one_or_none(rank_one, 3) is not None
    assert cache.find_one_or_none(rank_one, 3, with_flags=True) is None
    assert len(cache.find_all()) == 1
    cache.delete_one(rank_one, 3)
    assert cache.find_all() == []
    with pytest.raises(FileNotFoundError):
        cache.find_one(rank_one, 3)


def test_cache_dir_defaults_to_settings(monkeypatch, tmp_path):
    from src.core.config.app_settings import settings
    from src.repositories.orbit_tables import OrbitTableRepository

    monkeypatch.setattr(settings, "CACHE_DIR", tmp_path / "default")
    assert OrbitTableRepository().cache_dir == tmp_path / "default"


def test_truncated_table_is_found_at_its_own_depth(cache, rank_one, rank_one_table):
    sub = rank_one_table.truncate(5, rank_one)
    cache.add_one((sub, rank_one))
    loaded = cache.find_one(rank_one, 5)
    assert loaded.depth == 5 and loaded.has_flags
    assert len(loaded) == enumeration_service.ball_size(2, 5)
    assert np.array_equal(loaded.mu, enumeration_service.enumerate_ball(rank_one, 5).mu)
