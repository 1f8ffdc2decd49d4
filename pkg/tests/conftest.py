import numpy as np
import pytest

from src.models.group import GroupDescriptor
from src.models.words import GeneratorSystem, OrbitTable
from src.repositories.orbit_tables import OrbitTableRepository
from src.services.enumeration_service import enumeration_service
from src.utils.fixtures import diagonal_in_swap, product_schottky, rank_one_schottky, sl3_schottky


@pytest.fixture(scope="session")
def rank_one() -> GeneratorSystem:
    return rank_one_schottky()


@pytest.fixture(scope="session")
def sl3() -> GeneratorSystem:
    return sl3_schottky()


@pytest.fixture(scope="session")
def product() -> GeneratorSystem:
    return product_schottky()


@pytest.fixture(scope="session")
def diagonal() -> GeneratorSystem:
    return diagonal_in_swap()


@pytest.fixture(scope="session")
def rank_one_table(rank_one: GeneratorSystem) -> OrbitTable:
    return enumeration_service.enumerate_ball(rank_one, 8, with_flags=True)


@pytest.fixture(scope="session")
def product_table(product: GeneratorSystem) -> OrbitTable:
    return enumeration_service.enumerate_ball(product, 8)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)


@pytest.fixture
def sl2() -> GroupDescriptor:
    return GroupDescriptor.standard((2,))


@pytest.fixture
def cache(tmp_path) -> OrbitTableRepository:
    return OrbitTableRepository(tmp_path / "cache")
