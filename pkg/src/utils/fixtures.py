"""Generator systems used by ``verify`` and the test suite."""

import numpy as np
from scipy.linalg import expm

from src.models.group import GroupDescriptor
from src.models.words import GeneratorSystem
from src.services.enumeration_service import enumeration_service
from src.utils.matrices import reversal, skew_from_vector


def _rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def _conjugate(k: np.ndarray, diagonal: np.ndarray) -> np.ndarray:
    return k @ np.diag(np.exp(diagonal)) @ k.T


def rank_one_schottky(translation: float = 10.0) -> GeneratorSystem:
    """Two hyperbolic elements of PSL_2 with the given translation length and perpendicular axes."""
    half = translation / 2
    a = np.diag([np.exp(half), np.exp(-half)])
    b = _conjugate(_rotation(np.pi / 4), np.array([half, -half]))
    return enumeration_service.generator_system(GroupDescriptor.standard((2,)), [[a], [b]])


def sl3_schottky() -> GeneratorSystem:
    """Two regular diagonalizable elements of SL_3 in generic position."""
    spectrum = np.array([3.0, 0.5, -3.5])
    k = expm(skew_from_vector(np.array([0.9, 0.7, 1.3]), 3))
    a = np.diag(np.exp(spectrum))
    b = _conjugate(k, spectrum)
    return enumeration_service.generator_system(GroupDescriptor.standard((3,)), [[a], [b]])


def product_schottky() -> GeneratorSystem:
    """Non-conjugate Schottky representations into PSL_2 x PSL_2 with distinct translation lengths."""
    first = ([np.diag([np.exp(2.5), np.exp(-2.5)])], [_conjugate(_rotation(np.pi / 4), np.array([3.0, -3.0]))])
    second = ([_conjugate(_rotation(0.3), np.array([1.5, -1.5]))], [_conjugate(_rotation(1.2), np.array([4.0, -4.0]))])
    matrices = [first[0] + second[0], first[1] + second[1]]
    return enumeration_service.generator_system(GroupDescriptor.standard((2, 2)), matrices)


def mirrored_product() -> GeneratorSystem:
    """SL_3 generators a and w0 a^-T w0, so that the Cartan projections are exchanged by the opposition involution."""
    spectrum = np.array([2.5, 0.8, -3.3])
    k = expm(skew_from_vector(np.array([0.4, 1.1, 0.6]), 3))
    a = _conjugate(k, spectrum)
    w0 = reversal(3)
    b = w0 @ np.linalg.inv(a).T @ w0
    return enumeration_service.generator_system(GroupDescriptor.standard((3,)), [[a], [b]])


def diagonal_in_swap(translation: float = 10.0) -> GeneratorSystem:
    """The rank-one fixture embedded diagonally in PSL_2 x PSL_2, hence inside the fixed group of the swap."""
    base = rank_one_schottky(translation)
    matrices = [[g.factors[0], g.factors[0]] for g in base.generators]
    return enumeration_service.generator_system(GroupDescriptor.standard((2, 2)), matrices)
