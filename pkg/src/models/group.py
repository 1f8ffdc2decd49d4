from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from src.core.config.tolerances import Tolerances
from src.exceptions.errors import DimensionMismatchError, InvalidInputError
from src.utils.matrices import canonical_sign, normalize_determinant

MAX_FACTOR_DIM = 6


@dataclass(frozen=True)
class GroupDescriptor:
    """
    Shape of a product G = G_1 x ... x G_m of SL_d factors.

    Attributes:
        factor_dims (tuple[int, ...]): Matrix size d_i of every factor.
        projective_flags (tuple[bool, ...]): Whether factor i is taken modulo +-I.
    """

    factor_dims: tuple[int, ...]
    projective_flags: tuple[bool, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "factor_dims", tuple(int(d) for d in self.factor_dims))
        object.__setattr__(self, "projective_flags", tuple(bool(f) for f in self.projective_flags))
        if not self.factor_dims:
            raise InvalidInputError("a group needs at least one factor")
        if len(self.factor_dims) != len(self.projective_flags):
            raise InvalidInputError("one projective flag per factor is required")
        for d in self.factor_dims:
            if d < 2 or d > MAX_FACTOR_DIM:
                raise InvalidInputError(f"factor dimension {d} outside 2..{MAX_FACTOR_DIM}")

    @classmethod
    def standard(cls, dims: Sequence[int]) -> "GroupDescriptor":
        """Projective exactly on the even-dimensional factors."""
        return cls(tuple(dims), tuple(d % 2 == 0 for d in dims))

    @property
    def rank(self) -> int:
        return sum(d - 1 for d in self.factor_dims)

    @property
    def n_coords(self) -> int:
        return sum(self.factor_dims)

    @property
    def n_factors(self) -> int:
        return len(self.factor_dims)

    @cached_property
    def slices(self) -> tuple[slice, ...]:
        out, start = [], 0
        for d in self.factor_dims:
            out.append(slice(start, start + d))
            start += d
        return tuple(out)

    @cached_property
    def gram(self) -> np.ndarray:
        """Trace form on the stacked diagonal coordinates."""
        return np.eye(self.n_coords)

    @cached_property
    def algebra_basis(self) -> np.ndarray:
        """Orthonormal basis of the trace-zero subspace, shape (n_coords, rank)."""
        columns = []
        for sl, d in zip(self.slices, self.factor_dims):
            block = np.zeros((self.n_coords, d - 1))
            for j in range(d - 1):
                block[sl.start + j, j] = 1.0
                block[sl.start + j + 1, j] = -1.0
            columns.append(block)
        q, _ = np.linalg.qr(np.hstack(columns))
        return q

    def check_same(self, other: "GroupDescriptor") -> None:
        if self.factor_dims != other.factor_dims:
            raise DimensionMismatchError(self.factor_dims, other.factor_dims)

    def project(self, coords: np.ndarray) -> np.ndarray:
        """Removes the per-factor mean, i.e. projects onto the trace-zero subspace."""
        coords = np.array(coords, dtype=np.float64)
        for sl in self.slices:
            coords[..., sl] -= coords[..., sl].mean(axis=-1, keepdims=True)
        return coords


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64)
    array.flags.writeable = False
    return array


def _canonicalize(stack: np.ndarray, projective: bool) -> np.ndarray:
    stack, det = normalize_determinant(stack)
    d = stack.shape[-1]
    negative = det < 0
    if np.any(negative):
        if d % 2 == 0:
            raise InvalidInputError(f"determinant is negative on an even-dimensional factor (d={d})")
        stack = np.where(negative[:, None, None], -stack, stack)
    if projective:
        stack = canonical_sign(stack)
    return stack


@dataclass(frozen=True, eq=False)
class GroupElement:
    """
    Element of G as a tuple of factor matrices, with its inverse carried alongside.

    Products propagate both the element and the inverse, so that the small end of every spectrum
    can be read from the inverse at full relative precision.
    """

    descriptor: GroupDescriptor
    factors: tuple[np.ndarray, ...]
    inverse_factors: tuple[np.ndarray, ...] = field(repr=False)

    @classmethod
    def from_matrices(
        cls, descriptor: GroupDescriptor, matrices: Sequence[np.ndarray], strict: bool = False
    ) -> "GroupElement":
        """
        Validates and canonicalizes raw factor matrices.

        Args:
            descriptor (GroupDescriptor): Target group.
            matrices: One square matrix per factor.
            strict (bool): Require ||det| - 1| <= INPUT_DETERMINANT instead of rescaling.

        Returns:
            GroupElement: The canonical element.

        Raises:
            InvalidInputError: On shape mismatch, non-finite entries, singular or badly normalized input.
        """
        if len(matrices) != descriptor.n_factors:
            raise InvalidInputError(f"expected {descriptor.n_factors} factor matrices, got {len(matrices)}")
        factors, inverses = [], []
        for i, (matrix, d, projective) in enumerate(
            zip(matrices, descriptor.factor_dims, descriptor.projective_flags)
        ):
            matrix = np.asarray(matrix, dtype=np.float64)
            if matrix.shape != (d, d):
                raise InvalidInputError(f"factor {i} has shape {matrix.shape}, expected {(d, d)}")
            if not np.all(np.isfinite(matrix)):
                raise InvalidInputError(f"factor {i} has non-finite entries")
            det = np.linalg.det(matrix)
            if not np.isfinite(det) or abs(det) < np.finfo(float).tiny:
                raise InvalidInputError(f"factor {i} is singular")
            if strict and abs(abs(det) - 1.0) > Tolerances.INPUT_DETERMINANT:
                raise InvalidInputError(f"factor {i} has |det| = {abs(det)!r}, expected 1")
            canonical = _canonicalize(matrix[None], projective)[0]
            factors.append(_frozen(canonical))
            inverses.append(_frozen(_canonicalize(np.linalg.inv(canonical)[None], projective)[0]))
        return cls(descriptor, tuple(factors), tuple(inverses))

    @classmethod
    def raw(cls, descriptor: GroupDescriptor, matrices: Sequence[np.ndarray]) -> "GroupElement":
        """Wraps matrices without sign canonicalization (orthogonal and unipotent parts)."""
        factors = tuple(_frozen(m) for m in matrices)
        return cls(descriptor, factors, tuple(_frozen(np.linalg.inv(m)) for m in factors))

    @classmethod
    def identity(cls, descriptor: GroupDescriptor) -> "GroupElement":
        eye = tuple(_frozen(np.eye(d)) for d in descriptor.factor_dims)
        return cls(descriptor, eye, eye)

    @classmethod
    def from_stacks(
        cls, descriptor: GroupDescriptor, factors: Sequence[np.ndarray], inverses: Sequence[np.ndarray]
    ) -> "GroupElement":
        """Wraps already canonical matrices (products computed in bulk)."""
        return cls(descriptor, tuple(_frozen(m) for m in factors), tuple(_frozen(m) for m in inverses))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        self.descriptor.check_same(other.descriptor)
        factors, inverses = [], []
        for a, b, ai, bi, projective in zip(
            self.factors, other.factors, self.inverse_factors, other.inverse_factors, self.descriptor.projective_flags
        ):
            factors.append(_canonicalize((a @ b)[None], projective)[0])
            inverses.append(_canonicalize((bi @ ai)[None], projective)[0])
        return GroupElement.from_stacks(self.descriptor, factors, inverses)

    def inverse(self) -> "GroupElement":
        return GroupElement(self.descriptor, self.inverse_factors, self.factors)

    def power(self, n: int) -> "GroupElement":
        base = self if n >= 0 else self.inverse()
        out = GroupElement.identity(self.descriptor)
        for _ in range(abs(n)):
            out = out @ base
        return out

    def equals(self, other: "GroupElement", tol: float = Tolerances.IDENTITY) -> bool:
        if self.descriptor.factor_dims != other.descriptor.factor_dims:
            return False
        for a, b, projective in zip(self.factors, other.factors, self.descriptor.projective_flags):
            scale = max(1.0, np.abs(a).max())
            if np.abs(a - b).max() > tol * scale and not (projective and np.abs(a + b).max() <= tol * scale):
                return False
        return True


@dataclass(frozen=True, eq=False)
class CartanVector:
    """
    Point of the Cartan subspace: trace-zero diagonal coordinates stacked over the factors.

    Attributes:
        descriptor (GroupDescriptor): Group the vector belongs to.
        coords (np.ndarray): Coordinates of length sum(d_i).
        dominant (bool): Whether the vector is flagged as lying in the positive Weyl chamber.
    """

    descriptor: GroupDescriptor
    coords: np.ndarray
    dominant: bool = False

    def __post_init__(self) -> None:
        coords = _frozen(self.coords)
        object.__setattr__(self, "coords", coords)
        if coords.shape != (self.descriptor.n_coords,):
            raise DimensionMismatchError(coords.shape, (self.descriptor.n_coords,))
        if not np.all(np.isfinite(coords)):
            raise InvalidInputError("Cartan vector has non-finite coordinates")
        scale = max(1.0, float(np.abs(coords).max(initial=0.0)))
        for sl in self.descriptor.slices:
            if abs(coords[sl].sum()) > Tolerances.INVARIANT_SUM * scale:
                raise InvalidInputError(f"per-factor coordinates must sum to 0, got {coords[sl].sum()!r}")
        if self.dominant and not self.is_dominant():
            raise InvalidInputError("vector flagged dominant has increasing coordinates")

    @classmethod
    def zero(cls, descriptor: GroupDescriptor) -> "CartanVector":
        return cls(descriptor, np.zeros(descriptor.n_coords), dominant=True)

    @classmethod
    def from_simple_roots(cls, descriptor: GroupDescriptor, values: Sequence[float]) -> "CartanVector":
        """
        Builds the vector with prescribed simple-root values alpha_j = x_j - x_{j+1}.

        Args:
            descriptor (GroupDescriptor): Target group.
            values: rank values, factor by factor.
        """
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (descriptor.rank,):
            raise DimensionMismatchError(values.shape, (descriptor.rank,))
        coords, offset = [], 0
        for d in descriptor.factor_dims:
            alpha = values[offset : offset + d - 1]
            offset += d - 1
            first = sum((d - j) * alpha[j - 1] for j in range(1, d)) / d
            coords.append(first - np.concatenate([[0.0], np.cumsum(alpha)]))
        return cls(descriptor, np.concatenate(coords), dominant=bool(np.all(values >= 0)))

    def factor(self, i: int) -> np.ndarray:
        return self.coords[self.descriptor.slices[i]]

    def simple_roots(self) -> np.ndarray:
        return np.concatenate([-np.diff(self.coords[sl]) for sl in self.descriptor.slices])

    def is_dominant(self, tol: float = Tolerances.TIE) -> bool:
        return bool(np.all(self.simple_roots() >= -tol * max(1.0, float(np.abs(self.coords).max(initial=0.0)))))

    def allclose(self, other: "CartanVector", atol: float = Tolerances.IDENTITY) -> bool:
        self.descriptor.check_same(other.descriptor)
        return bool(np.all(np.abs(self.coords - other.coords) <= atol))

    def _wrap(self, coords: np.ndarray) -> "CartanVector":
        return CartanVector(self.descriptor, coords)

    def __add__(self, other: "CartanVector") -> "CartanVector":
        self.descriptor.check_same(other.descriptor)
        return self._wrap(self.coords + other.coords)

    def __sub__(self, other: "CartanVector") -> "CartanVector":
        self.descriptor.check_same(other.descriptor)
        return self._wrap(self.coords - other.coords)

    def __neg__(self) -> "CartanVector":
        return self._wrap(-self.coords)

    def __mul__(self, scalar: float) -> "CartanVector":
        return self._wrap(self.coords * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "CartanVector":
        return self._wrap(self.coords / float(scalar))


@dataclass(frozen=True, eq=False)
class LinearForm:
    """
    Linear functional on the Cartan subspace, evaluated through the trace pairing.

    Coefficients are stored projected onto the trace-zero subspace, so two forms that agree on
    the Cartan subspace have identical coefficients.
    """

    descriptor: GroupDescriptor
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if coeffs.shape != (self.descriptor.n_coords,):
            raise DimensionMismatchError(coeffs.shape, (self.descriptor.n_coords,))
        object.__setattr__(self, "coeffs", _frozen(self.descriptor.project(coeffs)))

    @classmethod
    def rho2(cls, descriptor: GroupDescriptor) -> "LinearForm":
        """Sum of positive roots: coefficients (d-1, d-3, ..., -(d-1)) per factor."""
        coeffs = [np.arange(d - 1, -d, -2, dtype=np.float64) for d in descriptor.factor_dims]
        return cls(descriptor, np.concatenate(coeffs))

    @classmethod
    def dual(cls, v: CartanVector, scale: float = 1.0) -> "LinearForm":
        """The form scale * <v, .>."""
        return cls(v.descriptor, scale * v.coords)

    @classmethod
    def zero(cls, descriptor: GroupDescriptor) -> "LinearForm":
        return cls(descriptor, np.zeros(descriptor.n_coords))

    def __call__(self, v: "CartanVector | np.ndarray") -> "float | np.ndarray":
        if isinstance(v, CartanVector):
            self.descriptor.check_same(v.descriptor)
            return float(v.coords @ self.coeffs)
        v = np.asarray(v, dtype=np.float64)
        if v.shape[-1] != self.descriptor.n_coords:
            raise DimensionMismatchError(v.shape, (self.descriptor.n_coords,))
        return v @ self.coeffs

    def is_zero(self, tol: float = Tolerances.TIE) -> bool:
        return bool(np.abs(self.coeffs).max() <= tol)

    def __mul__(self, scalar: float) -> "LinearForm":
        return LinearForm(self.descriptor, self.coeffs * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class IwasawaDecomposition:
    """g = k exp(a) n with k orthogonal, a in the Cartan subspace and n upper unipotent."""

    k: GroupElement
    a: CartanVector
    n: GroupElement
    residual: float


@dataclass(frozen=True, eq=False)
class KAKDecomposition:
    """g = k1 exp(mu) k2 with mu dominant; ``unique`` is False when mu has a repeated coordinate."""

    k1: GroupElement
    mu: CartanVector
    k2: GroupElement
    residual: float
    unique: bool
