from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import linprog

from src.core.config.tolerances import Tolerances
from src.exceptions.errors import ConfigurationError, DimensionMismatchError, InvalidInputError
from src.models.cone import AdaptedNorm
from src.models.group import GroupDescriptor, LinearForm

PAIR_KINDS = ("indefinite-orthogonal", "swap", "riemannian")


@dataclass(frozen=True)
class RootMultiplicity:
    """
    A positive restricted root with the dimensions of the +1 and -1 eigenspaces of theta sigma on its root space.

    Attributes:
        root (tuple[float, ...]): The root as a vector of the Cartan subspace, paired with b through the trace form.
        plus (int): Dimension of the +1 eigenspace.
        minus (int): Dimension of the -1 eigenspace.
    """

    root: tuple[float, ...]
    plus: int
    minus: int

    def __call__(self, embedded: np.ndarray) -> np.ndarray:
        return np.asarray(embedded) @ np.asarray(self.root)


@dataclass(frozen=True)
class SymmetricPairDescriptor:
    """
    Involution sigma of G commuting with the Cartan involution, and H its fixed group.

    ``indefinite-orthogonal`` acts on one SL_n factor by g -> J g^-T J with J = diag(I_p, -I_q);
    ``swap`` exchanges two equal factors; ``riemannian`` is sigma = theta on every factor (H = K).

    Attributes:
        descriptor (GroupDescriptor): Ambient group.
        kind (str): One of ``PAIR_KINDS``.
        p (int): Size of the positive block of J.
        q (int): Size of the negative block of J.
    """

    descriptor: GroupDescriptor
    kind: str
    p: int = 0
    q: int = 0

    def __post_init__(self) -> None:
        if self.kind not in PAIR_KINDS:
            raise ConfigurationError(f"unknown symmetric pair {self.kind!r}, expected one of {PAIR_KINDS}")
        dims = self.descriptor.factor_dims
        if self.kind == "indefinite-orthogonal":
            if len(dims) != 1:
                raise ConfigurationError("the indefinite orthogonal pair acts on a single factor")
            if self.p < 1 or self.q < 0 or self.p + self.q != dims[0]:
                raise ConfigurationError(f"p + q must equal {dims[0]} with p >= 1, got p={self.p}, q={self.q}")
        elif self.kind == "swap" and (len(dims) != 2 or dims[0] != dims[1]):
            raise ConfigurationError("the swap pair needs two factors of equal dimension")

    @cached_property
    def form(self) -> np.ndarray:
        """J = diag(I_p, -I_q); only meaningful for the indefinite orthogonal pair."""
        return np.diag(np.concatenate([np.ones(self.p), -np.ones(self.q)]))

    @cached_property
    def b_basis(self) -> np.ndarray:
        """Orthonormal basis of the intersection of the Cartan subspace with the -1 eigenspace of sigma."""
        if self.kind != "swap":
            return self.descriptor.algebra_basis
        d = self.descriptor.factor_dims[0]
        half = GroupDescriptor((d,), (False,)).algebra_basis
        return np.vstack([half, -half]) / np.sqrt(2.0)

    @property
    def r0(self) -> int:
        return int(self.b_basis.shape[1])

    @cached_property
    def simple_roots(self) -> np.ndarray:
        """Simple restricted roots as rows acting on embedded coordinates."""
        if self.kind == "swap":
            d = self.descriptor.factor_dims[0]
            rows = np.zeros((d - 1, 2 * d))
            for i in range(d - 1):
                rows[i, i], rows[i, i + 1] = 1.0, -1.0
            return rows
        rows = []
        for sl in self.descriptor.slices:
            for i in range(sl.start, sl.stop - 1):
                row = np.zeros(self.descriptor.n_coords)
                row[i], row[i + 1] = 1.0, -1.0
                rows.append(row)
        return np.asarray(rows)

    @cached_property
    def reference(self) -> np.ndarray:
        """A regular element of the positive chamber of b, as embedded coordinates."""
        rho = LinearForm.rho2(self.descriptor).coeffs
        if self.kind == "swap":
            d = self.descriptor.factor_dims[0]
            rho = np.concatenate([rho[:d], -rho[:d]])
        return rho

    def embed(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(coords) @ self.b_basis.T

    def restrict(self, embedded: np.ndarray) -> np.ndarray:
        return np.asarray(embedded) @ self.b_basis


@dataclass(frozen=True, eq=False)
class BCartanVector:
    """
    Element of b, stored in coordinates of ``pair.b_basis``.

    Attributes:
        pair (SymmetricPairDescriptor): The symmetric pair.
        coords (np.ndarray): Coordinates of length r0.
        dominant (bool): Whether the vector is flagged as lying in the positive chamber of b.
    """

    pair: SymmetricPairDescriptor
    coords: np.ndarray
    dominant: bool = False

    def __post_init__(self) -> None:
        coords = np.array(self.coords, dtype=np.float64)
        if coords.shape != (self.pair.r0,):
            raise DimensionMismatchError(coords.shape, (self.pair.r0,))
        coords.flags.writeable = False
        object.__setattr__(self, "coords", coords)
        if self.dominant and not self.is_dominant():
            raise InvalidInputError("vector flagged dominant lies outside the positive chamber of b")

    @classmethod
    def from_embedded(
        cls, pair: SymmetricPairDescriptor, embedded: np.ndarray, dominant: bool = False
    ) -> "BCartanVector":
        """
        Raises:
            InvalidInputError: If the vector is not in b to 1e-10 relative to its size.
        """
        embedded = np.asarray(embedded, dtype=np.float64)
        coords = pair.restrict(embedded)
        scale = max(1.0, float(np.abs(embedded).max(initial=0.0)))
        if np.abs(pair.embed(coords) - embedded).max(initial=0.0) > 1e-10 * scale:
            raise InvalidInputError("vector does not lie in b")
        return cls(pair, coords, dominant)

    @property
    def embedded(self) -> np.ndarray:
        return self.pair.embed(self.coords)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def is_dominant(self, tol: float = Tolerances.TIE) -> bool:
        scale = max(1.0, float(np.abs(self.coords).max(initial=0.0)))
        return bool(np.all(self.pair.simple_roots @ self.embedded >= -tol * scale))


def _positively_spanning(rows: np.ndarray) -> bool:
    """Whether {x : rows @ x >= 0} = {0}: full rank and a strictly positive relation among the rows."""
    if np.linalg.matrix_rank(rows) < rows.shape[1]:
        return False
    result = linprog(
        np.zeros(rows.shape[0]),
        A_eq=rows.T,
        b_eq=np.zeros(rows.shape[1]),
        bounds=[(1.0, None)] * rows.shape[0],
        method="highs",
    )
    return result.status == 0


@dataclass(frozen=True, eq=False)
class RegionSpec:
    """
    Polyhedral cone C = {x in b : A x >= 0} with a norm and a truncation radius.

    Construction checks that the base direction v lies in the interior of C, that C sits in the
    closed positive chamber of b, and that theta > 0 on C minus the origin.

    Attributes:
        pair (SymmetricPairDescriptor): The symmetric pair.
        inequalities (np.ndarray): Rows of A in b coordinates, shape (m, r0).
        base (np.ndarray): Unit base direction v in b coordinates.
        radius (float): Truncation radius T.
        norm (AdaptedNorm | None): Adapted norm; the trace form when omitted.
    """

    pair: SymmetricPairDescriptor
    inequalities: np.ndarray
    base: np.ndarray
    radius: float
    norm: AdaptedNorm | None = None

    def __post_init__(self) -> None:
        a = np.atleast_2d(np.asarray(self.inequalities, dtype=np.float64))
        r0 = self.pair.r0
        if a.shape[1] != r0:
            raise ConfigurationError(f"region inequalities have {a.shape[1]} columns, b has dimension {r0}")
        base = np.asarray(self.base, dtype=np.float64)
        if base.shape != (r0,):
            raise DimensionMismatchError(base.shape, (r0,))
        if self.radius <= 0:
            raise ConfigurationError(f"truncation radius must be positive, got {self.radius!r}")
        base = base / np.linalg.norm(base)
        object.__setattr__(self, "inequalities", a)
        object.__setattr__(self, "base", base)

        if np.any(a @ base <= Tolerances.IDENTITY):
            raise ConfigurationError("the base direction is not interior to the region")
        theta = self.theta_coords
        if not _positively_spanning(np.vstack([a, -theta])):
            raise ConfigurationError("the region meets ker(theta) or its negative side")
        for root in self.pair.simple_roots @ self.pair.b_basis:
            result = linprog(root, A_ub=-a, b_ub=np.zeros(a.shape[0]), bounds=[(-1.0, 1.0)] * r0, method="highs")
            if result.status != 0 or result.fun < -Tolerances.IDENTITY:
                raise ConfigurationError("the region leaves the positive chamber of b")

    @property
    def theta_coords(self) -> np.ndarray:
        """theta restricted to b; the trace dual of v without an adapted norm."""
        if self.norm is None:
            return self.base
        return self.pair.restrict(self.norm.theta.coeffs)

    def contains(self, coords: np.ndarray, tol: float = Tolerances.IDENTITY) -> np.ndarray:
        coords = np.atleast_2d(coords)
        return np.all(coords @ self.inequalities.T >= -tol, axis=1)

    def size(self, coords: np.ndarray) -> np.ndarray:
        """Norm of b-coordinate rows: adapted when an adapted norm is attached, trace otherwise."""
        coords = np.atleast_2d(coords)
        if self.norm is None:
            return np.linalg.norm(coords, axis=1)
        return self.norm.norm(self.pair.embed(coords))
