from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from src.core.config.tolerances import Tolerances
from src.exceptions.errors import InvalidInputError
from src.models.group import CartanVector, GroupDescriptor, LinearForm


@dataclass(frozen=True, eq=False)
class LimitConeEstimate:
    """
    Convex hull of normalized projections on the simplex slice of the positive Weyl chamber.

    Attributes:
        descriptor (GroupDescriptor): Ambient group.
        barycentric (np.ndarray): Hull vertices in simplex coordinates (simple-root values summing to 1), shape (m, r).
        vertices (np.ndarray): The same vertices as unit vectors in the Cartan subspace, shape (m, sum d_i).
        points (np.ndarray): Simplex coordinates of every point the hull was built from.
        depth (int): Depth of the table used.
        wall_margin (float): Smallest simple-root value over the unit hull vertices.
        projection (str): ``jordan`` or ``cartan``.
    """

    descriptor: GroupDescriptor
    barycentric: np.ndarray
    vertices: np.ndarray
    points: np.ndarray = field(repr=False)
    depth: int
    wall_margin: float
    projection: str = "jordan"

    @property
    def degenerate(self) -> bool:
        """True when the hull has empty interior inside the slice."""
        return self.barycentric.shape[0] < self.descriptor.rank


@dataclass(frozen=True, eq=False)
class GrowthIndicatorEstimate:
    """
    Growth indicator sampled on unit directions.

    Values are stored on unit vectors only; ``evaluate`` extends them by homogeneity. A value of
    -inf marks an empty cone, NaN a cone whose counts could not be fitted.

    Attributes:
        descriptor (GroupDescriptor): Ambient group.
        directions (np.ndarray): Unit dominant directions, shape (m, sum d_i).
        values (np.ndarray): Estimated growth rates, shape (m,).
        apertures (np.ndarray): Aperture retained per direction.
        trend (np.ndarray): Rate per aperture of the schedule, shape (m, len(schedule)).
        schedule (tuple[float, ...]): Apertures tried.
        windows (np.ndarray): Fit windows [T_lo, T_hi] per direction, shape (m, 2).
        residuals (np.ndarray): Residual RMS of the retained fit.
        status (tuple[str, ...]): ``ok``, ``empty`` or ``insufficient`` per direction.
        depth (int): Table depth.
        evaluator (Callable | None): Off-grid evaluation of a unit direction, used for refinement.
    """

    descriptor: GroupDescriptor
    directions: np.ndarray
    values: np.ndarray
    apertures: np.ndarray
    trend: np.ndarray
    schedule: tuple[float, ...]
    windows: np.ndarray
    residuals: np.ndarray
    status: tuple[str, ...]
    depth: int = 0
    evaluator: Callable[[np.ndarray], float] | None = field(default=None, repr=False)

    @classmethod
    def synthetic(
        cls, descriptor: GroupDescriptor, directions: np.ndarray, function: Callable[[np.ndarray], float]
    ) -> "GrowthIndicatorEstimate":
        """Estimate whose values come from a known function of the unit direction."""
        directions = np.asarray(directions, dtype=np.float64)
        values = np.array([function(u) for u in directions])
        m = len(values)
        return cls(
            descriptor=descriptor,
            directions=directions,
            values=values,
            apertures=np.zeros(m),
            trend=values[:, None],
            schedule=(0.0,),
            windows=np.zeros((m, 2)),
            residuals=np.zeros(m),
            status=tuple("ok" if np.isfinite(v) else "empty" for v in values),
            evaluator=function,
        )

    def finite(self) -> np.ndarray:
        return np.isfinite(self.values)

    def evaluate(self, v: "CartanVector | np.ndarray") -> float:
        """
        Value at any nonzero vector t u as t times the value at the unit direction u.

        Raises:
            InvalidInputError: If v is zero, or off the grid without an evaluator.
        """
        coords = v.coords if isinstance(v, CartanVector) else np.asarray(v, dtype=np.float64)
        t = float(np.linalg.norm(coords))
        if t == 0:
            raise InvalidInputError("the growth indicator is evaluated on nonzero vectors")
        u = coords / t
        cosines = self.directions @ u
        best = int(np.argmax(cosines))
        if cosines[best] >= 1.0 - Tolerances.IDENTITY:
            return t * float(self.values[best])
        if self.evaluator is None:
            raise InvalidInputError("direction is off the estimate grid and no evaluator is attached")
        return t * float(self.evaluator(u))


@dataclass(frozen=True, eq=False)
class TangentForm:
    """
    Linear form tangent to the growth indicator at a direction.

    Attributes:
        theta (LinearForm): The tangent form.
        base (CartanVector): Unit base direction v.
        gradient (np.ndarray): Gradient estimate at v.
        slack (float): Smallest value of theta(u) - psi(u) over the finite grid directions.
        tolerance (float): Noise tolerance applied to the slack and to theta(v) = psi(v).
    """

    theta: LinearForm
    base: CartanVector
    gradient: np.ndarray
    slack: float
    tolerance: float

    @property
    def dominates(self) -> bool:
        return self.slack >= -self.tolerance


@dataclass(frozen=True, eq=False)
class AdaptedNorm:
    """
    Inner product making v a unit vector orthogonal to ker(theta), equal to the trace form on ker(theta).

    Attributes:
        gram (np.ndarray): Gram matrix on the stacked coordinates.
        base (CartanVector): The unit direction v.
        theta (LinearForm): The form whose kernel is kept.
    """

    gram: np.ndarray
    base: CartanVector
    theta: LinearForm

    def norm(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.float64)
        return np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", coords, self.gram, coords), 0.0))

    def inner(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(np.asarray(x) @ self.gram @ np.asarray(y))
