from dataclasses import dataclass, field
from typing import Any

import numpy as np

from src.exceptions.errors import ConfigurationError, InvalidInputError
from src.models.group import GroupDescriptor
from src.schemas.results import CountReport


@dataclass(frozen=True, eq=False)
class CountingRegion:
    """
    Region of the positive Weyl chamber used to filter orbit points.

    With neither a center nor inequalities the region is the whole chamber. A center and an aperture
    give the round cone of points within that angle of the center; inequalities A x >= 0 give a
    polyhedral cone. Both restrictions apply when both are present.
    """

    descriptor: GroupDescriptor
    center: np.ndarray | None = None
    aperture: float | None = None
    inequalities: np.ndarray | None = None
    name: str = "chamber"

    def __post_init__(self) -> None:
        n = self.descriptor.n_coords
        if self.center is not None:
            center = np.asarray(self.center, dtype=np.float64)
            if center.shape != (n,):
                raise ConfigurationError(f"region center has shape {center.shape}, group has {n} coordinates")
            norm = np.linalg.norm(center)
            if norm == 0:
                raise ConfigurationError("region center must be nonzero")
            object.__setattr__(self, "center", center / norm)
            if self.aperture is None or not 0 < self.aperture < np.pi:
                raise ConfigurationError(f"cone aperture must lie in (0, pi), got {self.aperture!r}")
        if self.inequalities is not None:
            a = np.atleast_2d(np.asarray(self.inequalities, dtype=np.float64))
            if a.shape[1] != n:
                raise ConfigurationError(f"region inequalities have {a.shape[1]} columns, group has {n} coordinates")
            object.__setattr__(self, "inequalities", a)

    @classmethod
    def cone(cls, descriptor: GroupDescriptor, center: np.ndarray, aperture: float) -> "CountingRegion":
        return cls(descriptor, center=center, aperture=aperture, name="cone")

    def contains(self, coords: np.ndarray) -> np.ndarray:
        """Membership mask for rows of shape (N, sum d_i)."""
        coords = np.atleast_2d(coords)
        mask = np.ones(coords.shape[0], dtype=bool)
        if self.center is not None:
            norms = np.linalg.norm(coords, axis=1)
            safe = np.where(norms > 0, norms, 1.0)
            mask &= (norms > 0) & (coords @ self.center >= np.cos(self.aperture) * safe)
        if self.inequalities is not None:
            mask &= np.all(coords @ self.inequalities.T >= 0, axis=1)
        return mask


@dataclass(frozen=True, eq=False)
class CountRecord:
    """
    Counting series N(T) on a uniform grid.

    Attributes:
        t (np.ndarray): Grid of radii.
        n (np.ndarray): Counts, integer-valued and nondecreasing.
        metadata (dict): Depth, region, norm and deduplication mode.
    """

    t: np.ndarray
    n: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=np.float64)
        n = np.asarray(self.n)
        if t.shape != n.shape or t.ndim != 1:
            raise InvalidInputError("count grid and counts must be one-dimensional of equal length")
        if np.any(n != np.rint(n)):
            raise InvalidInputError("counts must be integer-valued")
        n = np.rint(n)
        # synthetic series may exceed int64; they stay integer-valued floats
        if n.size == 0 or np.abs(n).max() < 2.0**62:
            n = n.astype(np.int64)
        if np.any(np.diff(n) < 0):
            raise InvalidInputError("counts must be nondecreasing in T")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "n", n)

    def __len__(self) -> int:
        return int(self.t.shape[0])

    def log_n(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.n.astype(np.float64))


@dataclass(frozen=True, eq=False)
class CountOutcome:
    """
    A counting series with its summary report.

    Attributes:
        record (CountRecord): N(T) on the grid.
        report (CountReport): Fits and diagnostics.
    """

    record: CountRecord
    report: CountReport
