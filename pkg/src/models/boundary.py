from dataclasses import dataclass, field

import numpy as np

from src.core.config.tolerances import Tolerances
from src.exceptions.errors import InvalidInputError
from src.models.group import GroupDescriptor
from src.utils.matrices import reversal

# Entries below this are treated as zero when choosing a column's sign.
SIGN_PIVOT = 1e-8


def canonical_columns(frames: np.ndarray) -> np.ndarray:
    """
    Makes the first non-negligible entry of every column positive.

    Args:
        frames (np.ndarray): Array of shape (..., d, d).
    """
    pivots = np.argmax(np.abs(frames) > SIGN_PIVOT, axis=-2)
    values = np.take_along_axis(frames, pivots[..., None, :], axis=-2)[..., 0, :]
    signs = np.where(values < 0, -1.0, 1.0)
    return frames * signs[..., None, :]


@dataclass(frozen=True, eq=False)
class Flag:
    """
    Point of the Furstenberg boundary K/M, one sign-canonical orthonormal frame per factor.

    The i-dimensional subspace of a factor's flag is spanned by the first i columns of its frame.
    """

    descriptor: GroupDescriptor
    frames: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        frames = []
        for frame, d in zip(self.frames, self.descriptor.factor_dims):
            frame = np.asarray(frame, dtype=np.float64)
            if frame.shape != (d, d):
                raise InvalidInputError(f"flag frame has shape {frame.shape}, expected {(d, d)}")
            if np.abs(frame.T @ frame - np.eye(d)).max() > Tolerances.ORTHONORMAL * 100:
                raise InvalidInputError("flag frame is not orthonormal")
            frame = canonical_columns(frame)
            frame.flags.writeable = False
            frames.append(frame)
        if len(frames) != self.descriptor.n_factors:
            raise InvalidInputError("one frame per factor is required")
        object.__setattr__(self, "frames", tuple(frames))

    @classmethod
    def standard(cls, descriptor: GroupDescriptor) -> "Flag":
        """The base flag e+ spanned by the standard basis in order."""
        return cls(descriptor, tuple(np.eye(d) for d in descriptor.factor_dims))

    @classmethod
    def opposite(cls, descriptor: GroupDescriptor) -> "Flag":
        """e- = w0 e+, the standard basis in reverse order."""
        return cls(descriptor, tuple(reversal(d) for d in descriptor.factor_dims))

    @classmethod
    def from_flat(cls, descriptor: GroupDescriptor, flat: np.ndarray) -> "Flag":
        frames, start = [], 0
        for d in descriptor.factor_dims:
            frames.append(np.asarray(flat[start : start + d * d]).reshape(d, d))
            start += d * d
        return cls(descriptor, tuple(frames))

    def flat(self) -> np.ndarray:
        return np.concatenate([frame.ravel() for frame in self.frames])

    def equals(self, other: "Flag", tol: float = Tolerances.IDENTITY) -> bool:
        return all(np.abs(a - b).max() <= tol for a, b in zip(self.frames, other.frames))


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """
    Finite weighted sum of Dirac masses on the Furstenberg boundary.

    Attributes:
        descriptor (GroupDescriptor): Ambient group.
        frames (np.ndarray): Flattened flag frames of the atoms, shape (N, sum d_i^2).
        weights (np.ndarray): Non-negative weights, shape (N,).
        normalized (bool): Whether the weights sum to one.
        words (np.ndarray | None): Padded words of the orbit points the atoms come from.
        lengths (np.ndarray | None): Their word lengths.
    """

    descriptor: GroupDescriptor
    frames: np.ndarray
    weights: np.ndarray
    normalized: bool = True
    words: np.ndarray | None = field(default=None, repr=False)
    lengths: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.frames.shape[0] != self.weights.shape[0]:
            raise InvalidInputError("one frame per weight is required")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise InvalidInputError("atom weights must be finite and non-negative")
        if self.normalized and abs(self.weights.sum() - 1.0) > Tolerances.NORMALIZATION * max(1, len(self.weights)):
            raise InvalidInputError(f"normalized measure has total mass {self.weights.sum()!r}")

    def __len__(self) -> int:
        return int(self.weights.shape[0])

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

