import numpy as np

from src.core.config.tolerances import Tolerances


def normalize_determinant(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Rescales every matrix of a stack to |det| = 1.

    Args:
        stack (np.ndarray): Array of shape (N, d, d).

    Returns:
        tuple[np.ndarray, np.ndarray]: The rescaled stack and the determinants before rescaling.
    """
    d = stack.shape[-1]
    det = np.linalg.det(stack)
    scale = np.abs(det) ** (1.0 / d)
    scale = np.where(scale > 0, scale, 1.0)
    return stack / scale[:, None, None], det


def canonical_sign(stack: np.ndarray) -> np.ndarray:
    """Flips each matrix so that its first entry of largest absolute value is positive."""
    flat = stack.reshape(stack.shape[0], -1)
    idx = np.argmax(np.abs(flat), axis=1)
    signs = np.sign(flat[np.arange(flat.shape[0]), idx])
    signs[signs == 0] = 1.0
    return stack * signs[:, None, None]


def quantize(stack: np.ndarray, grid: float = Tolerances.QUANTIZATION_GRID) -> np.ndarray:
    """
    Rounds each matrix of a stack on a grid relative to its Frobenius norm.

    Returns an int64 key array of shape (N, d*d); equal keys mean equal matrices up to the grid.
    """
    flat = stack.reshape(stack.shape[0], -1)
    scale = np.linalg.norm(flat, axis=1)
    scale = np.where(scale > 0, scale, 1.0)
    return np.rint(flat / (scale[:, None] * grid)).astype(np.int64)


def descending(values: np.ndarray) -> np.ndarray:
    """Sorts the last axis in non-increasing order (stable for ties)."""
    return -np.sort(-values, axis=-1, kind="stable")


def reciprocal_merge(upper: np.ndarray, lower: np.ndarray) -> np.ndarray:
    """
    Assembles log-spectral coordinates from an element and its inverse.

    ``upper`` holds the descending log-spectrum of g, ``lower`` the descending log-spectrum of g^-1.
    The top half is read from g and the bottom half from g^-1, where each is computed to full
    relative precision; the middle coordinate of an odd dimension closes the trace-zero sum.
    """
    d = upper.shape[-1]
    half = d // 2
    out = np.empty_like(upper)
    out[..., :half] = upper[..., :half]
    out[..., d - half :] = -lower[..., :half][..., ::-1]
    if d % 2:
        out[..., half] = -(out[..., :half].sum(axis=-1) + out[..., d - half :].sum(axis=-1))
    return out


def reversal(d: int) -> np.ndarray:
    """The longest Weyl element w0 as the anti-diagonal permutation matrix."""
    return np.eye(d)[::-1].copy()


def skew_from_vector(coeffs: np.ndarray, d: int) -> np.ndarray:
    """Builds the d x d skew-symmetric matrix whose strict upper triangle is ``coeffs``."""
    out = np.zeros((d, d))
    out[np.triu_indices(d, 1)] = coeffs
    return out - out.T
