from typing import Sequence

import numpy as np
from scipy.linalg import expm
from scipy.stats import special_ortho_group

from src.core.config.logger import logger
from src.core.config.tolerances import Tolerances
from src.exceptions.errors import DecompositionError, InvalidInputError
from src.models.group import (
    CartanVector,
    GroupDescriptor,
    GroupElement,
    IwasawaDecomposition,
    KAKDecomposition,
)
from src.utils.matrices import descending, reciprocal_merge


def _stacks(g: GroupElement) -> tuple[list[np.ndarray], list[np.ndarray]]:
    return [f[None] for f in g.factors], [f[None] for f in g.inverse_factors]


class MatGroupService:
    """
    Cartan and Jordan projections, the opposition involution, and the Iwasawa and KAK decompositions.

    Every projection has a batched form working on per-factor stacks of shape (N, d, d) and a
    convenience form on a single ``GroupElement``.
    """

    def cartan_coords(self, stacks: Sequence[np.ndarray], inverse_stacks: Sequence[np.ndarray]) -> np.ndarray:
        """
        Cartan projections of a batch of elements.

        Args:
            stacks: Per-factor arrays of shape (N, d, d).
            inverse_stacks: The inverses, in the same layout.

        Returns:
            np.ndarray: Array of shape (N, sum d_i), dominant per factor.
        """
        blocks = []
        for g, gi in zip(stacks, inverse_stacks):
            upper = np.log(np.linalg.svd(g, compute_uv=False))
            lower = np.log(np.linalg.svd(gi, compute_uv=False))
            blocks.append(reciprocal_merge(upper, lower))
        return np.concatenate(blocks, axis=-1)

    def jordan_coords(self, stacks: Sequence[np.ndarray], inverse_stacks: Sequence[np.ndarray]) -> np.ndarray:
        """Jordan projections of a batch of elements, same layout as ``cartan_coords``."""
        blocks = []
        for g, gi in zip(stacks, inverse_stacks):
            upper = np.log(descending(np.abs(np.linalg.eigvals(g))))
            lower = np.log(descending(np.abs(np.linalg.eigvals(gi))))
            blocks.append(reciprocal_merge(upper, lower))
        return np.concatenate(blocks, axis=-1)

    def opposition_coords(self, descriptor: GroupDescriptor, coords: np.ndarray) -> np.ndarray:
        """Reverses and negates every factor block of a batch of coordinates."""
        out = np.empty_like(coords)
        for sl in descriptor.slices:
            out[..., sl] = -coords[..., sl][..., ::-1]
        return out

    def cartan_projection(self, g: GroupElement) -> CartanVector:
        """
        The dominant vector mu(g) with g in K exp(mu(g)) K.

        Args:
            g (GroupElement): The element.

        Returns:
            CartanVector: Descending logarithms of the singular values, per factor.
        """
        coords = self.cartan_coords(*_stacks(g))[0]
        return CartanVector(g.descriptor, coords, dominant=True)

    def jordan_projection(self, g: GroupElement) -> CartanVector:
        """Descending logarithms of the eigenvalue moduli, per factor."""
        coords = self.jordan_coords(*_stacks(g))[0]
        return CartanVector(g.descriptor, coords, dominant=True)

    def opposition_involution(self, v: CartanVector) -> CartanVector:
        return CartanVector(v.descriptor, self.opposition_coords(v.descriptor, v.coords), dominant=v.dominant)

    def is_loxodromic(self, g: GroupElement, margin: float = 0.0) -> bool:
        """
        Whether every factor has simple real spectrum with log-gaps larger than ``margin``.

        Raises:
            InvalidInputError: If margin is negative.
        """
        if margin < 0:
            raise InvalidInputError(f"margin must be non-negative, got {margin!r}")
        gaps = self.jordan_projection(g).simple_roots()
        return bool(np.all(gaps > margin + Tolerances.LOXODROMIC_FLOOR))

    def iwasawa_arrays(self, stack: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Batched QR with positive diagonal: stack = k @ diag(exp(a)) @ n.

        The input may have determinant of either sign; k then carries that sign.

        Args:
            stack (np.ndarray): Array of shape (N, d, d).

        Returns:
            tuple: k of shape (N, d, d), a of shape (N, d) and n of shape (N, d, d).

        Raises:
            DecompositionError: If a diagonal entry of R vanishes numerically.
        """
        q, r = np.linalg.qr(stack)
        diag = np.diagonal(r, axis1=-2, axis2=-1)
        signs = np.where(diag < 0, -1.0, 1.0)
        k = q * signs[..., None, :]
        r = r * signs[..., :, None]
        diag = np.abs(diag)
        if np.any(diag <= np.finfo(float).tiny) or not np.all(np.isfinite(diag)):
            raise DecompositionError("numerically singular input to the Iwasawa decomposition")
        a = np.log(diag)
        # Close the trace-zero sum on the smallest slot.
        a[..., -1] = np.log(np.abs(np.linalg.det(stack))) - a[..., :-1].sum(axis=-1)
        return k, a, r / diag[..., :, None]

    def iwasawa_decompose(self, g: GroupElement) -> IwasawaDecomposition:
        """
        Splits g as k exp(a) n per factor.

        Returns:
            IwasawaDecomposition: k orthogonal with det +1, a = log diag(R), n upper unipotent,
            and the relative recomposition residual.
        """
        ks, coords, ns = [], [], []
        residual = 0.0
        for matrix in g.factors:
            k, a, n = self.iwasawa_arrays(matrix[None])
            recomposed = k[0] @ np.diag(np.exp(a[0])) @ n[0]
            residual = max(residual, float(np.abs(recomposed - matrix).max() / max(1.0, np.abs(matrix).max())))
            ks.append(k[0])
            coords.append(a[0])
            ns.append(n[0])
        if residual > Tolerances.DECOMPOSITION_RESIDUAL:
            raise DecompositionError("Iwasawa recomposition", residual)
        return IwasawaDecomposition(
            k=GroupElement.raw(g.descriptor, ks),
            a=CartanVector(g.descriptor, np.concatenate(coords)),
            n=GroupElement.raw(g.descriptor, ns),
            residual=residual,
        )

    def kak_arrays(self, stack: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Batched SVD with both orthogonal parts in SO(d).

        Returns:
            tuple: u, singular values (descending) and vt, with det(u) = +1.
        """
        u, s, vt = np.linalg.svd(stack)
        flip = np.linalg.det(u) < 0
        u[flip, :, -1] *= -1.0
        vt[flip, -1, :] *= -1.0
        return u, s, vt

    def kak_decompose(self, g: GroupElement) -> KAKDecomposition:
        """
        Splits g as k1 exp(mu) k2.

        When two singular values of a factor agree to ``Tolerances.TIE`` the frames are not unique;
        a valid choice is returned and flagged.

        Returns:
            KAKDecomposition: The parts, the relative residual and the uniqueness flag.
        """
        mu = self.cartan_projection(g)
        k1s, k2s = [], []
        residual, unique = 0.0, True
        for i, matrix in enumerate(g.factors):
            u, s, vt = self.kak_arrays(matrix[None].copy())
            log_s = mu.factor(i)
            if np.any(-np.diff(log_s) < Tolerances.TIE):
                unique = False
            recomposed = u[0] @ np.diag(np.exp(log_s)) @ vt[0]
            residual = max(residual, float(np.abs(recomposed - matrix).max() / max(1.0, np.abs(matrix).max())))
            k1s.append(u[0])
            k2s.append(vt[0])
        if residual > Tolerances.KAK_RESIDUAL:
            raise DecompositionError("KAK recomposition", residual)
        if not unique:
            logger.debug("KAK decomposition of an element with a repeated singular value is not unique")
        return KAKDecomposition(
            k1=GroupElement.raw(g.descriptor, k1s),
            mu=mu,
            k2=GroupElement.raw(g.descriptor, k2s),
            residual=residual,
            unique=unique,
        )

    def inner(self, v: CartanVector, w: CartanVector) -> float:
        """Trace form <v, w>."""
        v.descriptor.check_same(w.descriptor)
        return float(v.coords @ v.descriptor.gram @ w.coords)

    def norm(self, v: CartanVector) -> float:
        return float(np.sqrt(max(self.inner(v, v), 0.0)))

    def norms(self, coords: np.ndarray) -> np.ndarray:
        """Trace norms of a batch of coordinate rows."""
        return np.sqrt(np.einsum("...i,...i->...", coords, coords))

    def exp_cartan(self, v: CartanVector) -> GroupElement:
        """The diagonal element exp(v)."""
        return GroupElement.from_matrices(
            v.descriptor, [np.diag(np.exp(v.factor(i))) for i in range(v.descriptor.n_factors)]
        )

    def exp_algebra(self, descriptor: GroupDescriptor, blocks: Sequence[np.ndarray]) -> GroupElement:
        """Matrix exponential of a Lie algebra element given as one block per factor."""
        return GroupElement.from_matrices(descriptor, [expm(np.asarray(x, dtype=np.float64)) for x in blocks])

    def random_orthogonal(self, descriptor: GroupDescriptor, rng: np.random.Generator) -> GroupElement:
        """Haar-random element of K."""
        return GroupElement.raw(
            descriptor, [special_ortho_group.rvs(d, random_state=rng) for d in descriptor.factor_dims]
        )

    def random_element(self, descriptor: GroupDescriptor, rng: np.random.Generator, scale: float = 1.0) -> GroupElement:
        """exp of a Gaussian trace-zero matrix per factor, with entries of standard deviation ``scale``."""
        blocks = []
        for d in descriptor.factor_dims:
            x = rng.normal(scale=scale, size=(d, d))
            blocks.append(x - np.trace(x) / d * np.eye(d))
        return self.exp_algebra(descriptor, blocks)


matgroup_service = MatGroupService()
