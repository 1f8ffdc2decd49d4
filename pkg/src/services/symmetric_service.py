from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from src.core.config.app_settings import settings
from src.core.config.logger import logger
from src.core.config.tolerances import QuadratureDefaults, Tolerances
from src.exceptions.errors import (
    AmbiguityError,
    DecompositionError,
    InvalidInputError,
    NumericalError,
    PreconditionError,
)
from src.models.boundary import Flag
from src.models.group import GroupElement, LinearForm
from src.models.symmetric import BCartanVector, RegionSpec, RootMultiplicity, SymmetricPairDescriptor
from src.models.words import OrbitTable
from src.schemas.results import DomIntegralCheck
from src.services.boundary_service import boundary_service
from src.services.matgroup_service import matgroup_service
from src.utils.matrices import reciprocal_merge


@dataclass(frozen=True, eq=False)
class GCartanBatch:
    """
    Generalized Cartan parts g = h exp(b) k of a batch of elements.

    Attributes:
        h (list[np.ndarray]): Per-factor H-parts, each (N, d, d).
        h_inverse (list[np.ndarray]): Their inverses.
        b (np.ndarray): b-parts as embedded coordinates, shape (N, sum d_i), not sorted.
        k (list[np.ndarray]): Per-factor K-parts in SO(d).
        ambiguous (np.ndarray): Rows whose b lies on a wall of the restricted root system.
        residual (np.ndarray): Relative ||sigma(h) - h|| per row.
        recomposition (np.ndarray): Relative ||h exp(b) k - g|| per row.
    """

    h: list[np.ndarray]
    h_inverse: list[np.ndarray]
    b: np.ndarray
    k: list[np.ndarray]
    ambiguous: np.ndarray
    residual: np.ndarray
    recomposition: np.ndarray


def _log_singular(stack: np.ndarray) -> np.ndarray:
    return np.log(np.linalg.svd(stack, compute_uv=False))


def _relative(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(a - b, axis=(-2, -1)) / np.maximum(np.linalg.norm(b, axis=(-2, -1)), 1.0)


def _unregular(b: np.ndarray) -> np.ndarray:
    """Rows of sorted b-values with two entries closer than the regularity threshold."""
    return np.any(np.abs(np.diff(b, axis=-1)) < Tolerances.REGULARITY, axis=-1)


def _scale_columns(stack: np.ndarray, values: np.ndarray) -> np.ndarray:
    return stack * np.exp(values)[:, None, :]


class SymmetricService:
    """
    The involution sigma, the generalized Cartan decomposition G = H exp(b) K, and the densities and
    regions built on it.
    """

    def sigma_arrays(self, pair: SymmetricPairDescriptor, stacks: Sequence[np.ndarray]) -> list[np.ndarray]:
        """sigma on per-factor stacks (N, d, d)."""
        if pair.kind == "swap":
            return [stacks[1], stacks[0]]
        inverse_t = [np.swapaxes(np.linalg.inv(g), -1, -2) for g in stacks]
        if pair.kind == "riemannian":
            return inverse_t
        j = pair.form
        return [j @ inverse_t[0] @ j]

    def sigma(self, pair: SymmetricPairDescriptor, g: GroupElement) -> GroupElement:
        pair.descriptor.check_same(g.descriptor)
        images = self.sigma_arrays(pair, [f[None] for f in g.factors])
        return GroupElement.raw(g.descriptor, [m[0] for m in images])

    def sigma_algebra(self, pair: SymmetricPairDescriptor, blocks: Sequence[np.ndarray]) -> list[np.ndarray]:
        """Differential of sigma on a Lie algebra element given per factor."""
        if pair.kind == "swap":
            return [blocks[1], blocks[0]]
        if pair.kind == "riemannian":
            return [-x.T for x in blocks]
        j = pair.form
        return [-j @ blocks[0].T @ j]

    def theta_sigma_algebra(self, pair: SymmetricPairDescriptor, blocks: Sequence[np.ndarray]) -> list[np.ndarray]:
        return [-x.T for x in self.sigma_algebra(pair, blocks)]

    def h_residual(self, pair: SymmetricPairDescriptor, h: GroupElement) -> float:
        """Relative Frobenius distance between sigma(h) and h."""
        images = self.sigma_arrays(pair, [f[None] for f in h.factors])
        return max(float(_relative(s[0], f)) for s, f in zip(images, h.factors))

    def h_cartan_coords(
        self, pair: SymmetricPairDescriptor, stacks: Sequence[np.ndarray], inverse_stacks: Sequence[np.ndarray]
    ) -> np.ndarray:
        """
        Sorted b-projections of a batch, as embedded coordinates of shape (N, sum d_i).

        The b-values are half the log singular values of sigma(g)^-1 g (or of g2^-1 g1 for the swap
        pair); the small end is read from the inverse.
        """
        if pair.kind == "riemannian":
            return matgroup_service.cartan_coords(stacks, inverse_stacks)
        if pair.kind == "swap":
            forward = inverse_stacks[1] @ stacks[0]
            backward = inverse_stacks[0] @ stacks[1]
            s = 0.5 * reciprocal_merge(_log_singular(forward), _log_singular(backward))
            return np.concatenate([s, -s], axis=-1)
        j = pair.form
        g, gi = stacks[0], inverse_stacks[0]
        forward = j @ np.swapaxes(g, -1, -2) @ j @ g
        backward = gi @ j @ np.swapaxes(gi, -1, -2) @ j
        return 0.5 * reciprocal_merge(_log_singular(forward), _log_singular(backward))

    def h_cartan_projection(self, g: GroupElement, pair: SymmetricPairDescriptor) -> BCartanVector:
        """
        The dominant b with g in H exp(b) K.

        Raises:
            DecompositionError: If a singular value is not positive and finite.
        """
        pair.descriptor.check_same(g.descriptor)
        with np.errstate(divide="ignore", invalid="ignore"):
            embedded = self.h_cartan_coords(pair, [f[None] for f in g.factors], [f[None] for f in g.inverse_factors])[0]
        if not np.all(np.isfinite(embedded)):
            raise DecompositionError("non-positive singular value in the generalized Cartan projection")
        return BCartanVector(pair, pair.restrict(embedded), dominant=True)

    def gcartan_arrays(self, pair: SymmetricPairDescriptor, stacks: Sequence[np.ndarray]) -> GCartanBatch:
        """Batched generalized Cartan decomposition; nothing is raised, ambiguous rows are flagged."""
        if pair.kind == "riemannian":
            h, hi, b, k = [], [], [], []
            ambiguous = np.zeros(stacks[0].shape[0], dtype=bool)
            recomposition = np.zeros(stacks[0].shape[0])
            for g in stacks:
                u, s, vt = matgroup_service.kak_arrays(g.copy())
                logs = np.log(s)
                h.append(u)
                hi.append(np.swapaxes(u, -1, -2))
                b.append(logs)
                k.append(vt)
                ambiguous |= _unregular(logs)
                recomposition = np.maximum(recomposition, _relative(_scale_columns(u, logs) @ vt, g))
            residual = np.zeros(len(ambiguous))
            return GCartanBatch(h, hi, np.concatenate(b, axis=-1), k, ambiguous, residual, recomposition)

        if pair.kind == "swap":
            g1, g2 = stacks
            u, sv, vt = np.linalg.svd(np.linalg.inv(g2) @ g1)
            flip = np.linalg.det(vt) < 0
            vt[flip, -1, :] *= -1.0
            u[flip, :, -1] *= -1.0
            s = 0.5 * np.log(sv)
            k1, k2 = vt, np.swapaxes(u, -1, -2)
            h1 = _scale_columns(g1 @ np.swapaxes(k1, -1, -2), -s)
            h2 = _scale_columns(g2 @ np.swapaxes(k2, -1, -2), s)
            if pair.descriptor.projective_flags[1]:
                opposite = _relative(-h2, h1) < _relative(h2, h1)
                k2 = np.where(opposite[:, None, None], -k2, k2)
                h2 = np.where(opposite[:, None, None], -h2, h2)
            h_inv = np.linalg.inv(h1)
            residual = _relative(h2, h1)
            recomposition = np.maximum(
                _relative(_scale_columns(h1, s) @ k1, g1), _relative(_scale_columns(h1, -s) @ k2, g2)
            )
            return GCartanBatch(
                h=[h1, h1.copy()],
                h_inverse=[h_inv, h_inv.copy()],
                b=np.concatenate([s, -s], axis=-1),
                k=[k1, k2],
                ambiguous=_unregular(s),
                residual=residual,
                recomposition=recomposition,
            )

        j = pair.form
        g = stacks[0]
        x = j @ np.swapaxes(g, -1, -2) @ j @ g
        u, sv, vt = np.linalg.svd(x)
        b_sorted = 0.5 * np.log(sv)
        blocks = np.einsum("nij,jk,nki->ni", vt, j, u)
        plus = blocks > 0
        ambiguous = _unregular(b_sorted) | (plus.sum(axis=1) != pair.p) | np.any(np.abs(blocks) < 0.5, axis=1)
        order = np.argsort(~plus, axis=1, kind="stable")
        k = np.take_along_axis(vt, order[:, :, None], axis=1)
        b = np.take_along_axis(b_sorted, order, axis=1)
        flip = np.linalg.det(k) < 0
        k[flip, -1, :] *= -1.0
        h = _scale_columns(g @ np.swapaxes(k, -1, -2), -b)
        h_inv = np.linalg.inv(h)
        sigma_h = j @ np.swapaxes(h_inv, -1, -2) @ j
        residual = _relative(sigma_h, h)
        recomposition = _relative(_scale_columns(h, b) @ k, g)
        return GCartanBatch([h], [h_inv], b, [k], ambiguous, residual, recomposition)

    def gcartan_decompose(
        self, g: GroupElement, pair: SymmetricPairDescriptor
    ) -> tuple[GroupElement, BCartanVector, GroupElement]:
        """
        Splits g as h exp(b) k with sigma(h) = h and k in K.

        Args:
            g (GroupElement): The element.
            pair (SymmetricPairDescriptor): The symmetric pair.

        Returns:
            tuple: h, b (arranged consistently with h, not necessarily dominant) and k.

        Raises:
            AmbiguityError: If b lies on a wall of the restricted root system.
            DecompositionError: If sigma(h) differs from h by more than H_MEMBERSHIP, or the parts do
                not recompose g to GCARTAN_RECOMPOSITION.
        """
        pair.descriptor.check_same(g.descriptor)
        batch = self.gcartan_arrays(pair, [f[None] for f in g.factors])
        if batch.ambiguous[0]:
            raise AmbiguityError("b lies on a wall of the restricted root system")
        if batch.residual[0] > Tolerances.H_MEMBERSHIP:
            raise DecompositionError("H-part fails sigma(h) = h", float(batch.residual[0]))
        if batch.recomposition[0] > Tolerances.GCARTAN_RECOMPOSITION:
            raise DecompositionError("generalized Cartan recomposition", float(batch.recomposition[0]))
        h = GroupElement.raw(g.descriptor, [m[0] for m in batch.h])
        k = GroupElement.raw(g.descriptor, [m[0] for m in batch.k])
        return h, BCartanVector.from_embedded(pair, batch.b[0]), k

    def multiplicities(self, pair: SymmetricPairDescriptor) -> tuple[RootMultiplicity, ...]:
        """Positive restricted roots with the eigenspace dimensions of theta sigma on each root space."""
        return _multiplicities(pair)

    def xi_density(self, b: BCartanVector, pair: SymmetricPairDescriptor | None = None) -> float:
        """Product over positive restricted roots of sinh(alpha(b))^plus cosh(alpha(b))^minus."""
        pair = pair or b.pair
        embedded = b.embedded
        value = 1.0
        for entry in self.multiplicities(pair):
            alpha = float(entry(embedded))
            value *= np.sinh(alpha) ** entry.plus * np.cosh(alpha) ** entry.minus
        return float(value)

    def skinning_weight(
        self, h0: GroupElement, p: GroupElement, theta: LinearForm, pair: SymmetricPairDescriptor
    ) -> float:
        """
        exp(theta(beta_{h0+}(e, h0 p))) for p in the intersection of H with the minimal parabolic.

        Raises:
            PreconditionError: If p is not diagonal per factor or not fixed by sigma.
        """
        for factor in p.factors:
            off = factor - np.diag(np.diag(factor))
            if np.abs(off).max() > Tolerances.H_MEMBERSHIP * max(1.0, float(np.abs(factor).max())):
                raise PreconditionError("p is not in the intersection of H with the minimal parabolic")
        if self.h_residual(pair, p) > Tolerances.H_MEMBERSHIP:
            raise PreconditionError("p is not fixed by sigma")
        plus, _ = boundary_service.flag_pair(h0)
        beta = boundary_service.busemann(plus, GroupElement.identity(h0.descriptor), h0 @ p)
        return float(np.exp(theta(beta)))

    def sample_h(self, pair: SymmetricPairDescriptor, rng: np.random.Generator, scale: float = 0.5) -> GroupElement:
        """exp((X + sigma X) / 2) for a Gaussian trace-zero X."""
        blocks = []
        for d in pair.descriptor.factor_dims:
            x = rng.normal(scale=scale, size=(d, d))
            blocks.append(x - np.trace(x) / d * np.eye(d))
        images = self.sigma_algebra(pair, blocks)
        return matgroup_service.exp_algebra(pair.descriptor, [0.5 * (x + y) for x, y in zip(blocks, images)])

    def region_interval(
        self, w: BCartanVector | np.ndarray, radius: float, region: RegionSpec
    ) -> tuple[float, float] | None:
        """
        The set of t > 0 with t v + sqrt(t) w in the region and of norm below ``radius``.

        The upper end solves t^2 + t |w|^2 = T^2; the lower end is the first time the ray enters the
        cone, where v + s w leaves it for s = 1 / sqrt(t).

        Args:
            w (BCartanVector | np.ndarray): Vector of b orthogonal to v and in ker(theta).
            radius (float): Truncation radius T > 0.
            region (RegionSpec): The cone with its base direction and norm.

        Returns:
            tuple[float, float] | None: The interval [t_w, t_max], or None when empty.
        """
        if radius <= 0:
            raise InvalidInputError(f"radius must be positive, got {radius!r}")
        coords = w.coords if isinstance(w, BCartanVector) else np.asarray(w, dtype=np.float64)
        theta = region.theta_coords
        if abs(float(theta @ coords)) > Tolerances.IDENTITY * max(1.0, float(np.linalg.norm(coords))):
            raise InvalidInputError("w must lie in ker(theta)")
        if region.norm is not None:
            inner = region.norm.inner(region.pair.embed(region.base), region.pair.embed(coords))
        else:
            inner = float(region.base @ coords)
        if abs(inner) > Tolerances.IDENTITY * max(1.0, float(np.linalg.norm(coords))):
            raise InvalidInputError("w must be orthogonal to v in the adapted norm")

        size = float(region.size(coords)[0])
        upper = 0.5 * (-(size**2) + np.sqrt(size**4 + 4 * radius**2))
        heading = region.inequalities @ region.base
        drift = region.inequalities @ coords
        leaving = drift < 0
        if not np.any(leaving):
            lower = 0.0
        else:
            exit_step = float(np.min(heading[leaving] / -drift[leaving]))
            lower = 1.0 / exit_step**2
        if lower >= upper:
            return None
        return lower, float(upper)

    def dom_integral_check(
        self,
        delta: float,
        r: int,
        r0: int,
        w_norm: float,
        radius: float,
        aperture: float = QuadratureDefaults.APERTURE,
    ) -> DomIntegralCheck:
        """
        Normalized integral of t^((r0-r)/2) e^(delta t) over the round-cone interval, its limit and its bound.

        The integral is exp(-delta T) T^((r-r0)/2) times the integral over [t_w, t_max] with
        t_w = |w|^2 / tan^2(aperture). It is computed in the shifted variable s = t - T and truncated
        where e^(delta s) drops below e^-TAIL_EXPONENT. For r - r0 >= 2 the lower end is clamped to 1.

        Raises:
            InvalidInputError: On delta <= 0, r < r0 < 1, or an empty interval.
            NumericalError: If the quadrature does not converge.
        """
        if delta <= 0:
            raise InvalidInputError(f"delta must be positive, got {delta!r}")
        if not 1 <= r0 <= r:
            raise InvalidInputError(f"need r >= r0 >= 1, got r={r}, r0={r0}")
        if not 0 < aperture < np.pi / 2:
            raise InvalidInputError(f"aperture must lie in (0, pi/2), got {aperture!r}")
        exponent = (r0 - r) / 2
        tan2 = np.tan(aperture) ** 2
        lower = w_norm**2 / tan2
        upper = 0.5 * (-(w_norm**2) + np.sqrt(w_norm**4 + 4 * radius**2))
        if r - r0 >= 2:
            lower = max(lower, QuadratureDefaults.SINGULAR_FLOOR)
        if lower >= upper:
            raise InvalidInputError(f"the interval is empty for |w| = {w_norm} and T = {radius}")

        start = max(lower - radius, -QuadratureDefaults.TAIL_EXPONENT / delta)
        stop = upper - radius

        def integrand(s: float) -> float:
            return (1.0 + s / radius) ** exponent * np.exp(delta * s)

        numeric, error = quad(
            integrand, start, stop, epsrel=QuadratureDefaults.EPSREL, limit=QuadratureDefaults.LIMIT
        )
        if not np.isfinite(numeric) or error > 1e-6 * max(abs(numeric), 1e-300):
            raise NumericalError(f"quadrature did not converge (estimate {numeric!r}, error {error!r})")
        c = 0.5 * (1 - (1 + 4 * (1 / tan2 + 1 / tan2**2)) ** -0.5)
        limit = np.exp(-delta * w_norm**2 / 2) / delta
        bound = np.exp(-c * delta * w_norm**2) / delta
        return DomIntegralCheck(
            numeric=float(numeric),
            limit=float(limit),
            bound=float(bound),
            within_bound=bool(numeric <= bound * (1 + QuadratureDefaults.BOUND_SLACK)),
            relative_gap=float(abs(numeric - limit) / limit),
        )

    def in_h_orbit(self, pair: SymmetricPairDescriptor, flag: Flag) -> bool:
        """Whether a flag lies in the H-orbit of the base flag e+."""
        if pair.kind == "riemannian":
            return True
        if pair.kind == "swap":
            return boundary_service.stack_distances(
                [flag.frames[0][None]], [flag.frames[1]]
            )[0] <= Tolerances.TRANSVERSALITY_MARGIN
        frame, j = flag.frames[0], pair.form
        for i in range(1, frame.shape[0]):
            restricted = np.linalg.eigvalsh(frame[:, :i].T @ j @ frame[:, :i])
            if np.min(np.abs(restricted)) < Tolerances.TRANSVERSALITY_MARGIN:
                return False
            if int(np.sum(restricted > 0)) != min(i, pair.p):
                return False
        return True

    def limit_set_containment(
        self, pair: SymmetricPairDescriptor, table: OrbitTable, samples: int = 200, seed: int | None = None
    ) -> float:
        """Fraction of sampled attracting flags of the longest words that lie in H P / P."""
        if not table.has_flags:
            raise InvalidInputError("limit-set sampling needs a table enumerated with attracting flags")
        rows = np.flatnonzero(table.lengths == table.depth)
        if rows.size == 0:
            raise InvalidInputError("the table has no word of maximal length")
        rng = np.random.default_rng(settings.SEED if seed is None else seed)
        chosen = rng.choice(rows, size=min(samples, rows.size), replace=False)
        inside = sum(self.in_h_orbit(pair, table.flag(int(i))) for i in chosen)
        fraction = inside / len(chosen)
        logger.info(f"Sampled limit set: {fraction:.3f} of {len(chosen)} flags lie in H P / P")
        return float(fraction)


@lru_cache(maxsize=None)
def _multiplicities(pair: SymmetricPairDescriptor) -> tuple[RootMultiplicity, ...]:
    """
    Brute-force count: elementary matrices E_ij are root vectors for the diagonal subalgebra; they are
    grouped by the restriction of their root to b, and theta sigma is diagonalized on every group.
    """
    descriptor = pair.descriptor
    basis = pair.b_basis
    reference = pair.restrict(pair.reference)
    groups: dict[tuple[float, ...], list[tuple[int, int, int]]] = {}
    for f, (sl, d) in enumerate(zip(descriptor.slices, descriptor.factor_dims)):
        for i in range(d):
            for j in range(d):
                if i == j:
                    continue
                functional = basis[sl.start + i] - basis[sl.start + j]
                if np.abs(functional).max() < 1e-9 or functional @ reference <= 0:
                    continue
                groups.setdefault(tuple(np.round(functional, 9)), []).append((f, i, j))

    table = []
    for key, members in sorted(groups.items(), key=lambda item: -float(np.asarray(item[0]) @ reference)):
        operator = np.zeros((len(members), len(members)))
        position = {m: idx for idx, m in enumerate(members)}
        for col, (f, i, j) in enumerate(members):
            blocks = [np.zeros((d, d)) for d in descriptor.factor_dims]
            blocks[f][i, j] = 1.0
            image = SymmetricService().theta_sigma_algebra(pair, blocks)
            leftover = 0.0
            for g, block in enumerate(image):
                for a, b in zip(*np.nonzero(np.abs(block) > 1e-12)):
                    if (g, a, b) in position:
                        operator[position[(g, a, b)], col] = block[a, b]
                    else:
                        leftover += abs(block[a, b])
            if leftover > 1e-9:
                raise NumericalError("theta sigma does not preserve a restricted root space")
        eigenvalues = np.linalg.eigvals(operator).real
        root = basis @ np.asarray(key)
        table.append(
            RootMultiplicity(
                root=tuple(float(x) for x in root),
                plus=int(np.sum(eigenvalues > 0)),
                minus=int(np.sum(eigenvalues < 0)),
            )
        )
    return tuple(table)


symmetric_service = SymmetricService()
