from typing import Sequence

import numpy as np
from scipy.linalg import subspace_angles
from scipy.special import logsumexp

from src.core.config.logger import logger
from src.core.config.tolerances import Tolerances
from src.exceptions.errors import DegenerateMeasureError, InvalidInputError, PreconditionError
from src.models.boundary import AtomicMeasure, Flag
from src.models.group import CartanVector, GroupDescriptor, GroupElement, LinearForm
from src.models.words import GeneratorSystem, OrbitTable, Word
from src.services.enumeration_service import enumeration_service
from src.services.matgroup_service import matgroup_service
from src.utils.matrices import reversal


def _frame_stacks(descriptor: GroupDescriptor, flat: np.ndarray) -> list[np.ndarray]:
    """Splits flattened frames of shape (N, sum d_i^2) into per-factor stacks (N, d, d)."""
    out, start = [], 0
    for d in descriptor.factor_dims:
        out.append(flat[:, start : start + d * d].reshape(-1, d, d))
        start += d * d
    return out


class BoundaryService:
    """Flags, the Iwasawa cocycle, Busemann functions, Hopf coordinates and Patterson-Sullivan atoms."""

    def act(self, g: GroupElement, xi: Flag) -> Flag:
        """The flag g xi: k-part of the Iwasawa decomposition of g k."""
        frames = []
        for matrix, frame in zip(g.factors, xi.frames):
            k, _, _ = matgroup_service.iwasawa_arrays((matrix @ frame)[None])
            frames.append(k[0])
        return Flag(g.descriptor, tuple(frames))

    def cocycle_coords(self, stacks: Sequence[np.ndarray], frames: Sequence[np.ndarray]) -> np.ndarray:
        """
        Batched Iwasawa cocycle.

        Args:
            stacks: Per-factor group elements, each (N, d, d) or (d, d).
            frames: Per-factor flag frames, each (N, d, d).

        Returns:
            np.ndarray: sigma(g, xi) for every pair, shape (N, sum d_i).
        """
        blocks = []
        for g, k in zip(stacks, frames):
            _, a, _ = matgroup_service.iwasawa_arrays(g @ k)
            blocks.append(a)
        return np.concatenate(blocks, axis=-1)

    def iwasawa_cocycle(self, g: GroupElement, xi: Flag) -> CartanVector:
        """
        sigma(g, xi), the A-part of g k where k represents xi.

        Args:
            g (GroupElement): The acting element.
            xi (Flag): A canonical flag.

        Returns:
            CartanVector: The cocycle value.
        """
        g.descriptor.check_same(xi.descriptor)
        coords = self.cocycle_coords([f[None] for f in g.factors], [k[None] for k in xi.frames])[0]
        return CartanVector(g.descriptor, coords)

    def busemann(self, xi: Flag, g: GroupElement, h: GroupElement) -> CartanVector:
        """beta_xi(g, h) = sigma(g^-1, xi) - sigma(h^-1, xi)."""
        return self.iwasawa_cocycle(g.inverse(), xi) - self.iwasawa_cocycle(h.inverse(), xi)

    def busemann_from_identity(self, descriptor: GroupDescriptor, frames: np.ndarray, g: GroupElement) -> np.ndarray:
        """beta_xi(e, g) = -sigma(g^-1, xi) for a batch of flattened frames, shape (N, sum d_i)."""
        stacks = [f[None] for f in g.inverse_factors]
        return -self.cocycle_coords(stacks, _frame_stacks(descriptor, frames))

    def flag_pair(self, g: GroupElement) -> tuple[Flag, Flag]:
        """(g+, g-) = (g P, g w0 P) as canonical flags."""
        plus, minus = [], []
        for matrix, d in zip(g.factors, g.descriptor.factor_dims):
            k, _, _ = matgroup_service.iwasawa_arrays(np.stack([matrix, matrix @ reversal(d)]))
            plus.append(k[0])
            minus.append(k[1])
        return Flag(g.descriptor, tuple(plus)), Flag(g.descriptor, tuple(minus))

    def hopf(self, g: GroupElement) -> tuple[Flag, Flag, CartanVector]:
        """Hopf coordinates (g+, g-, beta_{g-}(e, g))."""
        plus, minus = self.flag_pair(g)
        return plus, minus, self.busemann(minus, GroupElement.identity(g.descriptor), g)

    def transversality_minors(self, xi: Flag, eta: Flag) -> np.ndarray:
        """
        |det [xi_(1..i) | eta_(1..d-i)]| for every factor and every 1 <= i < d.

        The i-dimensional subspace of xi and the (d-i)-dimensional subspace of eta are complementary
        exactly when the stacked frame is invertible.
        """
        values = []
        for a, b, d in zip(xi.frames, eta.frames, xi.descriptor.factor_dims):
            for i in range(1, d):
                values.append(abs(np.linalg.det(np.hstack([a[:, :i], b[:, : d - i]]))))
        return np.asarray(values)

    def stack_minors(self, frames_a: Sequence[np.ndarray], frames_b: Sequence[np.ndarray]) -> np.ndarray:
        """Smallest stacked transversality minor of every pair in two per-factor frame batches, shape (N,)."""
        out = np.full(frames_a[0].shape[0], np.inf)
        for a, b in zip(frames_a, frames_b):
            d = a.shape[-1]
            for i in range(1, d):
                stacked = np.concatenate([a[..., :i], np.broadcast_to(b, a.shape)[..., : d - i]], axis=-1)
                out = np.minimum(out, np.abs(np.linalg.det(stacked)))
        return out

    def in_general_position(self, xi: Flag, eta: Flag, margin: float = Tolerances.TRANSVERSALITY_MARGIN) -> bool:
        """
        Whether xi and eta are transverse with every stacked minor above ``margin``.

        Raises:
            InvalidInputError: If margin is negative.
        """
        if margin < 0:
            raise InvalidInputError(f"margin must be non-negative, got {margin!r}")
        xi.descriptor.check_same(eta.descriptor)
        return bool(np.all(self.transversality_minors(xi, eta) > margin))

    def attracting_flag(self, g: GroupElement) -> Flag:
        """
        Flag spanned by the eigenvectors of g in order of decreasing eigenvalue modulus.

        Raises:
            PreconditionError: If g is not loxodromic.
        """
        if not matgroup_service.is_loxodromic(g):
            raise PreconditionError("attracting flags are defined for loxodromic elements only")
        frames = []
        for matrix in g.factors:
            values, vectors = np.linalg.eig(matrix)
            order = np.argsort(-np.abs(values), kind="stable")
            q, _ = np.linalg.qr(np.real(vectors[:, order]))
            frames.append(q)
        return Flag(g.descriptor, tuple(frames))

    def repelling_flag(self, g: GroupElement) -> Flag:
        return self.attracting_flag(g.inverse())

    def flag_distance(self, xi: Flag, eta: Flag) -> float:
        """Largest principal angle between corresponding partial flags, maximized over levels and factors."""
        xi.descriptor.check_same(eta.descriptor)
        angle = 0.0
        for a, b, d in zip(xi.frames, eta.frames, xi.descriptor.factor_dims):
            for i in range(1, d):
                angle = max(angle, float(np.max(subspace_angles(a[:, :i], b[:, :i]))))
        return angle

    def stack_distances(self, frames_a: Sequence[np.ndarray], frames_b: Sequence[np.ndarray]) -> np.ndarray:
        """
        Batched ``flag_distance`` between per-factor frame stacks.

        Args:
            frames_a: Per-factor arrays of shape (N, d, d).
            frames_b: Per-factor arrays of shape (N, d, d) or (d, d).

        Returns:
            np.ndarray: Distances, shape (N,).
        """
        out = np.zeros(frames_a[0].shape[0])
        for a, b in zip(frames_a, frames_b):
            for i in range(1, a.shape[-1]):
                s = np.linalg.svd(np.swapaxes(a[..., :i], -1, -2) @ b[..., :i], compute_uv=False)
                out = np.maximum(out, np.arccos(np.clip(s.min(axis=-1), -1.0, 1.0)))
        return out

    def flag_distances(self, descriptor: GroupDescriptor, frames: np.ndarray, center: Flag) -> np.ndarray:
        """Batched ``flag_distance`` from flattened frames (N, sum d_i^2) to one flag."""
        return self.stack_distances(_frame_stacks(descriptor, frames), center.frames)

    def ps_atoms(
        self, table: OrbitTable, psi: LinearForm, s: float, norm_floor: float = Tolerances.IDENTITY
    ) -> AtomicMeasure:
        """
        Atomic approximation of a Patterson-Sullivan measure.

        Atoms sit at the attracting flags of the table rows with weights proportional to
        exp(-s psi(mu(gamma))); the identity and rows with ||mu|| <= norm_floor are excluded.

        Args:
            table (OrbitTable): Table enumerated with attracting flags.
            psi (LinearForm): Exponent form.
            s (float): Positive scale.
            norm_floor (float): Norm threshold below which rows are dropped.

        Returns:
            AtomicMeasure: Normalized measure.

        Raises:
            InvalidInputError: If s <= 0 or the table has no flags.
            DegenerateMeasureError: If every weight underflows.
        """
        if s <= 0:
            raise InvalidInputError(f"s must be positive, got {s!r}")
        if not table.has_flags:
            raise InvalidInputError("ps_atoms needs a table enumerated with attracting flags")
        keep = (table.lengths > 0) & (matgroup_service.norms(table.mu) > norm_floor)
        log_w = -s * psi(table.mu[keep])
        if log_w.size == 0 or not np.any(np.isfinite(log_w)):
            raise DegenerateMeasureError()
        weights = np.exp(log_w - logsumexp(log_w))
        if not np.any(weights > 0):
            raise DegenerateMeasureError()
        weights = weights / weights.sum()
        logger.debug(f"PS atoms: {int(keep.sum())} atoms at depth {table.depth}, s={s}")
        return AtomicMeasure(
            descriptor=table.descriptor,
            frames=table.flags[keep],
            weights=weights,
            normalized=True,
            words=table.words[keep],
            lengths=table.lengths[keep],
        )

    def pushforward_cylinders(self, measure: AtomicMeasure, gamma: Word, p: int) -> dict[int, float]:
        """Mass of gamma_* nu on each first-letter cylinder, computed from reduced words gamma w."""
        masses = {letter: 0.0 for letter in (*range(-p, 0), *range(1, p + 1))}
        for row, weight in enumerate(measure.weights):
            letters = measure.words[row, : measure.lengths[row]]
            image = gamma * Word(tuple(int(x) for x in letters))
            if len(image):
                masses[image.letters[0]] += float(weight)
        return masses

    def conformality_residual(
        self,
        gens: GeneratorSystem,
        psi: LinearForm,
        depth: int,
        gamma: Word,
        s: float = 1.0,
        table: OrbitTable | None = None,
    ) -> float:
        """
        Largest relative discrepancy between gamma_* nu and the conformally reweighted nu on cylinders.

        For each first-letter cylinder C, compares gamma_* nu(C) with the sum over atoms xi in C of
        exp(s psi(beta_xi(e, gamma))) nu(xi). Empty cylinders are skipped with a notice.

        Args:
            gens (GeneratorSystem): Generators of the group.
            psi (LinearForm): Exponent form of the atoms.
            depth (int): Enumeration depth L >= 3.
            gamma (Word): Element acting on the measure.
            s (float): Scale passed to ``ps_atoms``.
            table (OrbitTable | None): Pre-enumerated table with flags, reused when given.

        Returns:
            float: The maximal relative discrepancy.
        """
        if depth < 3:
            raise InvalidInputError(f"conformality needs depth >= 3, got {depth}")
        if table is None or table.depth != depth or not table.has_flags:
            table = enumeration_service.enumerate_ball(gens, depth, with_flags=True)
        measure = self.ps_atoms(table, psi, s)
        element = gens.evaluate(gamma)
        factors = np.exp(s * psi(self.busemann_from_identity(gens.descriptor, measure.frames, element)))
        pushed = self.pushforward_cylinders(measure, gamma, gens.p)

        first = measure.words[:, 0]
        residual = 0.0
        for letter, pushed_mass in pushed.items():
            in_cylinder = first == letter
            if not np.any(in_cylinder):
                logger.info(f"Cylinder {letter} is empty and is excluded")
                continue
            direct = float(np.sum(factors[in_cylinder] * measure.weights[in_cylinder]))
            residual = max(residual, abs(pushed_mass - direct) / direct)
        return residual

    def bms_weight(self, g: GroupElement, psi1: LinearForm, psi2: LinearForm) -> float:
        """exp(psi1(beta_{g+}(e, g)) + psi2(beta_{g-}(e, g)))."""
        plus, minus = self.flag_pair(g)
        e = GroupElement.identity(g.descriptor)
        return float(np.exp(psi1(self.busemann(plus, e, g)) + psi2(self.busemann(minus, e, g))))

    def atoms_table(self, measure: AtomicMeasure) -> tuple[list[str], list[list[float]]]:
        """CSV layout of a measure: flattened frame entries followed by the weight."""
        header = [f"f{i}" for i in range(measure.frames.shape[1])] + ["weight"]
        rows = [list(map(float, frame)) + [float(w)] for frame, w in zip(measure.frames, measure.weights)]
        return header, rows


boundary_service = BoundaryService()
