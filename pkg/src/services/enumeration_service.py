from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.core.config.app_settings import settings
from src.core.config.logger import logger
from src.core.config.tolerances import Tolerances
from src.exceptions.errors import (
    ConfigurationError,
    InvalidInputError,
    MatrixOverflowError,
    NonFreeInputError,
    ResourceBudgetError,
)
from src.models.boundary import canonical_columns
from src.models.group import GroupDescriptor, GroupElement
from src.models.words import GeneratorSystem, OrbitTable
from src.services.matgroup_service import matgroup_service
from src.utils.matrices import canonical_sign, normalize_determinant, quantize
from src.utils.pool import map_shards

INVARIANT_KINDS = ("orthogonal-form", "factor-ratio")


@dataclass(frozen=True)
class _ShardJob:
    mats: tuple[np.ndarray, ...]
    invs: tuple[np.ndarray, ...]
    p: int
    first: int
    depth: int
    with_flags: bool


def _letters(p: int) -> np.ndarray:
    return np.concatenate([np.arange(-p, 0), np.arange(1, p + 1)]).astype(np.int16)


def _check_overflow(words: np.ndarray, lengths: np.ndarray, stacks: Sequence[np.ndarray]) -> None:
    for stack in stacks:
        big = np.abs(stack).reshape(stack.shape[0], -1).max(axis=1) > Tolerances.OVERFLOW_CAP
        if np.any(big):
            row = int(np.argmax(big))
            raise MatrixOverflowError(words[row, : lengths[row]].tolist(), Tolerances.OVERFLOW_CAP)


def _flag_columns(stacks: Sequence[np.ndarray]) -> np.ndarray:
    frames = []
    for stack in stacks:
        u, _, _ = matgroup_service.kak_arrays(stack)
        frames.append(canonical_columns(u).reshape(stack.shape[0], -1))
    return np.concatenate(frames, axis=1)


def _expand_shard(job: _ShardJob) -> dict[str, np.ndarray]:
    """All reduced words starting with ``job.first``, level by level, with incremental products."""
    p, depth = job.p, job.depth
    letters = _letters(p)
    words = np.zeros((1, depth), dtype=np.int16)
    words[0, 0] = job.first
    lengths = np.ones(1, dtype=np.int16)
    mats = [m[job.first + p][None] for m in job.mats]
    invs = [m[job.first + p][None] for m in job.invs]

    levels = []
    for k in range(1, depth + 1):
        if k > 1:
            last = words[:, k - 2]
            allowed = letters[None, :] != -last[:, None]
            parent, slot = np.nonzero(allowed)
            new = letters[slot]
            words = words[parent].copy()
            words[:, k - 1] = new
            lengths = np.full(len(parent), k, dtype=np.int16)
            mats = [m[parent] @ gen[new + p] for m, gen in zip(mats, job.mats)]
            invs = [gen[new + p] @ m[parent] for m, gen in zip(invs, job.invs)]
        _check_overflow(words, lengths, mats)
        level = {
            "words": words,
            "lengths": lengths,
            "mu": matgroup_service.cartan_coords(mats, invs),
            "lam": matgroup_service.jordan_coords(mats, invs),
            "keys": np.concatenate([quantize(m) for m in mats], axis=1),
        }
        if job.with_flags:
            level["flags"] = _flag_columns(mats)
        levels.append(level)
    return {name: np.concatenate([level[name] for level in levels]) for name in levels[0]}


def _lex_order(words: np.ndarray, p: int) -> np.ndarray:
    """Row order sorting words lexicographically, a proper prefix before its extensions."""
    keys = np.where(words == 0, -(p + 1), words.astype(np.int32))
    return np.lexsort(keys.T[::-1]) if words.shape[1] else np.arange(words.shape[0])


class EnumerationService:
    """Generator systems, ball enumeration and coset deduplication."""

    def generator_system(
        self,
        descriptor: GroupDescriptor,
        matrices: Sequence[Sequence[np.ndarray]],
        labels: Sequence[str] = (),
        margin: float = 0.0,
        strict: bool = True,
    ) -> GeneratorSystem:
        """
        Validates generator matrices and wraps them into a ``GeneratorSystem``.

        Generators failing ``is_loxodromic`` with the given margin are reported as warnings.

        Args:
            descriptor (GroupDescriptor): Ambient group.
            matrices: For each generator, one matrix per factor.
            labels: Optional generator labels.
            margin (float): Loxodromy margin for the warning.
            strict (bool): Enforce |det| = 1 on the input.

        Returns:
            GeneratorSystem: The validated system.
        """
        generators = tuple(GroupElement.from_matrices(descriptor, m, strict=strict) for m in matrices)
        system = GeneratorSystem(descriptor, generators, tuple(labels))
        for label, g in zip(system.labels, system.generators):
            if not matgroup_service.is_loxodromic(g, margin):
                logger.warning(f"Generator {label} is not loxodromic with margin {margin}")
        return system

    def ball_size(self, p: int, depth: int) -> int:
        """Number of reduced words of length <= depth: 1 + sum 2p(2p-1)^(k-1)."""
        return 1 + sum(2 * p * (2 * p - 1) ** (k - 1) for k in range(1, depth + 1))

    def enumerate_ball(
        self,
        gens: GeneratorSystem,
        depth: int,
        with_flags: bool = False,
        threads: int | None = None,
        budget: int | None = None,
    ) -> OrbitTable:
        """
        Enumerates the ball of radius ``depth`` in the word metric.

        Work is sharded by first letter; every shard expands its subtree level by level, carrying
        products and inverse products incrementally. Shards are merged and sorted lexicographically,
        so the result does not depend on the worker count.

        Args:
            gens (GeneratorSystem): Free generators.
            depth (int): Word-length radius L >= 0.
            with_flags (bool): Also store attracting flags (left KAK frames).
            threads (int | None): Worker count.
            budget (int | None): Row budget, ``settings.MEMORY_BUDGET_ROWS`` when omitted.

        Returns:
            OrbitTable: The sorted table.

        Raises:
            ResourceBudgetError: If the ball has more rows than the budget.
            MatrixOverflowError: If a product has an entry above the overflow cap.
            NonFreeInputError: If two distinct reduced words give the same matrix.
        """
        if depth < 0:
            raise InvalidInputError(f"depth must be non-negative, got {depth}")
        bound = budget if budget is not None else settings.MEMORY_BUDGET_ROWS
        estimated = self.ball_size(gens.p, depth)
        if estimated > bound:
            raise ResourceBudgetError(estimated, bound)
        logger.info(f"Enumerating {estimated} words (p={gens.p}, depth={depth})")

        mats, invs = gens.letter_stacks()
        identity = [np.eye(d)[None] for d in gens.descriptor.factor_dims]
        columns = {
            "words": np.zeros((1, depth), dtype=np.int16),
            "lengths": np.zeros(1, dtype=np.int16),
            "mu": np.zeros((1, gens.descriptor.n_coords)),
            "lam": np.zeros((1, gens.descriptor.n_coords)),
            "keys": np.concatenate([quantize(m) for m in identity], axis=1),
        }
        if with_flags:
            columns["flags"] = _flag_columns(identity)
        parts = [columns]
        if depth > 0:
            jobs = [
                _ShardJob(tuple(mats), tuple(invs), gens.p, int(first), depth, with_flags)
                for first in _letters(gens.p)
            ]
            parts.extend(map_shards(_expand_shard, jobs, threads))
        merged = {name: np.concatenate([part[name] for part in parts]) for name in parts[0]}
        order = _lex_order(merged["words"], gens.p)
        merged = {name: column[order] for name, column in merged.items()}
        self._check_free(gens.descriptor, merged)

        return OrbitTable(
            descriptor=gens.descriptor,
            p=gens.p,
            depth=depth,
            words=np.ascontiguousarray(merged["words"]),
            lengths=merged["lengths"],
            mu=merged["mu"],
            lam=merged["lam"],
            digest=gens.digest(depth),
            flags=merged.get("flags"),
        )

    def _check_free(self, descriptor: GroupDescriptor, merged: dict[str, np.ndarray]) -> None:
        keys = merged["keys"]
        # The sign of a projective factor is not part of the element.
        if any(descriptor.projective_flags):
            keys = self._projective_keys(descriptor, keys)
        _, first, counts = np.unique(keys, axis=0, return_index=True, return_counts=True)
        if np.all(counts == 1):
            return
        clash = int(np.argmax(counts > 1))
        duplicate = np.nonzero(np.all(keys == keys[first[clash]], axis=1))[0]
        a, b = duplicate[0], duplicate[1]
        words, lengths = merged["words"], merged["lengths"]
        raise NonFreeInputError(words[a, : lengths[a]].tolist(), words[b, : lengths[b]].tolist())

    def _projective_keys(self, descriptor: GroupDescriptor, keys: np.ndarray) -> np.ndarray:
        out, start = [], 0
        for d, projective in zip(descriptor.factor_dims, descriptor.projective_flags):
            block = keys[:, start : start + d * d]
            start += d * d
            if projective:
                idx = np.argmax(np.abs(block), axis=1)
                signs = np.sign(block[np.arange(block.shape[0]), idx])
                signs[signs == 0] = 1
                block = block * signs[:, None]
            out.append(block)
        return np.concatenate(out, axis=1)

    def table_matrices(self, table: OrbitTable, gens: GeneratorSystem) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """
        Recomputes the matrices of every row by a vectorized product over the word columns.

        Returns:
            tuple: Per-factor stacks of the elements and of their inverses.
        """
        gens.descriptor.check_same(table.descriptor)
        if gens.p != table.p:
            raise InvalidInputError(f"table has p={table.p}, generator system has p={gens.p}")
        mats, invs = gens.letter_stacks()
        n = len(table)
        out = [np.broadcast_to(np.eye(d), (n, d, d)).copy() for d in gens.descriptor.factor_dims]
        out_inv = [m.copy() for m in out]
        for j in range(table.words.shape[1]):
            idx = table.words[:, j].astype(np.int64) + gens.p
            out = [m @ gen[idx] for m, gen in zip(out, mats)]
            out_inv = [gen[idx] @ m for m, gen in zip(out_inv, invs)]
        return out, out_inv

    def dedup_cosets(
        self,
        table: OrbitTable,
        gens: GeneratorSystem,
        invariant_kind: str,
        form: Sequence[np.ndarray] | None = None,
    ) -> OrbitTable:
        """
        Keeps one row per value of an H-coset invariant.

        ``orthogonal-form`` uses gamma^T J gamma (H the orthogonal group of J, one J per factor).
        ``factor-ratio`` uses g2^-1 g1 on a two-factor group (H the diagonal). Invariants are
        quantized relative to their norm; the representative is the lexicographically least word.

        Raises:
            ConfigurationError: On an unknown invariant kind or a missing form.
        """
        if invariant_kind not in INVARIANT_KINDS:
            raise ConfigurationError(f"unknown invariant kind {invariant_kind!r}, expected one of {INVARIANT_KINDS}")
        mats, invs = self.table_matrices(table, gens)
        if invariant_kind == "orthogonal-form":
            if form is None or len(form) != table.descriptor.n_factors:
                raise ConfigurationError("orthogonal-form deduplication needs one form J per factor")
            invariants = [np.swapaxes(m, -1, -2) @ np.asarray(j, dtype=np.float64) @ m for m, j in zip(mats, form)]
        else:
            if table.descriptor.n_factors != 2 or len(set(table.descriptor.factor_dims)) != 1:
                raise ConfigurationError("factor-ratio deduplication needs two equal factors")
            ratio, _ = normalize_determinant(invs[1] @ mats[0])
            if table.descriptor.projective_flags[0]:
                ratio = canonical_sign(ratio)
            invariants = [ratio]
        keys = np.concatenate([quantize(x) for x in invariants], axis=1)
        _, first = np.unique(keys, axis=0, return_index=True)
        kept = np.sort(first)
        logger.info(f"Coset deduplication ({invariant_kind}) kept {len(kept)} of {len(table)} rows")
        return table.subset(kept)


enumeration_service = EnumerationService()
