import hashlib
import string
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from src.exceptions.errors import InvalidInputError
from src.models.boundary import Flag
from src.models.group import GroupDescriptor, GroupElement


@dataclass(frozen=True)
class Word:
    """
    Reduced word in the free group on p generators.

    Letters are signed generator indices: ``k`` stands for the k-th generator and ``-k`` for its inverse.
    """

    letters: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        letters = tuple(int(x) for x in self.letters)
        object.__setattr__(self, "letters", letters)
        if any(x == 0 for x in letters):
            raise InvalidInputError("letter 0 is not a generator index")
        for a, b in zip(letters, letters[1:]):
            if a == -b:
                raise InvalidInputError(f"word {letters} is not reduced")

    @classmethod
    def reduce(cls, letters: Sequence[int]) -> "Word":
        """Free reduction of an arbitrary letter sequence."""
        stack: list[int] = []
        for x in letters:
            if stack and stack[-1] == -x:
                stack.pop()
            else:
                stack.append(int(x))
        return cls(tuple(stack))

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[int]:
        return iter(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return Word.reduce(self.letters + other.letters)

    def inverse(self) -> "Word":
        return Word(tuple(-x for x in reversed(self.letters)))

    def render(self, labels: Sequence[str]) -> str:
        return "".join(labels[x - 1].lower() if x > 0 else labels[-x - 1].upper() for x in self.letters)


def default_labels(p: int) -> tuple[str, ...]:
    return tuple(string.ascii_lowercase[:p])


@dataclass(frozen=True, eq=False)
class GeneratorSystem:
    """
    Free generators gamma_1, ..., gamma_p of a discrete subgroup.

    Attributes:
        descriptor (GroupDescriptor): Ambient group.
        generators (tuple[GroupElement, ...]): The generators; inverses travel inside each element.
        labels (tuple[str, ...]): One single-character label per generator.
    """

    descriptor: GroupDescriptor
    generators: tuple[GroupElement, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if len(self.generators) < 2:
            raise InvalidInputError(f"a generator system needs p >= 2 generators, got {len(self.generators)}")
        for g in self.generators:
            self.descriptor.check_same(g.descriptor)
        labels = tuple(self.labels) or default_labels(len(self.generators))
        if len(labels) != len(self.generators) or len({label.lower() for label in labels}) != len(labels):
            raise InvalidInputError("labels must be distinct, one per generator")
        object.__setattr__(self, "labels", labels)

    @property
    def p(self) -> int:
        return len(self.generators)

    def element(self, letter: int) -> GroupElement:
        g = self.generators[abs(letter) - 1]
        return g if letter > 0 else g.inverse()

    def evaluate(self, word: Word) -> GroupElement:
        """Naive left-to-right product of the letters of ``word``."""
        out = GroupElement.identity(self.descriptor)
        for letter in word:
            out = out @ self.element(letter)
        return out

    def letter_stacks(self) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """
        Per-factor stacks indexed by ``letter + p``; slot p holds the identity.

        Returns:
            tuple: Matrices and their inverses, each a list of arrays of shape (2p+1, d, d).
        """
        mats, invs = [], []
        for f, d in enumerate(self.descriptor.factor_dims):
            m = np.empty((2 * self.p + 1, d, d))
            mi = np.empty_like(m)
            m[self.p] = mi[self.p] = np.eye(d)
            for i, g in enumerate(self.generators, start=1):
                m[self.p + i], mi[self.p + i] = g.factors[f], g.inverse_factors[f]
                m[self.p - i], mi[self.p - i] = g.inverse_factors[f], g.factors[f]
            mats.append(m)
            invs.append(mi)
        return mats, invs

    def digest(self, depth: int) -> bytes:
        """sha256 over the factor dims, the generator matrices (little-endian f64) and the depth."""
        h = hashlib.sha256()
        h.update(np.asarray(self.descriptor.factor_dims, dtype="<u4").tobytes())
        for g in self.generators:
            for matrix in g.factors:
                h.update(np.ascontiguousarray(matrix, dtype="<f8").tobytes())
        h.update(np.asarray([depth], dtype="<u4").tobytes())
        return h.digest()


@dataclass(frozen=True, eq=False)
class OrbitTable:
    """
    Columnar record of the ball of radius ``depth`` in the word metric.

    Attributes:
        descriptor (GroupDescriptor): Ambient group.
        p (int): Number of generators.
        depth (int): Word-length radius L.
        words (np.ndarray): int16 letters, shape (N, L), right-padded with 0.
        lengths (np.ndarray): Word lengths, shape (N,).
        mu (np.ndarray): Cartan projections, shape (N, sum d_i).
        lam (np.ndarray): Jordan projections, shape (N, sum d_i).
        digest (bytes): Digest of the generator matrices and the depth.
        flags (np.ndarray | None): Attracting flag frames flattened per factor, shape (N, sum d_i^2).
    """

    descriptor: GroupDescriptor
    p: int
    depth: int
    words: np.ndarray
    lengths: np.ndarray
    mu: np.ndarray
    lam: np.ndarray
    digest: bytes
    flags: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        n = self.lengths.shape[0]
        for name in ("words", "mu", "lam"):
            if getattr(self, name).shape[0] != n:
                raise InvalidInputError(f"column {name} has {getattr(self, name).shape[0]} rows, expected {n}")
        if self.flags is not None and self.flags.shape[0] != n:
            raise InvalidInputError("flag column length mismatch")
        for name in ("words", "lengths", "mu", "lam", "flags"):
            column = getattr(self, name)
            if column is not None:
                column.flags.writeable = False

    def __len__(self) -> int:
        return int(self.lengths.shape[0])

    @property
    def has_flags(self) -> bool:
        return self.flags is not None

    def word(self, i: int) -> Word:
        return Word(tuple(int(x) for x in self.words[i, : self.lengths[i]]))

    def flag(self, i: int) -> Flag:
        if self.flags is None:
            raise InvalidInputError("table was enumerated without attracting flags")
        return Flag.from_flat(self.descriptor, self.flags[i])

    def subset(self, mask_or_index: np.ndarray) -> "OrbitTable":
        """Rows selected by a boolean mask or an index array, order preserved."""
        return OrbitTable(
            descriptor=self.descriptor,
            p=self.p,
            depth=self.depth,
            words=self.words[mask_or_index],
            lengths=self.lengths[mask_or_index],
            mu=self.mu[mask_or_index],
            lam=self.lam[mask_or_index],
            digest=self.digest,
            flags=None if self.flags is None else self.flags[mask_or_index],
        )

    def truncate(self, depth: int, gens: GeneratorSystem) -> "OrbitTable":
        """
        The sub-ball of word length <= depth, with the digest of a table enumerated at that depth.

        Raises:
            InvalidInputError: If the table was not enumerated from ``gens`` or depth exceeds its own.
        """
        if gens.digest(self.depth) != self.digest:
            raise InvalidInputError("the table was not enumerated from these generators")
        if not 0 <= depth <= self.depth:
            raise InvalidInputError(f"cannot truncate a depth-{self.depth} table to depth {depth}")
        sub = self.subset(self.lengths <= depth)
        return OrbitTable(
            descriptor=sub.descriptor,
            p=sub.p,
            depth=depth,
            words=np.ascontiguousarray(sub.words[:, :depth]),
            lengths=sub.lengths,
            mu=sub.mu,
            lam=sub.lam,
            digest=gens.digest(depth),
            flags=sub.flags,
        )
