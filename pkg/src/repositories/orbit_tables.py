import struct
from pathlib import Path

import numpy as np

from src.core.config.app_settings import settings
from src.core.config.logger import logger
from src.exceptions.errors import CorruptCacheError, StaleCacheError
from src.models.group import GroupDescriptor
from src.models.words import GeneratorSystem, OrbitTable
from src.utils.repository import AbstractRepository

MAGIC = b"ANOSOV1\0"
VERSION = 1
FLAG_FRAMES = 1
SUFFIX = ".orbit"


def _row_dtype(depth: int, n_coords: int, frame_size: int) -> np.dtype:
    """Packed little-endian row layout; letters are right-padded with 0 to ``depth``."""
    fields = [
        ("length", "<u2"),
        ("letters", "<i2", (depth,)),
        ("mu", "<f8", (n_coords,)),
        ("lam", "<f8", (n_coords,)),
    ]
    if frame_size:
        fields.append(("frames", "<f8", (frame_size,)))
    return np.dtype(fields)


class OrbitTableRepository(AbstractRepository[OrbitTable]):
    """
    Orbit tables cached as binary files under a directory.

    A file starts with ``MAGIC`` and a little-endian header (u32 version, p, depth, factor count,
    the factor dims, a u32 flag word, the 32-byte digest, u64 row count), followed by fixed-size rows.
    Files are named after the digest, so one generator system and depth map to one file.
    """

    def __init__(self, cache_dir: Path | None = None) -> None:
        self.cache_dir = Path(cache_dir) if cache_dir is not None else settings.CACHE_DIR

    def path_for(self, gens: GeneratorSystem, depth: int) -> Path:
        return self.cache_dir / f"{gens.digest(depth).hex()[:24]}-L{depth}{SUFFIX}"

    def save_table(self, table: OrbitTable, path: Path) -> Path:
        """Writes the table; the file appears atomically under its final name."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        dims = table.descriptor.factor_dims
        frame_size = sum(d * d for d in dims) if table.has_flags else 0
        header = MAGIC + struct.pack(f"<4I{len(dims)}I", VERSION, table.p, table.depth, len(dims), *dims)
        header += struct.pack("<I", FLAG_FRAMES if table.has_flags else 0) + table.digest
        header += struct.pack("<Q", len(table))

        rows = np.zeros(len(table), dtype=_row_dtype(table.depth, table.descriptor.n_coords, frame_size))
        rows["length"] = table.lengths
        rows["letters"] = table.words
        rows["mu"] = table.mu
        rows["lam"] = table.lam
        if frame_size:
            rows["frames"] = table.flags

        staging = path.with_suffix(path.suffix + ".tmp")
        with open(staging, "wb") as handle:
            handle.write(header)
            handle.write(rows.tobytes())
        staging.replace(path)
        logger.debug(f"Saved {len(table)} rows to {path}")
        return path

    def load_table(self, path: Path, gens: GeneratorSystem | None = None) -> OrbitTable:
        """
        Reads a table back bit-exactly.

        Args:
            path (Path): Cache file.
            gens (GeneratorSystem | None): Generators the table must have been built from. They also
                supply the projective flags; without them even factors are taken projective.

        Raises:
            StaleCacheError: If the stored digest differs from the one of ``gens``.
            CorruptCacheError: On a bad magic, an unknown version or a truncated payload.
        """
        path = Path(path)
        data = path.read_bytes()
        view = memoryview(data)
        if data[: len(MAGIC)] != MAGIC:
            raise CorruptCacheError(path, "bad magic")
        offset = len(MAGIC)
        try:
            version, p, depth, n_factors = struct.unpack_from("<4I", view, offset)
            offset += 16
            if version != VERSION:
                raise CorruptCacheError(path, f"unsupported version {version}")
            dims = struct.unpack_from(f"<{n_factors}I", view, offset)
            offset += 4 * n_factors
            (flag_word,) = struct.unpack_from("<I", view, offset)
            offset += 4
            digest = bytes(view[offset : offset + 32])
            offset += 32
            (count,) = struct.unpack_from("<Q", view, offset)
            offset += 8
        except struct.error:
            raise CorruptCacheError(path, "truncated header")
        if len(digest) != 32:
            raise CorruptCacheError(path, "truncated header")

        if gens is not None:
            if gens.descriptor.factor_dims != tuple(dims) or gens.digest(depth) != digest:
                raise StaleCacheError(path)
            descriptor = gens.descriptor
        else:
            try:
                descriptor = GroupDescriptor.standard(dims)
            except Exception as err:
                raise CorruptCacheError(path, str(err))

        frame_size = sum(d * d for d in dims) if flag_word & FLAG_FRAMES else 0
        dtype = _row_dtype(depth, descriptor.n_coords, frame_size)
        if len(data) - offset != count * dtype.itemsize:
            raise CorruptCacheError(path, f"expected {count} rows of {dtype.itemsize} bytes")
        rows = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
        return OrbitTable(
            descriptor=descriptor,
            p=p,
            depth=depth,
            words=rows["letters"].astype(np.int16),
            lengths=rows["length"].astype(np.int16),
            mu=rows["mu"].astype(np.float64),
            lam=rows["lam"].astype(np.float64),
            digest=digest,
            flags=rows["frames"].astype(np.float64) if frame_size else None,
        )

    def add_one(self, item: tuple[OrbitTable, GeneratorSystem]) -> Path:
        table, gens = item
        return self.save_table(table, self.path_for(gens, table.depth))

    def find_one(self, gens: GeneratorSystem, depth: int) -> OrbitTable:
        """
        Raises:
            FileNotFoundError: If no table is cached for these generators and depth.
        """
        return self.load_table(self.path_for(gens, depth), gens)

    def find_one_or_none(self, gens: GeneratorSystem, depth: int, with_flags: bool = False) -> OrbitTable | None:
        """The cached table, or None when it is missing or lacks the requested flags."""
        path = self.path_for(gens, depth)
        if not path.exists():
            return None
        table = self.load_table(path, gens)
        if with_flags and not table.has_flags:
            logger.info(f"Cached table {path.name} has no flags; it will be rebuilt")
            return None
        return table

    def delete_one(self, gens: GeneratorSystem, depth: int) -> None:
        self.path_for(gens, depth).unlink(missing_ok=True)

    def find_all(self) -> list[Path]:
        if not self.cache_dir.is_dir():
            return []
        return sorted(self.cache_dir.glob(f"*{SUFFIX}"))
