from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

from src.core.config.app_settings import settings
from src.core.config.logger import logger

T = TypeVar("T")
R = TypeVar("R")


def map_shards(work: Callable[[T], R], shards: Iterable[T], threads: int | None = None) -> list[R]:
    """
    Applies ``work`` to every shard and returns the results in shard order.

    With one worker the shards run in-process; otherwise a process pool is used. Callers merge the
    results themselves, so the output never depends on the worker count.

    Args:
        work: Picklable function of one shard.
        shards: Work items.
        threads (int | None): Worker count, ``settings.THREADS`` when omitted.
    """
    shards = list(shards)
    workers = min(threads or settings.THREADS, len(shards))
    if workers <= 1:
        return [work(shard) for shard in shards]
    logger.debug(f"Dispatching {len(shards)} shards to {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(work, shards))
