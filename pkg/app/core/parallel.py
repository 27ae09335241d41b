import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from app.core.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """Map `fn` over `items` on at most VNI_THREADS workers; results keep input order."""
    items = list(items)
    workers = max(1, min(threads or settings.VNI_THREADS, len(items) or 1))
    if workers == 1:
        return [fn(item) for item in items]
    logger.debug(f"Mapping {len(items)} items on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
