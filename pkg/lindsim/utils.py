from __future__ import annotations
from collections.abc import Callable, Iterable, Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from itertools import islice
from logging import getLogger
from typing import Any, TypeVar

from numpy import complex128, float64
from numpy.typing import NDArray

LOGGER = getLogger(__name__)

T = TypeVar("T", bound=type[Any])
A = TypeVar("A")
B = TypeVar("B")

ComplexArray = NDArray[complex128]
RealArray = NDArray[float64]


class ArgumentError(ValueError):
    ...


class ResourceLimitError(ArgumentError):
    ...


def no_extra(cls: T) -> T:
    """Make the decorated pydantic model reject unknown keys"""
    cls.model_config["extra"] = "forbid"
    _ = cls.model_rebuild(force=True)
    return cls


def tree_sum(items: Sequence[ComplexArray]) -> ComplexArray:
    """Pairwise sum in a fixed order, independent of how the items were produced"""
    assert items, "nothing to sum"
    level = list(items)
    while len(level) > 1:
        paired = [level[i] + level[i + 1] for i in range(0, len(level) - 1, 2)]
        if len(level) % 2 == 1:
            paired.append(level[-1])
        level = paired
    return level[0]


def ordered_map(
    function: Callable[[A], B], items: Iterable[A], workers: int
) -> Iterator[B]:
    """Map preserving input order, keeping at most a few batches per worker in flight"""
    if workers <= 1:
        yield from map(function, items)
        return
    iterator = iter(items)
    window = 4 * workers
    with ThreadPoolExecutor(max_workers=workers) as pool:
        while True:
            chunk = list(islice(iterator, window))
            if not chunk:
                return
            LOGGER.debug(f"Dispatching {len(chunk)} batches to {workers} workers")
            yield from pool.map(function, chunk)
